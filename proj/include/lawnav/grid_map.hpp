#ifndef LAWNAV_GRID_MAP_HPP
#define LAWNAV_GRID_MAP_HPP

#include "core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lawnav
{

/// Cell rectangle [x0, x1) x [y0, y1) tagged with a landmark token id.
struct Region
{
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int landmark = 0;

    bool contains(int cx, int cy) const noexcept { return cx >= x0 && cx < x1 && cy >= y0 && cy < y1; }
    friend bool operator==(const Region&, const Region&) = default;
};

/// Occupancy grid with metric resolution. Immutable once built; cell (cx, cy) covers
/// [cx*res, (cx+1)*res) x [cy*res, (cy+1)*res) and is stored row-major.
class GridMap
{
  public:
    GridMap() = default;

    GridMap(int width, int height, double resolution, std::vector<std::uint8_t> occupancy,
            std::vector<Region> regions = {})
        : width_(width), height_(height), resolution_(resolution), occupancy_(std::move(occupancy)),
          regions_(std::move(regions))
    {
        if (width < 3 || height < 3) throw InvalidArgument("grid map must be at least 3x3 cells");
        if (!(resolution > 0.0)) throw InvalidArgument("grid resolution must be positive");
        if (occupancy_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw InvalidArgument("occupancy length " + std::to_string(occupancy_.size()) +
                                  " does not match " + std::to_string(width) + "x" + std::to_string(height));
        for (auto& v : occupancy_) v = v ? 1 : 0;
        for (int x = 0; x < width; ++x)
            if (!blocked(x, 0) || !blocked(x, height - 1))
                throw InvalidArgument("border cells must be blocked");
        for (int y = 0; y < height; ++y)
            if (!blocked(0, y) || !blocked(width - 1, y))
                throw InvalidArgument("border cells must be blocked");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    double resolution() const noexcept { return resolution_; }
    int cell_count() const noexcept { return width_ * height_; }
    const std::vector<std::uint8_t>& occupancy() const noexcept { return occupancy_; }
    const std::vector<Region>& regions() const noexcept { return regions_; }

    int index(int cx, int cy) const noexcept { return cy * width_ + cx; }
    int cell_x(int idx) const noexcept { return idx % width_; }
    int cell_y(int idx) const noexcept { return idx / width_; }

    bool in_bounds(int cx, int cy) const noexcept { return cx >= 0 && cy >= 0 && cx < width_ && cy < height_; }

    bool blocked(int cx, int cy) const noexcept
    {
        return !in_bounds(cx, cy) || occupancy_[static_cast<std::size_t>(index(cx, cy))] != 0;
    }
    bool blocked(int idx) const noexcept { return occupancy_[static_cast<std::size_t>(idx)] != 0; }

    /// Cell index containing p, or nullopt when p lies outside the grid.
    std::optional<int> cell_of(Point p) const noexcept
    {
        const double gx = std::floor(p.x / resolution_);
        const double gy = std::floor(p.y / resolution_);
        if (!(gx >= 0.0 && gy >= 0.0 && gx < width_ && gy < height_)) return std::nullopt;
        return index(static_cast<int>(gx), static_cast<int>(gy));
    }

    bool is_free(Point p) const noexcept
    {
        const auto c = cell_of(p);
        return c && !blocked(*c);
    }

    Point cell_center(int idx) const noexcept
    {
        return {(cell_x(idx) + 0.5) * resolution_, (cell_y(idx) + 0.5) * resolution_};
    }

    /// Landmark of the first region containing p.
    std::optional<int> landmark_at(Point p) const noexcept
    {
        const auto c = cell_of(p);
        if (!c) return std::nullopt;
        const int cx = cell_x(*c), cy = cell_y(*c);
        for (const auto& r : regions_)
            if (r.contains(cx, cy)) return r.landmark;
        return std::nullopt;
    }

    std::size_t free_cell_count() const noexcept
    {
        return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{0}));
    }

    friend bool operator==(const GridMap&, const GridMap&) = default;

  private:
    int width_ = 0;
    int height_ = 0;
    double resolution_ = 0.1;
    std::vector<std::uint8_t> occupancy_;
    std::vector<Region> regions_;
};

/// Mutable staging area for a GridMap; starts open with a blocked border.
class GridBuilder
{
  public:
    GridBuilder(int width, int height, double resolution = 0.1)
        : width_(width), height_(height), resolution_(resolution),
          occupancy_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0)
    {
        if (width < 3 || height < 3) throw InvalidArgument("grid map must be at least 3x3 cells");
        for (int x = 0; x < width; ++x) set(x, 0, true), set(x, height - 1, true);
        for (int y = 0; y < height; ++y) set(0, y, true), set(width - 1, y, true);
    }

    /// Builder sized to cover the given extent in meters (plus the border ring).
    static GridBuilder with_extent(double width_m, double height_m, double resolution = 0.1)
    {
        return GridBuilder(static_cast<int>(std::ceil(width_m / resolution)) + 2,
                           static_cast<int>(std::ceil(height_m / resolution)) + 2, resolution);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    double resolution() const noexcept { return resolution_; }

    GridBuilder& set(int cx, int cy, bool blocked)
    {
        if (cx >= 0 && cy >= 0 && cx < width_ && cy < height_)
            occupancy_[static_cast<std::size_t>(cy * width_ + cx)] = blocked ? 1 : 0;
        return *this;
    }

    bool blocked(int cx, int cy) const noexcept
    {
        return cx < 0 || cy < 0 || cx >= width_ || cy >= height_ ||
               occupancy_[static_cast<std::size_t>(cy * width_ + cx)] != 0;
    }

    /// Fills the cell rectangle [x0, x1) x [y0, y1).
    GridBuilder& fill_cells(int x0, int y0, int x1, int y1, bool blocked = true)
    {
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) set(x, y, blocked);
        return *this;
    }

    /// Fills every cell whose area intersects the metric rectangle.
    GridBuilder& fill_rect(double x0, double y0, double x1, double y1, bool blocked = true)
    {
        const int cx0 = static_cast<int>(std::floor(x0 / resolution_));
        const int cy0 = static_cast<int>(std::floor(y0 / resolution_));
        const int cx1 = static_cast<int>(std::ceil(x1 / resolution_));
        const int cy1 = static_cast<int>(std::ceil(y1 / resolution_));
        return fill_cells(cx0, cy0, std::max(cx1, cx0 + 1), std::max(cy1, cy0 + 1), blocked);
    }

    GridBuilder& add_region(Region r)
    {
        regions_.push_back(r);
        return *this;
    }

    GridMap build() const
    {
        auto occ = occupancy_;
        // the border is re-asserted here so callers cannot open it by accident
        for (int x = 0; x < width_; ++x)
            occ[static_cast<std::size_t>(x)] = occ[static_cast<std::size_t>((height_ - 1) * width_ + x)] = 1;
        for (int y = 0; y < height_; ++y)
            occ[static_cast<std::size_t>(y * width_)] = occ[static_cast<std::size_t>(y * width_ + width_ - 1)] = 1;
        return GridMap(width_, height_, resolution_, std::move(occ), regions_);
    }

  private:
    int width_;
    int height_;
    double resolution_;
    std::vector<std::uint8_t> occupancy_;
    std::vector<Region> regions_;
};

} // namespace lawnav

#endif // LAWNAV_GRID_MAP_HPP
