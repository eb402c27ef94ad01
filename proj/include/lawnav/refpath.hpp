#ifndef LAWNAV_REFPATH_HPP
#define LAWNAV_REFPATH_HPP

#include "dtw.hpp"
#include "worldsim.hpp"

#include <string>
#include <vector>

namespace lawnav
{

/// Waypoint density of a reference path.
struct PathKind
{
    enum class Tag : std::uint8_t
    {
        Pano,
        Step,
        Resampled,
    };

    Tag tag = Tag::Pano;
    int count = 0; // waypoint count for Resampled

    static PathKind pano() noexcept { return {Tag::Pano, 0}; }
    static PathKind step() noexcept { return {Tag::Step, 0}; }
    static PathKind resampled(int k) noexcept { return {Tag::Resampled, k}; }

    std::string name() const
    {
        switch (tag) {
        case Tag::Pano: return "pano";
        case Tag::Step: return "step";
        case Tag::Resampled: return "law-" + std::to_string(count);
        }
        return "?";
    }

    friend bool operator==(const PathKind&, const PathKind&) = default;
};

struct WaypointPath
{
    std::vector<Point> points;
    PathKind kind;

    std::size_t size() const noexcept { return points.size(); }
    const Point& operator[](std::size_t i) const noexcept { return points[i]; }
    const Point& front() const noexcept { return points.front(); }
    const Point& back() const noexcept { return points.back(); }

    friend bool operator==(const WaypointPath&, const WaypointPath&) = default;
};

/// Index of the most recently reached waypoint; never decreases within an episode.
struct ProgressState
{
    std::size_t last_reached = 0;
};

/// Point at arc length s along a polyline (clamped to its ends).
inline Point point_at_arclength(const std::vector<Point>& poly, double s)
{
    if (poly.empty()) throw InvalidArgument("empty polyline");
    if (s <= 0.0) return poly.front();
    for (std::size_t i = 1; i < poly.size(); ++i) {
        const double seg = distance(poly[i - 1], poly[i]);
        if (s <= seg) return seg > 0.0 ? poly[i - 1] + (poly[i] - poly[i - 1]) * (s / seg) : poly[i];
        s -= seg;
    }
    return poly.back();
}

namespace detail
{

// Splits one geodesic segment into n equal arc pieces, lengthening n until every
// consecutive geodesic gap is within the step size.
inline void append_step_segment(const GridMap& map, Point from, Point to, std::vector<Point>& out)
{
    const auto seg = shortest_path(map, from, to);
    const double len = polyline_length(seg);
    const int base = std::max(1, static_cast<int>(std::ceil(len / kStepSize - 1e-9)));
    for (int n = base; n <= 4 * base + 8; ++n) {
        std::vector<Point> pts;
        pts.reserve(static_cast<std::size_t>(n));
        for (int j = 1; j < n; ++j) pts.push_back(point_at_arclength(seg, len * j / n));
        pts.push_back(to);
        bool ok = true;
        Point prev = from;
        for (const Point& p : pts) {
            if (geodesic_distance(map, prev, p) > kStepSize + 1e-6) {
                ok = false;
                break;
            }
            prev = p;
        }
        if (ok || n == 4 * base + 8) {
            out.insert(out.end(), pts.begin(), pts.end());
            return;
        }
    }
}

} // namespace detail

/// Connects consecutive pano waypoints by shortest paths and samples them every 0.25 m
/// of arc length. Every pano point is kept.
inline WaypointPath densify_to_steps(const GridMap& map, const WaypointPath& pano)
{
    if (pano.kind.tag != PathKind::Tag::Pano) throw InvalidArgument("densify_to_steps expects a pano path");
    if (pano.points.empty()) throw InvalidArgument("densify_to_steps: empty path");
    WaypointPath step{{pano.points.front()}, PathKind::step()};
    for (std::size_t i = 1; i < pano.size(); ++i) detail::append_step_segment(map, pano[i - 1], pano[i], step.points);
    return step;
}

/// LAW#k waypoints: the start plus k points at arc lengths i*L/k along the step path,
/// so the spacing is L/k and the last point is the goal (k = 1 is goal-only).
inline WaypointPath resample_equidistant(const GridMap& map, const WaypointPath& step, int k)
{
    if (k < 1) throw InvalidArgument("resample_equidistant needs k >= 1");
    if (step.size() < 2) throw InvalidArgument("resample_equidistant needs at least two points");
    std::vector<std::vector<Point>> segs;
    std::vector<double> lens;
    double total = 0.0;
    for (std::size_t i = 1; i < step.size(); ++i) {
        segs.push_back(shortest_path(map, step[i - 1], step[i]));
        lens.push_back(polyline_length(segs.back()));
        total += lens.back();
    }
    WaypointPath out{{}, PathKind::resampled(k)};
    out.points.reserve(static_cast<std::size_t>(k) + 1);
    out.points.push_back(step.front());
    std::size_t seg = 0;
    double seg_start = 0.0;
    for (int i = 1; i < k; ++i) {
        const double s = total * i / k;
        while (seg + 1 < segs.size() && s > seg_start + lens[seg]) {
            seg_start += lens[seg];
            ++seg;
        }
        out.points.push_back(point_at_arclength(segs[seg], s - seg_start));
    }
    out.points.push_back(step.back());
    return out;
}

/// Result of a nearest-waypoint query.
struct NearestWaypoint
{
    std::size_t index = 0;
    double distance = kInfinity;
};

inline constexpr double kTieTolerance = 1e-9;

/// Runs the nearest-waypoint query on a search rooted at x's cell. The search is left
/// positioned so callers can keep expanding it toward a chosen target.
inline NearestWaypoint nearest_waypoint_search(GridSearch& search, Point x, const WaypointPath& path,
                                               std::size_t first_index)
{
    const GridMap& map = search.map();
    std::vector<std::pair<int, std::size_t>> cells; // (cell, waypoint index), sorted
    for (std::size_t j = first_index; j < path.size(); ++j)
        if (auto c = map.cell_of(path[j]); c && !map.blocked(*c)) cells.emplace_back(*c, j);
    std::sort(cells.begin(), cells.end());

    // any candidate's geodesic is at least its cell distance minus both snap offsets
    const double slack = map.resolution() * std::sqrt(2.0) + 1e-9;
    NearestWaypoint best;
    auto consider = [&](int cell) {
        auto [lo, hi] = std::equal_range(cells.begin(), cells.end(), std::pair<int, std::size_t>{cell, 0},
                                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto it = lo; it != hi; ++it) {
            const double g = search.geodesic(x, path[it->second]);
            if (g < best.distance - kTieTolerance ||
                (std::abs(g - best.distance) <= kTieTolerance && it->second > best.index) ||
                best.distance == kInfinity) {
                best = {it->second, g};
            }
        }
    };
    // cells settled before this call (search reuse) are still candidates
    for (const auto& [cell, j] : cells)
        if (search.settled(cell)) consider(cell);
    while (search.frontier() <= best.distance + slack) {
        const int c = search.step();
        if (c < 0) break;
        consider(c);
    }
    if (best.distance == kInfinity) throw DisconnectedError("no reachable waypoint");
    return best;
}

/// Index j >= progress.last_reached (or any j when use_window is false) minimizing the
/// geodesic distance from x to waypoint j; near-ties resolve toward the larger index.
inline std::size_t nearest_waypoint(Point x, const WaypointPath& path, const ProgressState& progress,
                                    const GridMap& map, bool use_window = true)
{
    if (path.points.empty()) throw InvalidArgument("nearest_waypoint: empty path");
    if (!map.is_free(x)) throw DisconnectedError("nearest_waypoint: query point is blocked");
    GridSearch search(map, *map.cell_of(x));
    const std::size_t lo = use_window ? std::min(progress.last_reached, path.size() - 1) : 0;
    return nearest_waypoint_search(search, x, path, lo).index;
}

/// Shortest path start->goal sampled at step spacing: the comparison baseline for
/// path divergence.
inline WaypointPath shortest_step_path(const GridMap& map, Point start, Point goal)
{
    return densify_to_steps(map, WaypointPath{{start, goal}, PathKind::pano()});
}

/// nDTW of the step-sampled shortest path against the step reference path. 1 when the
/// reference is the shortest path, smaller as the reference detours.
inline double path_divergence(const GridMap& map, const WaypointPath& step_reference)
{
    if (step_reference.size() < 1) throw InvalidArgument("path_divergence: empty reference");
    const auto shortest = shortest_step_path(map, step_reference.front(), step_reference.back());
    return ndtw(shortest.points, step_reference.points, kSuccessDistance);
}

} // namespace lawnav

#endif // LAWNAV_REFPATH_HPP
