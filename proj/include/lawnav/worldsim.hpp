#ifndef LAWNAV_WORLDSIM_HPP
#define LAWNAV_WORLDSIM_HPP

#include "core.hpp"
#include "grid_map.hpp"

#include <array>
#include <memory>
#include <optional>
#include <vector>

namespace lawnav
{

// kinematics -----------------------------------------------------------------

/// Advances the agent by one action. Forward is sampled every resolution/2 along the
/// 0.25 m segment and stops at the last free sample; collisions never throw.
inline Pose apply_action(const GridMap& map, const Pose& pose, ActionType action)
{
    switch (action) {
    case ActionType::Stop: return pose;
    case ActionType::Left: return {pose.x, pose.y, wrap_angle(pose.heading + kTurnAngle)};
    case ActionType::Right: return {pose.x, pose.y, wrap_angle(pose.heading - kTurnAngle)};
    case ActionType::Forward: break;
    }
    const Point start = pose.position();
    const Point delta{kStepSize * std::cos(pose.heading), kStepSize * std::sin(pose.heading)};
    const int samples = static_cast<int>(std::ceil(kStepSize / (0.5 * map.resolution()) - 1e-9));
    Point last = start;
    for (int i = 1; i <= samples; ++i) {
        const Point q = start + delta * (static_cast<double>(i) / samples);
        if (!map.is_free(q)) break;
        last = q;
    }
    return {last.x, last.y, pose.heading};
}

/// True when a Forward from this pose cannot move at all.
inline bool forward_blocked(const GridMap& map, const Pose& pose)
{
    const Pose next = apply_action(map, pose, ActionType::Forward);
    return next.x == pose.x && next.y == pose.y;
}

/// Collision check of the straight segment a-b, sampled every resolution/4.
inline bool segment_free(const GridMap& map, Point a, Point b)
{
    const double len = distance(a, b);
    const int samples = std::max(1, static_cast<int>(std::ceil(len / (0.25 * map.resolution()))));
    for (int i = 0; i <= samples; ++i)
        if (!map.is_free(a + (b - a) * (static_cast<double>(i) / samples))) return false;
    return true;
}

// grid search ----------------------------------------------------------------

namespace detail
{

struct SearchWorkspace
{
    std::vector<double> dist;
    std::vector<int> parent;
    std::vector<int> first_hop;
    std::vector<std::uint32_t> seen;    // == generation when dist/parent valid
    std::vector<std::uint32_t> settled; // == generation when final
    std::vector<std::pair<double, int>> heap;
    std::uint32_t generation = 0;

    void prepare(std::size_t n)
    {
        if (dist.size() < n) {
            dist.resize(n);
            parent.resize(n);
            first_hop.resize(n);
            seen.assign(n, 0);
            settled.assign(n, 0);
            generation = 0;
        }
        heap.clear();
        if (++generation == 0) {
            std::fill(seen.begin(), seen.end(), 0);
            std::fill(settled.begin(), settled.end(), 0);
            generation = 1;
        }
    }
};

inline std::vector<std::unique_ptr<SearchWorkspace>>& workspace_pool()
{
    thread_local std::vector<std::unique_ptr<SearchWorkspace>> pool;
    return pool;
}

struct WorkspaceReturn
{
    void operator()(SearchWorkspace* ws) const noexcept
    {
        try {
            auto& pool = workspace_pool();
            if (pool.size() < 16) {
                pool.emplace_back(ws);
                return;
            }
        } catch (...) {
        }
        delete ws;
    }
};

using WorkspaceHandle = std::unique_ptr<SearchWorkspace, WorkspaceReturn>;

inline WorkspaceHandle acquire_workspace(std::size_t n)
{
    auto& pool = workspace_pool();
    SearchWorkspace* ws = nullptr;
    if (!pool.empty()) {
        ws = pool.back().release();
        pool.pop_back();
    } else {
        ws = new SearchWorkspace();
    }
    ws->prepare(n);
    return WorkspaceHandle(ws);
}

} // namespace detail

/// Incremental Dijkstra over the 8-connected free cells of a map. Straight moves cost
/// resolution, diagonal moves sqrt(2)*resolution and are only allowed when both
/// adjacent orthogonal cells are free. Ties pop in cell-index order. Among equal-length
/// parents the one nearest the straight line from the source wins, so paths in open space
/// stay close to the direct line; every parent is settled before its child, so the
/// shortest-path tree of a settled cell is independent of when the search stops.
class GridSearch
{
  public:
    GridSearch(const GridMap& map, int source_cell)
        : map_(&map), source_(source_cell), ws_(detail::acquire_workspace(static_cast<std::size_t>(map.cell_count())))
    {
        auto& w = *ws_;
        w.dist[static_cast<std::size_t>(source_)] = 0.0;
        w.parent[static_cast<std::size_t>(source_)] = -1;
        w.first_hop[static_cast<std::size_t>(source_)] = -1;
        w.seen[static_cast<std::size_t>(source_)] = w.generation;
        push(0.0, source_);
    }

    int source() const noexcept { return source_; }
    const GridMap& map() const noexcept { return *map_; }

    bool reached(int c) const noexcept { return ws_->seen[static_cast<std::size_t>(c)] == ws_->generation; }
    bool settled(int c) const noexcept { return ws_->settled[static_cast<std::size_t>(c)] == ws_->generation; }
    double dist(int c) const noexcept { return reached(c) ? ws_->dist[static_cast<std::size_t>(c)] : kInfinity; }
    int parent(int c) const noexcept { return ws_->parent[static_cast<std::size_t>(c)]; }
    int first_hop(int c) const noexcept { return ws_->first_hop[static_cast<std::size_t>(c)]; }

    /// Distance of the next cell to be settled, or infinity when exhausted.
    double frontier() noexcept
    {
        auto& w = *ws_;
        while (!w.heap.empty()) {
            const auto [d, c] = w.heap.front();
            if (settled(c) || d > w.dist[static_cast<std::size_t>(c)]) {
                pop();
                continue;
            }
            return d;
        }
        return kInfinity;
    }

    /// Settles one more cell; returns it, or -1 when the component is exhausted.
    int step()
    {
        auto& w = *ws_;
        while (!w.heap.empty()) {
            const auto [d, c] = pop();
            if (settled(c) || d > w.dist[static_cast<std::size_t>(c)]) continue;
            w.settled[static_cast<std::size_t>(c)] = w.generation;
            relax(c);
            return c;
        }
        return -1;
    }

    bool settle(int target)
    {
        while (!settled(target))
            if (step() < 0) return false;
        return true;
    }

    void run_all()
    {
        while (step() >= 0) {
        }
    }

    /// Length of the polyline from `from` (inside the source cell) to `to`: the straight
    /// hop to the first interior cell center, the grid path between interior cells, and
    /// the straight hop from the last interior center. Requires to's cell settled.
    double geodesic(Point from, Point to) const
    {
        const int target = *map_->cell_of(to);
        if (target == source_) return distance(from, to);
        const int last = parent(target);
        if (last == source_) return distance(from, to);
        const int first = first_hop(target);
        return distance(from, map_->cell_center(first)) + (dist(last) - dist(first)) +
               distance(map_->cell_center(last), to);
    }

    /// The polyline measured by geodesic().
    std::vector<Point> path(Point from, Point to) const
    {
        const int target = *map_->cell_of(to);
        std::vector<Point> out{from};
        if (target != source_) {
            std::vector<int> chain;
            for (int c = parent(target); c != source_; c = parent(c)) chain.push_back(c);
            for (auto it = chain.rbegin(); it != chain.rend(); ++it) out.push_back(map_->cell_center(*it));
        }
        if (!(to == from)) out.push_back(to);
        return out;
    }

  private:
    static constexpr double kTieSlack = 1e-9;

    // distance (in cells) of cell c from the line through the source and cell n
    double off_line(int c, int n) const noexcept
    {
        const auto& m = *map_;
        const double sx = m.cell_x(source_), sy = m.cell_y(source_);
        const double dx = m.cell_x(n) - sx, dy = m.cell_y(n) - sy;
        const double len = std::hypot(dx, dy);
        if (len == 0.0) return 0.0;
        return std::abs((m.cell_x(c) - sx) * dy - (m.cell_y(c) - sy) * dx) / len;
    }

    void push(double d, int c)
    {
        auto& h = ws_->heap;
        h.emplace_back(d, c);
        std::push_heap(h.begin(), h.end(), std::greater<>{});
    }

    std::pair<double, int> pop()
    {
        auto& h = ws_->heap;
        std::pop_heap(h.begin(), h.end(), std::greater<>{});
        auto top = h.back();
        h.pop_back();
        return top;
    }

    void relax(int c)
    {
        static constexpr std::array<std::array<int, 2>, 8> kMoves{
            {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
        const auto& m = *map_;
        auto& w = *ws_;
        const int cx = m.cell_x(c), cy = m.cell_y(c);
        const double straight = m.resolution();
        const double diagonal = std::sqrt(2.0) * m.resolution();
        const double base = w.dist[static_cast<std::size_t>(c)];
        for (const auto& [dx, dy] : kMoves) {
            const int nx = cx + dx, ny = cy + dy;
            if (m.blocked(nx, ny)) continue;
            const bool diag = dx != 0 && dy != 0;
            if (diag && (m.blocked(cx + dx, cy) || m.blocked(cx, cy + dy))) continue;
            const int n = m.index(nx, ny);
            if (settled(n)) continue;
            const double nd = base + (diag ? diagonal : straight);
            const auto ni = static_cast<std::size_t>(n);
            if (!reached(n) || nd < w.dist[ni] - kTieSlack) {
                w.dist[ni] = nd;
                w.parent[ni] = c;
                w.first_hop[ni] = (c == source_) ? n : w.first_hop[static_cast<std::size_t>(c)];
                w.seen[ni] = w.generation;
                push(nd, n);
            } else if (nd <= w.dist[ni] + kTieSlack && off_line(c, n) < off_line(w.parent[ni], n) - 1e-12) {
                // equal-length alternative: keep the staircase that hugs the straight line from
                // the source (dist is left alone so the queued entry stays valid)
                w.parent[ni] = c;
                w.first_hop[ni] = (c == source_) ? n : w.first_hop[static_cast<std::size_t>(c)];
            }
        }
    }

    const GridMap* map_;
    int source_;
    detail::WorkspaceHandle ws_;
};

/// Geodesic distance from a to b; kInfinity when either point is blocked or the
/// two are not connected.
inline double geodesic_distance(const GridMap& map, Point a, Point b)
{
    if (!map.is_free(a) || !map.is_free(b)) return kInfinity;
    GridSearch search(map, *map.cell_of(a));
    if (!search.settle(*map.cell_of(b))) return kInfinity;
    return search.geodesic(a, b);
}

/// Free-space polyline from a to b whose length equals geodesic_distance(a, b).
inline std::vector<Point> shortest_path(const GridMap& map, Point a, Point b)
{
    if (!map.is_free(a) || !map.is_free(b)) throw DisconnectedError("shortest_path endpoint is blocked");
    GridSearch search(map, *map.cell_of(a));
    if (!search.settle(*map.cell_of(b))) throw DisconnectedError("shortest_path endpoints are not connected");
    return search.path(a, b);
}

inline double polyline_length(const std::vector<Point>& pts) noexcept
{
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
    return total;
}

/// Complete single-source search rooted at a point. distance_to(p) equals
/// geodesic_distance(origin, p) exactly.
class DistanceField
{
  public:
    DistanceField(const GridMap& map, Point origin) : origin_(origin)
    {
        if (!map.is_free(origin)) throw DisconnectedError("distance field origin is blocked");
        search_.emplace(map, *map.cell_of(origin));
        search_->run_all();
    }

    Point origin() const noexcept { return origin_; }

    double distance_to(Point p) const
    {
        const auto c = search_->map().cell_of(p);
        if (!c || search_->map().blocked(*c) || !search_->settled(*c)) return kInfinity;
        return search_->geodesic(origin_, p);
    }

    /// Polyline from p to the origin (reverse of the origin-rooted path).
    std::vector<Point> path_from(Point p) const
    {
        const auto c = search_->map().cell_of(p);
        if (!c || search_->map().blocked(*c) || !search_->settled(*c))
            throw DisconnectedError("no path to distance field origin");
        auto pts = search_->path(origin_, p);
        std::reverse(pts.begin(), pts.end());
        return pts;
    }

  private:
    Point origin_;
    std::optional<GridSearch> search_;
};

// sensing --------------------------------------------------------------------

/// Distance along a ray to the first blocked cell (exact grid traversal), clamped to max_range.
inline double cast_ray(const GridMap& map, Point origin, double angle, double max_range)
{
    const double res = map.resolution();
    const double gx = origin.x / res, gy = origin.y / res;
    int ix = static_cast<int>(std::floor(gx)), iy = static_cast<int>(std::floor(gy));
    if (map.blocked(ix, iy)) return 0.0;
    const double dx = std::cos(angle), dy = std::sin(angle);
    const int step_x = dx > 0 ? 1 : -1;
    const int step_y = dy > 0 ? 1 : -1;
    const double t_delta_x = dx != 0.0 ? std::abs(1.0 / dx) : kInfinity;
    const double t_delta_y = dy != 0.0 ? std::abs(1.0 / dy) : kInfinity;
    double t_max_x = dx != 0.0 ? ((ix + (dx > 0 ? 1 : 0)) - gx) / dx : kInfinity;
    double t_max_y = dy != 0.0 ? ((iy + (dy > 0 ? 1 : 0)) - gy) / dy : kInfinity;
    const double limit = max_range / res;
    for (;;) {
        double t;
        if (t_max_x < t_max_y) {
            t = t_max_x;
            ix += step_x;
            t_max_x += t_delta_x;
        } else {
            t = t_max_y;
            iy += step_y;
            t_max_y += t_delta_y;
        }
        if (t >= limit) return max_range;
        if (map.blocked(ix, iy)) return t * res;
    }
}

struct ScanConfig
{
    int n_rays = 9;
    double fov = deg2rad(90.0);
    double max_range = 5.0;
};

/// Ranges along n_rays rays evenly spanning fov centered on the heading, ordered from
/// the rightmost ray (heading - fov/2) to the leftmost.
inline std::vector<double> raycast_scan(const GridMap& map, const Pose& pose, int n_rays, double fov, double max_range)
{
    if (n_rays < 1) throw InvalidArgument("raycast_scan needs at least one ray");
    std::vector<double> ranges(static_cast<std::size_t>(n_rays));
    for (int i = 0; i < n_rays; ++i) {
        const double offset = n_rays == 1 ? 0.0 : fov * (static_cast<double>(i) / (n_rays - 1) - 0.5);
        ranges[static_cast<std::size_t>(i)] = cast_ray(map, pose.position(), pose.heading + offset, max_range);
    }
    return ranges;
}

inline std::vector<double> raycast_scan(const GridMap& map, const Pose& pose, const ScanConfig& cfg = {})
{
    return raycast_scan(map, pose, cfg.n_rays, cfg.fov, cfg.max_range);
}

struct Observation
{
    std::vector<double> ranges;
    std::optional<ActionType> prev_action; // empty at the first step
    int step_index = 0;

    friend bool operator==(const Observation&, const Observation&) = default;
};

inline Observation observe(const GridMap& map, const Pose& pose, std::optional<ActionType> prev_action,
                           int step_index, const ScanConfig& cfg = {})
{
    return {raycast_scan(map, pose, cfg), prev_action, step_index};
}

} // namespace lawnav

#endif // LAWNAV_WORLDSIM_HPP
