#ifndef LAWNAV_METRICS_HPP
#define LAWNAV_METRICS_HPP

#include "dtw.hpp"
#include "episode.hpp"
#include "worldsim.hpp"

#include <span>
#include <string>
#include <vector>

namespace lawnav
{

/// Executed rollout: poses x_0..x_T and the T actions between them.
struct Trajectory
{
    std::vector<Pose> poses;
    std::vector<ActionType> actions;
    bool stopped = false; // ended with an explicit Stop (otherwise the step limit was hit)

    std::vector<Point> points() const
    {
        std::vector<Point> out;
        out.reserve(poses.size());
        for (const auto& p : poses) out.push_back(p.position());
        return out;
    }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct MetricsReport
{
    std::string episode_id;
    std::string split;
    double divergence = 1.0;
    double tl = 0.0;
    double ne = 0.0;
    double sr = 0.0;
    double os = 0.0;
    double spl = 0.0;
    double ndtw = 0.0;
    double sdtw = 0.0;
    double wa_05 = 0.0;
    double wa_10 = 0.0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Geodesic distance a->b when it is at most `limit` (plus snap slack), else infinity.
/// Much cheaper than geodesic_distance for far-apart points.
inline double geodesic_within(const GridMap& map, Point a, Point b, double limit)
{
    if (!map.is_free(a) || !map.is_free(b)) return kInfinity;
    GridSearch search(map, *map.cell_of(a));
    const int target = *map.cell_of(b);
    const double slack = map.resolution() * std::sqrt(2.0) + 1e-9;
    while (!search.settled(target)) {
        if (search.frontier() > limit + slack) return kInfinity;
        if (search.step() < 0) return kInfinity;
    }
    return search.geodesic(a, b);
}

/// Fraction of waypoints passed within `threshold` (geodesic). In ordered mode the
/// witnessing time steps must be non-decreasing along the waypoint sequence.
inline double waypoint_accuracy(std::span<const Point> trajectory, const WaypointPath& waypoints, double threshold,
                                const GridMap& map, bool ordered = false)
{
    if (!(threshold > 0.0)) throw InvalidArgument("waypoint_accuracy threshold must be positive");
    if (waypoints.points.empty()) return 0.0;
    const std::size_t m = waypoints.size();
    std::vector<std::vector<std::size_t>> witnesses(m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t t = 0; t < trajectory.size(); ++t) {
            if (distance(trajectory[t], waypoints[j]) > threshold) continue;
            if (geodesic_within(map, trajectory[t], waypoints[j], threshold) <= threshold) {
                witnesses[j].push_back(t);
                if (!ordered) break;
            }
        }
    }
    if (!ordered) {
        const auto hit = std::count_if(witnesses.begin(), witnesses.end(), [](const auto& w) { return !w.empty(); });
        return static_cast<double>(hit) / static_cast<double>(m);
    }
    // earliest[k]: smallest time at which k waypoints can be matched in order
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> earliest(m + 1, kNone);
    earliest[0] = 0;
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = j + 1; k >= 1; --k) {
            if (earliest[k - 1] == kNone) continue;
            auto it = std::lower_bound(witnesses[j].begin(), witnesses[j].end(), earliest[k - 1]);
            if (it != witnesses[j].end() && *it < earliest[k]) earliest[k] = *it;
        }
    }
    std::size_t best = 0;
    for (std::size_t k = 0; k <= m; ++k)
        if (earliest[k] != kNone) best = k;
    return static_cast<double>(best) / static_cast<double>(m);
}

inline double waypoint_accuracy(const Trajectory& traj, const WaypointPath& waypoints, double threshold,
                                const GridMap& map, bool ordered = false)
{
    const auto pts = traj.points();
    return waypoint_accuracy(pts, waypoints, threshold, map, ordered);
}

struct MetricsOptions
{
    double success_distance = kSuccessDistance;
    bool lenient_stop = false; // count step-limit terminations as stopping
    bool ordered_wa = false;
};

/// All episode metrics. Distances to the goal are goal-rooted geodesics (goal_field);
/// nDTW is against the step reference, WA against the pano waypoints.
inline MetricsReport compute_metrics(const GridMap& map, const Episode& episode, const WaypointPath& step_reference,
                                     const DistanceField& goal_field, const Trajectory& traj,
                                     const MetricsOptions& opts = {})
{
    if (traj.poses.empty()) throw InvalidArgument("compute_metrics: empty trajectory");
    MetricsReport r;
    r.episode_id = episode.id;
    r.split = episode.split;
    r.divergence = episode.divergence;
    const auto pts = traj.points();

    const double shortest = goal_field.distance_to(episode.start.position());
    if (shortest == kInfinity) throw DisconnectedError("compute_metrics: goal unreachable from start");

    r.tl = polyline_length(pts);
    r.ne = goal_field.distance_to(pts.back());
    double closest = kInfinity;
    for (const Point& p : pts) closest = std::min(closest, goal_field.distance_to(p));
    const bool stopped = traj.stopped || opts.lenient_stop;
    r.sr = (stopped && r.ne < opts.success_distance) ? 1.0 : 0.0;
    r.os = closest < opts.success_distance ? 1.0 : 0.0;
    r.spl = r.sr * (shortest / std::max(shortest, r.tl));
    if (shortest == 0.0 && r.tl == 0.0) r.spl = r.sr;
    r.ndtw = ndtw(pts, step_reference.points, opts.success_distance);
    r.sdtw = r.sr * r.ndtw;
    r.wa_05 = waypoint_accuracy(pts, episode.pano, 0.5, map, opts.ordered_wa);
    r.wa_10 = waypoint_accuracy(pts, episode.pano, 1.0, map, opts.ordered_wa);
    return r;
}

inline MetricsReport compute_metrics(const GridMap& map, const Episode& episode, const Trajectory& traj,
                                     const MetricsOptions& opts = {})
{
    if (!map.is_free(episode.goal)) throw DisconnectedError("compute_metrics: goal is blocked");
    const DistanceField goal_field(map, episode.goal);
    return compute_metrics(map, episode, densify_to_steps(map, episode.pano), goal_field, traj, opts);
}

// aggregation ----------------------------------------------------------------

/// Mean of the numeric report fields.
inline MetricsReport mean_report(std::span<const MetricsReport> reports)
{
    MetricsReport m;
    m.divergence = 0.0;
    if (reports.empty()) return m;
    for (const auto& r : reports) {
        m.divergence += r.divergence;
        m.tl += r.tl;
        m.ne += r.ne;
        m.sr += r.sr;
        m.os += r.os;
        m.spl += r.spl;
        m.ndtw += r.ndtw;
        m.sdtw += r.sdtw;
        m.wa_05 += r.wa_05;
        m.wa_10 += r.wa_10;
    }
    const double n = static_cast<double>(reports.size());
    for (double* f : {&m.divergence, &m.tl, &m.ne, &m.sr, &m.os, &m.spl, &m.ndtw, &m.sdtw, &m.wa_05, &m.wa_10})
        *f /= n;
    return m;
}

struct Bin
{
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;
    double ndtw_mean = std::nan("");
    double ndtw_ci = std::nan(""); // NaN marks an undefined interval (n < 2)
    double wa_mean = std::nan("");
    double wa_ci = std::nan("");
};

struct BinTable
{
    std::vector<Bin> bins;
};

inline const std::vector<double>& default_bin_edges()
{
    static const std::vector<double> edges{0.0, 0.5, 0.7, 0.8, 0.9, 1.0};
    return edges;
}

namespace detail
{
inline std::pair<double, double> mean_and_ci95(const std::vector<double>& v)
{
    if (v.empty()) return {std::nan(""), std::nan("")};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return {mean, std::nan("")};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return {mean, 1.96 * sd / std::sqrt(static_cast<double>(v.size()))};
}
} // namespace detail

/// Groups reports by divergence into (edge_i, edge_i+1] bins with per-bin means and 95%
/// normal-approximation confidence half-widths of nDTW and WA@0.5m.
inline BinTable bin_by_divergence(std::span<const MetricsReport> results,
                                  const std::vector<double>& edges = default_bin_edges())
{
    if (edges.size() < 2) throw InvalidArgument("bin_by_divergence needs at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1])) throw InvalidArgument("bin edges must be strictly increasing");
    if (edges.front() > 0.0 || edges.back() < 1.0) throw InvalidArgument("bin edges must cover (0, 1]");
    const std::size_t nb = edges.size() - 1;
    std::vector<std::vector<double>> nd(nb), wa(nb);
    for (const auto& r : results) {
        std::size_t b = 0;
        while (b + 1 < nb && r.divergence > edges[b + 1]) ++b;
        nd[b].push_back(r.ndtw);
        wa[b].push_back(r.wa_05);
    }
    BinTable table;
    for (std::size_t b = 0; b < nb; ++b) {
        Bin bin;
        bin.lo = edges[b];
        bin.hi = edges[b + 1];
        bin.n = nd[b].size();
        std::tie(bin.ndtw_mean, bin.ndtw_ci) = detail::mean_and_ci95(nd[b]);
        std::tie(bin.wa_mean, bin.wa_ci) = detail::mean_and_ci95(wa[b]);
        table.bins.push_back(bin);
    }
    return table;
}

} // namespace lawnav

#endif // LAWNAV_METRICS_HPP
