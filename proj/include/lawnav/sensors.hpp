#ifndef LAWNAV_SENSORS_HPP
#define LAWNAV_SENSORS_HPP

#include "refpath.hpp"
#include "worldsim.hpp"

#include <string>
#include <vector>

namespace lawnav
{

/// Ground-truth action sensors: goal-oriented and language-aligned waypoint oracles.
struct OracleConfig
{
    double stop_radius = 0.5;                  // Stop when this close to the final target
    double advance_radius = 0.5;               // a waypoint this close counts as reached (the WA visit radius)
    double forward_tolerance = deg2rad(7.5);   // half the turn increment
    bool use_window = true;                    // nearest-waypoint search never looks behind progress
    double lookahead = 1.0;                    // max arc length of the line-of-sight aim along the path
    double pull_tolerance = 0.35;              // skipped path points stay this close to the aim chord
};

struct SupervisionMode
{
    enum class Kind : std::uint8_t
    {
        Goal,
        Law,
        MixedSum,
        MixedRandom,
    };

    Kind kind = Kind::Goal;
    PathKind path = PathKind::pano(); // waypoint density for Law and the L half of mixtures
    double p = 0.5;                   // MixedRandom probability of the L label
    bool per_step = false;            // MixedRandom coin per step instead of per episode

    static SupervisionMode goal() { return {}; }
    static SupervisionMode law(PathKind k) { return {Kind::Law, k}; }
    static SupervisionMode mixed_sum() { return {Kind::MixedSum, PathKind::pano()}; }
    static SupervisionMode mixed_random(double p)
    {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("mixed-random probability must lie in [0, 1]");
        return {Kind::MixedRandom, PathKind::pano(), p};
    }

    bool mixed() const noexcept { return kind == Kind::MixedSum || kind == Kind::MixedRandom; }

    std::string name() const
    {
        switch (kind) {
        case Kind::Goal: return "goal";
        case Kind::Law: return path.name() == "pano" || path.name() == "step" ? "law-" + path.name() : path.name();
        case Kind::MixedSum: return "mixed-sum";
        case Kind::MixedRandom: {
            std::string s = std::to_string(p);
            s.erase(s.find_last_not_of('0') + 1);
            if (s.back() == '.') s.pop_back();
            return "mixed-random-" + s;
        }
        }
        return "?";
    }

    friend bool operator==(const SupervisionMode&, const SupervisionMode&) = default;
};

/// a* with the waypoint it was computed toward.
struct OracleLabel
{
    ActionType action = ActionType::Stop;
    std::size_t target_index = 0;

    friend bool operator==(const OracleLabel&, const OracleLabel&) = default;
};

/// Aim point along `path`: the first point at least one step away (falling back to the
/// farthest earlier point in line of sight), pulled further out within the lookahead.
/// Points from index `anchored_from` on are reference waypoints whose bends the aim must
/// respect.
inline Point steer_aim(const GridMap& map, const Pose& pose, const std::vector<Point>& path,
                       const OracleConfig& cfg = {}, std::size_t anchored_from = static_cast<std::size_t>(-1))
{
    const Point here = pose.position();
    std::size_t pick = path.size() - 1;
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (distance(here, path[i]) >= kStepSize) {
            pick = i;
            break;
        }
    }
    while (pick > 1 && !segment_free(map, here, path[pick])) --pick;
    // string-pull: slide the aim out along the path while it stays in line of sight; skipped
    // reference waypoints must hug the chord so their bends are kept, grid cells need not
    auto off_chord = [&](Point p, Point b) {
        const Point d = b - here;
        const double len2 = d.x * d.x + d.y * d.y;
        const double t = len2 > 0.0 ? std::clamp(((p.x - here.x) * d.x + (p.y - here.y) * d.y) / len2, 0.0, 1.0) : 0.0;
        return distance(p, here + d * t);
    };
    double arc = 0.0;
    for (std::size_t i = 1; i <= pick; ++i) arc += distance(path[i - 1], path[i]);
    const std::size_t first = pick;
    while (pick + 1 < path.size()) {
        const double next = arc + distance(path[pick], path[pick + 1]);
        if (next > cfg.lookahead || !segment_free(map, here, path[pick + 1])) break;
        bool hugs = true;
        for (std::size_t i = std::max(first, anchored_from); i <= pick && hugs; ++i)
            hugs = off_chord(path[i], path[pick + 1]) <= cfg.pull_tolerance;
        if (!hugs) break;
        arc = next;
        ++pick;
    }
    return path[pick];
}

/// Turns toward the aim point and moves forward once aligned within the tolerance.
inline ActionType steer_along(const GridMap& map, const Pose& pose, const std::vector<Point>& path,
                              const OracleConfig& cfg = {}, std::size_t anchored_from = static_cast<std::size_t>(-1))
{
    const Point here = pose.position();
    const Point aim = steer_aim(map, pose, path, cfg, anchored_from);
    const Point d = aim - here;
    if (norm(d) < 1e-12) return ActionType::Forward;
    const double delta = wrap_angle(std::atan2(d.y, d.x) - pose.heading);

    auto turn_toward = [](int k) {
        if (k == 0) return ActionType::Forward;
        return k > 0 ? ActionType::Left : ActionType::Right;
    };
    // lattice offset whose heading is within the forward tolerance of the aim
    int k_aim = 0;
    if (std::abs(delta) > cfg.forward_tolerance + 1e-12)
        k_aim = delta > 0.0 ? std::max(1, static_cast<int>(std::lround(delta / kTurnAngle)))
                            : std::min(-1, static_cast<int>(std::lround(delta / kTurnAngle)));
    const double min_move = 0.5 * map.resolution();
    auto move_from = [&](int k) {
        const Pose turned{pose.x, pose.y, wrap_angle(pose.heading + k * kTurnAngle)};
        return apply_action(map, turned, ActionType::Forward).position();
    };
    if (distance(move_from(k_aim), here) >= min_move) return turn_toward(k_aim);

    // the aligned heading is obstructed: aim for the reachable lattice heading whose
    // step ends closest to the aim point (depends on position only, so turning toward
    // it never oscillates)
    int best_k = k_aim;
    double best_score = kInfinity;
    for (int k : {0, 1, -1, 2, -2, 3, -3, 4, -4, 5, -5, 6, -6, 7, -7, 8, -8, 9, -9, 10, -10, 11, -11, 12}) {
        const Point q = move_from(k);
        if (distance(q, here) < min_move) continue;
        const double score = distance(q, aim);
        if (score < best_score - 1e-12) {
            best_score = score;
            best_k = k;
        }
    }
    return turn_toward(best_k);
}

/// g(x, w): best action along the shortest path from the pose to target. Stop when the
/// target is the final goal and lies within stop_radius.
inline ActionType best_action(const GridMap& map, const Pose& pose, Point target, bool is_final_goal,
                              const OracleConfig& cfg = {})
{
    const Point here = pose.position();
    if (!map.is_free(here) || !map.is_free(target)) throw DisconnectedError("best_action: blocked endpoint");
    GridSearch search(map, *map.cell_of(here));
    if (!search.settle(*map.cell_of(target))) throw DisconnectedError("best_action: target unreachable");
    if (is_final_goal && search.geodesic(here, target) < cfg.stop_radius) return ActionType::Stop;
    return steer_along(map, pose, search.path(here, target), cfg);
}

/// Variant of best_action toward the origin of a precomputed field (rollout hot path).
/// Equal-length path ties may resolve differently from the pose-rooted search.
inline ActionType best_action(const GridMap& map, const Pose& pose, const DistanceField& target_field,
                              bool is_final_goal, const OracleConfig& cfg = {})
{
    const Point here = pose.position();
    const double g = target_field.distance_to(here);
    if (g == kInfinity) throw DisconnectedError("best_action: target unreachable");
    if (is_final_goal && g < cfg.stop_radius) return ActionType::Stop;
    return steer_along(map, pose, target_field.path_from(here), cfg);
}

/// Language-aligned sensor: a* = g(x, phi(x, W)). Updates progress when the nearest
/// waypoint lies within advance_radius and then aims at the following waypoint. The
/// target index never decreases across calls sharing a ProgressState.
struct LawProgress
{
    ProgressState state;
    std::size_t last_target = 0;
};

inline OracleLabel law_action(const GridMap& map, const Pose& pose, const WaypointPath& path, LawProgress& progress,
                              const OracleConfig& cfg = {})
{
    if (path.points.empty()) throw InvalidArgument("law_action: empty waypoint path");
    const Point here = pose.position();
    if (!map.is_free(here)) throw DisconnectedError("law_action: pose is blocked");
    GridSearch search(map, *map.cell_of(here));
    const std::size_t last = path.size() - 1;
    const std::size_t lo = cfg.use_window ? std::min(progress.state.last_reached, last) : 0;
    const auto nearest = nearest_waypoint_search(search, here, path, lo);
    if (nearest.distance <= cfg.advance_radius)
        progress.state.last_reached = std::max(progress.state.last_reached, nearest.index);
    std::size_t target = nearest.index;
    if (target <= progress.state.last_reached && target < last) target += 1;
    target = std::max(target, progress.last_target);
    progress.last_target = target;

    if (!search.settle(*map.cell_of(path[target]))) throw DisconnectedError("law_action: waypoint unreachable");
    // stop once the final waypoint and everything still ahead of it lie within stop_radius
    bool stop = true;
    for (std::size_t j = last + 1; j-- > target && stop;) {
        stop = distance(here, path[j]) < cfg.stop_radius && search.settle(*map.cell_of(path[j])) &&
               search.geodesic(here, path[j]) < cfg.stop_radius;
    }
    if (stop) return {ActionType::Stop, target};
    // the aim may run on past a close target along the following waypoints
    auto route = search.path(here, path[target]);
    const std::size_t anchored = route.size() - 1;
    double extra = 0.0;
    for (std::size_t j = target + 1; j <= last && extra <= cfg.lookahead; ++j) {
        extra += distance(path[j - 1], path[j]);
        route.push_back(path[j]);
    }
    return {steer_along(map, pose, route, cfg, anchored), target};
}

inline OracleLabel law_action(const GridMap& map, const Pose& pose, const WaypointPath& path, ProgressState& progress,
                              const OracleConfig& cfg = {})
{
    LawProgress p{progress, 0};
    auto label = law_action(map, pose, path, p, cfg);
    progress = p.state;
    return label;
}

/// Goal-oriented sensor: best action along the shortest path to the goal.
inline OracleLabel goal_action(const GridMap& map, const Pose& pose, Point goal, std::size_t waypoint_count,
                               const OracleConfig& cfg = {})
{
    return {best_action(map, pose, goal, true, cfg), waypoint_count == 0 ? 0 : waypoint_count - 1};
}

inline OracleLabel goal_action(const GridMap& map, const Pose& pose, const DistanceField& goal_field,
                               std::size_t waypoint_count, const OracleConfig& cfg = {})
{
    return {best_action(map, pose, goal_field, true, cfg), waypoint_count == 0 ? 0 : waypoint_count - 1};
}

/// One weighted cross-entropy target.
struct WeightedLabel
{
    ActionType action = ActionType::Stop;
    double weight = 1.0;

    friend bool operator==(const WeightedLabel&, const WeightedLabel&) = default;
};

using LabelSet = std::vector<WeightedLabel>;

/// Deterministic coin for MixedRandom: true selects the language-aligned label.
inline bool mixed_coin(double p, std::uint64_t episode_seed, std::size_t step, bool per_step)
{
    Rng rng(derive_seed(episode_seed, 0x6d69786564ULL, per_step ? step + 1 : 0));
    return uniform01(rng) < p;
}

/// Loss targets for the mixed supervision modes. MixedSum keeps both labels (merged with
/// weight 2 when they agree); MixedRandom picks one via a seeded coin.
inline LabelSet mixed_labels(const SupervisionMode& mode, const OracleLabel& law, const OracleLabel& goal,
                             std::uint64_t episode_seed, std::size_t step = 0)
{
    switch (mode.kind) {
    case SupervisionMode::Kind::MixedSum:
        if (law.action == goal.action) return {{law.action, 2.0}};
        return {{law.action, 1.0}, {goal.action, 1.0}};
    case SupervisionMode::Kind::MixedRandom:
        return {{mixed_coin(mode.p, episode_seed, step, mode.per_step) ? law.action : goal.action, 1.0}};
    default: throw InvalidArgument("mixed_labels expects a mixed supervision mode");
    }
}

} // namespace lawnav

#endif // LAWNAV_SENSORS_HPP
