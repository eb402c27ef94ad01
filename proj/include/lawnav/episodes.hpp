#ifndef LAWNAV_EPISODES_HPP
#define LAWNAV_EPISODES_HPP

#include "episode.hpp"
#include "refpath.hpp"
#include "worldsim.hpp"

#include <deque>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace lawnav
{

/// Divergence interval. Values v with lo <= v < hi belong to it; hi >= 1 closes the
/// interval so that 1.0 itself is included.
struct DivergenceBand
{
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double v) const noexcept { return v >= lo && (v < hi || (hi >= 1.0 && v <= hi)); }
    friend bool operator==(const DivergenceBand&, const DivergenceBand&) = default;
};

struct BandShare
{
    DivergenceBand band;
    double fraction = 1.0;
};

struct GeneratorParams
{
    std::uint64_t seed = 1;
    double world_width = 9.0;   // meters
    double world_height = 9.0;  // meters
    double resolution = 0.1;
    int rooms_x = 3;
    int rooms_y = 3;
    double wall_density = 1.0;  // probability a room boundary is walled; also scales clutter
    double extra_door_prob = 0.6;
    double door_width = 1.2;
    double wall_thickness = 0.2;
    int landmark_count = 6;
    int pano_min = 4;
    int pano_max = 8;
    double min_path_length = 3.0;
    double max_path_length = 20.0;
    double max_detour_ratio = 1.5; // reference length over start-goal geodesic
    int max_retries = 200;
    std::vector<BandShare> mixture{{{0.0, 0.8}, 0.35}, {{0.8, 1.0}, 0.65}};

    void validate() const
    {
        if (mixture.empty()) throw InvalidArgument("generator mixture is empty");
        double total = 0.0;
        for (const auto& s : mixture) {
            if (!(s.band.lo >= 0.0 && s.band.hi <= 1.0 && s.band.lo < s.band.hi))
                throw InvalidArgument("divergence bands must lie within (0, 1]");
            if (s.fraction < 0.0) throw InvalidArgument("band fractions must be non-negative");
            total += s.fraction;
        }
        if (std::abs(total - 1.0) > 1e-6) throw InvalidArgument("band fractions must sum to 1");
        if (pano_min < 2 || pano_max < pano_min) throw InvalidArgument("invalid pano count range");
        if (rooms_x < 1 || rooms_y < 1) throw InvalidArgument("room grid must be at least 1x1");
        if (landmark_count < 1 || landmark_count > kMaxLandmarks) throw InvalidArgument("landmark_count out of range");
        if (wall_density < 0.0 || wall_density > 1.0) throw InvalidArgument("wall_density must lie in [0, 1]");
        if (max_retries < 1) throw InvalidArgument("max_retries must be positive");
        if (!(max_detour_ratio >= 1.0)) throw InvalidArgument("max_detour_ratio must be at least 1");
    }
};

class GenerationError : public Error
{
  public:
    using Error::Error;
};

// worlds ---------------------------------------------------------------------

namespace detail
{

/// Size of the 8-connected free component containing `seed_cell` (no corner cutting).
inline std::size_t flood_fill_count(const GridMap& map, int seed_cell)
{
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(map.cell_count()), 0);
    std::deque<int> queue{seed_cell};
    seen[static_cast<std::size_t>(seed_cell)] = 1;
    std::size_t count = 0;
    while (!queue.empty()) {
        const int c = queue.front();
        queue.pop_front();
        ++count;
        const int cx = map.cell_x(c), cy = map.cell_y(c);
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                if ((dx == 0 && dy == 0) || map.blocked(cx + dx, cy + dy)) continue;
                if (dx != 0 && dy != 0 && (map.blocked(cx + dx, cy) || map.blocked(cx, cy + dy))) continue;
                const int n = map.index(cx + dx, cy + dy);
                if (!seen[static_cast<std::size_t>(n)]) {
                    seen[static_cast<std::size_t>(n)] = 1;
                    queue.push_back(n);
                }
            }
    }
    return count;
}

inline int first_free_cell(const GridMap& map)
{
    for (int c = 0; c < map.cell_count(); ++c)
        if (!map.blocked(c)) return c;
    return -1;
}

inline GridMap build_world_attempt(const GeneratorParams& params, Rng& rng)
{
    auto b = GridBuilder::with_extent(params.world_width, params.world_height, params.resolution);
    const double res = params.resolution;
    const double rw = params.world_width / params.rooms_x;
    const double rh = params.world_height / params.rooms_y;
    const double half = 0.5 * params.wall_thickness;
    // world coordinates are offset by the one-cell border
    const double ox = res, oy = res;

    // room adjacency: spanning tree edges always get a door
    const int nrooms = params.rooms_x * params.rooms_y;
    struct Edge
    {
        int a, b;
        bool vertical_wall; // wall between horizontally adjacent rooms
    };
    std::vector<Edge> edges;
    for (int ry = 0; ry < params.rooms_y; ++ry)
        for (int rx = 0; rx < params.rooms_x; ++rx) {
            const int r = ry * params.rooms_x + rx;
            if (rx + 1 < params.rooms_x) edges.push_back({r, r + 1, true});
            if (ry + 1 < params.rooms_y) edges.push_back({r, r + params.rooms_x, false});
        }
    std::vector<std::size_t> order(edges.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i - 1)))]);
    std::vector<int> comp(static_cast<std::size_t>(nrooms));
    std::iota(comp.begin(), comp.end(), 0);
    auto find = [&](int x) {
        while (comp[static_cast<std::size_t>(x)] != x) x = comp[static_cast<std::size_t>(x)] = comp[static_cast<std::size_t>(comp[static_cast<std::size_t>(x)])];
        return x;
    };
    std::vector<bool> in_tree(edges.size(), false);
    for (std::size_t k : order) {
        const int ra = find(edges[k].a), rb = find(edges[k].b);
        if (ra != rb) {
            comp[static_cast<std::size_t>(ra)] = rb;
            in_tree[k] = true;
        }
    }

    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        const bool walled = uniform01(rng) < params.wall_density;
        const bool door = in_tree[k] || uniform01(rng) < params.extra_door_prob;
        const double door_pos = uniform(rng, 0.35, 0.65);
        if (!walled) continue;
        const int ax = e.a % params.rooms_x, ay = e.a / params.rooms_x;
        if (e.vertical_wall) {
            const double x = ox + (ax + 1) * rw;
            const double y0 = oy + ay * rh, y1 = y0 + rh;
            b.fill_rect(x - half, y0 - half, x + half, y1 + half);
            if (door) {
                const double c = y0 + door_pos * rh;
                b.fill_rect(x - half - res, c - 0.5 * params.door_width, x + half + res, c + 0.5 * params.door_width, false);
            }
        } else {
            const double y = oy + (ay + 1) * rh;
            const double x0 = ox + ax * rw, x1 = x0 + rw;
            b.fill_rect(x0 - half, y - half, x1 + half, y + half);
            if (door) {
                const double c = x0 + door_pos * rw;
                b.fill_rect(c - 0.5 * params.door_width, y - half - res, c + 0.5 * params.door_width, y + half + res, false);
            }
        }
    }

    // clutter: one box in some rooms, kept clear of the room boundary
    for (int r = 0; r < nrooms; ++r) {
        if (uniform01(rng) >= 0.5 * params.wall_density) continue;
        const int rx = r % params.rooms_x, ry = r / params.rooms_x;
        const double w = uniform(rng, 0.4, 0.9), h = uniform(rng, 0.4, 0.9);
        const double margin = 1.2;
        if (rw < 2 * margin + w || rh < 2 * margin + h) continue;
        const double x0 = ox + rx * rw + uniform(rng, margin, rw - margin - w);
        const double y0 = oy + ry * rh + uniform(rng, margin, rh - margin - h);
        b.fill_rect(x0, y0, x0 + w, y0 + h);
    }

    // one landmark region per room
    for (int r = 0; r < nrooms; ++r) {
        const int rx = r % params.rooms_x, ry = r / params.rooms_x;
        Region reg;
        reg.x0 = static_cast<int>(std::floor((ox + rx * rw) / res));
        reg.y0 = static_cast<int>(std::floor((oy + ry * rh) / res));
        reg.x1 = static_cast<int>(std::floor((ox + (rx + 1) * rw) / res));
        reg.y1 = static_cast<int>(std::floor((oy + (ry + 1) * rh) / res));
        reg.landmark = uniform_int(rng, 0, params.landmark_count - 1);
        b.add_region(reg);
    }
    return b.build();
}

} // namespace detail

/// Seeded room-and-corridor layout whose free space forms one connected component.
inline GridMap generate_world(const GeneratorParams& params, std::uint64_t world_seed)
{
    params.validate();
    for (int attempt = 0; attempt < 50; ++attempt) {
        Rng rng(derive_seed(world_seed, 0x776f726c64ULL, static_cast<std::uint64_t>(attempt)));
        auto map = detail::build_world_attempt(params, rng);
        const int seed_cell = detail::first_free_cell(map);
        if (seed_cell >= 0 && detail::flood_fill_count(map, seed_cell) == map.free_cell_count()) return map;
    }
    throw GenerationError("generate_world: retry limit exceeded without a connected layout");
}

inline GridMap generate_world(const GeneratorParams& params) { return generate_world(params, params.seed); }

// instructions ---------------------------------------------------------------

struct Instruction
{
    std::vector<Token> tokens;
    std::vector<SubInstruction> sub_instructions;
};

/// Segments the pano path at heading changes of at least 45 degrees. Each segment
/// becomes one sub-instruction (turn + GO_FORWARD, plus PASS_LANDMARK tokens for
/// labeled regions entered along it); a final STOP / STOP_AT group covers the goal.
inline Instruction generate_instruction(const GridMap& map, const WaypointPath& pano)
{
    if (pano.size() < 2) throw InvalidArgument("generate_instruction needs at least two pano points");
    const std::size_t m = pano.size();
    const double turn_threshold = deg2rad(45.0);
    std::vector<double> headings(m - 1, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const Point d = pano[i + 1] - pano[i];
        headings[i] = norm(d) > 1e-9 ? std::atan2(d.y, d.x) : (i > 0 ? headings[i - 1] : 0.0);
    }

    Instruction out;
    std::size_t group_token_begin = 0, group_pano_from = 0;
    auto close_group = [&](std::size_t pano_to) {
        out.sub_instructions.push_back({group_token_begin, out.tokens.size(), group_pano_from, pano_to});
        group_token_begin = out.tokens.size();
        group_pano_from = pano_to;
    };
    out.tokens.push_back({TokenKind::GoForward});
    for (std::size_t i = 1; i < m; ++i) {
        if (i + 1 < m) {
            const double turn = wrap_angle(headings[i] - headings[i - 1]);
            const auto here = map.landmark_at(pano[i]);
            const auto before = map.landmark_at(pano[i - 1]);
            if (here && here != before) out.tokens.push_back({TokenKind::PassLandmark, *here});
            if (std::abs(turn) >= turn_threshold) {
                close_group(i);
                if (std::abs(turn) >= deg2rad(135.0))
                    out.tokens.push_back({TokenKind::TurnAround});
                else
                    out.tokens.push_back({turn > 0 ? TokenKind::TurnLeft : TokenKind::TurnRight});
                out.tokens.push_back({TokenKind::GoForward});
            }
        }
    }
    close_group(m - 1);
    if (const auto goal_landmark = map.landmark_at(pano.back()))
        out.tokens.push_back({TokenKind::StopAt, *goal_landmark});
    else
        out.tokens.push_back({TokenKind::Stop});
    close_group(m - 1);
    return out;
}

// episodes -------------------------------------------------------------------

namespace detail
{

inline std::optional<Point> sample_room_point(const GridMap& map, const Region& room, double clearance, Rng& rng)
{
    const double res = map.resolution();
    for (int attempt = 0; attempt < 64; ++attempt) {
        const Point p{uniform(rng, room.x0 * res, room.x1 * res), uniform(rng, room.y0 * res, room.y1 * res)};
        if (!map.is_free(p)) continue;
        bool clear = true;
        for (int k = 0; k < 8 && clear; ++k) {
            const double a = k * kPi / 4.0;
            clear = map.is_free(p + Point{clearance * std::cos(a), clearance * std::sin(a)});
        }
        if (clear) return p;
    }
    return std::nullopt;
}

inline std::vector<Point> concat_paths(const GridMap& map, const std::vector<Point>& anchors)
{
    std::vector<Point> route{anchors.front()};
    for (std::size_t i = 1; i < anchors.size(); ++i) {
        const auto seg = shortest_path(map, anchors[i - 1], anchors[i]);
        route.insert(route.end(), seg.begin() + 1, seg.end());
    }
    return route;
}

} // namespace detail

/// Samples a start, goal and pano waypoints whose divergence falls in `band` (rejection
/// sampling). Low bands route through intermediate rooms; high bands place the pano
/// waypoints along the shortest route.
inline Episode generate_episode(const GridMap& map, std::uint64_t seed, const DivergenceBand& band,
                                const GeneratorParams& params = {})
{
    const auto& rooms = map.regions();
    if (rooms.size() < 2) throw GenerationError("generate_episode needs a map with at least two regions");
    const double p_direct = band.lo >= 0.8 ? 0.7 : (band.hi > 0.9 ? 0.3 : 0.05);
    for (int attempt = 0; attempt < params.max_retries; ++attempt) {
        Rng rng(derive_seed(seed, 0x657069736f6465ULL, static_cast<std::uint64_t>(attempt)));
        const int n_pano = uniform_int(rng, params.pano_min, params.pano_max);
        const bool direct = uniform01(rng) < p_direct;
        const int n_rooms = static_cast<int>(rooms.size());

        std::vector<int> room_seq{uniform_int(rng, 0, n_rooms - 1)};
        const int mids = direct ? 0 : uniform_int(rng, 1, std::min(2, n_rooms - 2));
        while (static_cast<int>(room_seq.size()) < mids + 2) {
            const int r = uniform_int(rng, 0, n_rooms - 1);
            if (std::find(room_seq.begin(), room_seq.end(), r) == room_seq.end()) room_seq.push_back(r);
            if (static_cast<int>(room_seq.size()) >= n_rooms) break;
        }
        if (room_seq.size() < 2) continue;

        std::vector<Point> anchors;
        bool ok = true;
        for (int r : room_seq) {
            auto p = detail::sample_room_point(map, rooms[static_cast<std::size_t>(r)], 0.35, rng);
            if (!p) {
                ok = false;
                break;
            }
            anchors.push_back(*p);
        }
        if (!ok) continue;
        const double shortest = geodesic_distance(map, anchors.front(), anchors.back());
        if (shortest == kInfinity) continue;

        const auto route = detail::concat_paths(map, anchors);
        const double length = polyline_length(route);
        if (length < params.min_path_length || length > params.max_path_length) continue;
        if (length > params.max_detour_ratio * shortest) continue;

        WaypointPath pano{{anchors.front()}, PathKind::pano()};
        for (int i = 1; i + 1 < n_pano; ++i) {
            Point p = point_at_arclength(route, length * i / (n_pano - 1));
            if (direct) {
                const Point jitter{uniform(rng, -0.25, 0.25), uniform(rng, -0.25, 0.25)};
                if (map.is_free(p + jitter) && segment_free(map, p, p + jitter)) p = p + jitter;
            }
            pano.points.push_back(p);
        }
        pano.points.push_back(anchors.back());

        const auto step = densify_to_steps(map, pano);
        const double divergence = path_divergence(map, step);
        if (!band.contains(divergence)) continue;

        // face along the first leg so the egocentric instruction is meaningful from step 0
        const Point lead = step.points[1] - step.points[0];
        Episode ep;
        ep.start = Pose{pano.front().x, pano.front().y, wrap_angle(std::atan2(lead.y, lead.x))};
        ep.goal = pano.back();
        ep.pano = std::move(pano);
        auto instr = generate_instruction(map, ep.pano);
        ep.instruction = std::move(instr.tokens);
        ep.sub_instructions = std::move(instr.sub_instructions);
        ep.divergence = divergence;
        return ep;
    }
    throw GenerationError("generate_episode: band [" + std::to_string(band.lo) + ", " + std::to_string(band.hi) +
                          ") not achieved within the retry limit");
}

/// Path divergence of an episode's step reference against its shortest path.
inline double path_divergence(const GridMap& map, const Episode& episode)
{
    return path_divergence(map, densify_to_steps(map, episode.pano));
}

/// Band index per episode: exact largest-remainder counts, shuffled with the seed.
inline std::vector<std::size_t> assign_bands(const std::vector<BandShare>& mixture, std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> counts(mixture.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t b = 0; b < mixture.size(); ++b) {
        const double exact = mixture[b].fraction * static_cast<double>(n);
        counts[b] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[b];
        remainders.emplace_back(-(exact - std::floor(exact)), b);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < counts.size(); ++b) out.insert(out.end(), counts[b], b);
    Rng rng(derive_seed(seed, 0x62616e6473ULL));
    for (std::size_t i = out.size(); i > 1; --i)
        std::swap(out[i - 1], out[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i - 1)))]);
    return out;
}

/// Maps plus episodes; train and val_seen share maps, val_unseen uses held-out maps.
struct Dataset
{
    std::map<std::string, GridMap> maps;
    std::vector<Episode> episodes;

    const GridMap& map_for(const Episode& ep) const
    {
        auto it = maps.find(ep.map_id);
        if (it == maps.end()) throw InvalidArgument("episode " + ep.id + " references unknown map " + ep.map_id);
        return it->second;
    }

    std::vector<const Episode*> split(std::string_view name) const
    {
        std::vector<const Episode*> out;
        for (const auto& ep : episodes)
            if (ep.split == name) out.push_back(&ep);
        return out;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DatasetSpec
{
    GeneratorParams params;
    int seen_maps = 8;
    int unseen_maps = 4;
    int train_episodes = 500;
    int val_seen_episodes = 100;
    int val_unseen_episodes = 100;
};

/// Generates the full benchmark: worlds, then each split's episodes with stratified
/// divergence bands. Deterministic in spec.params.seed.
inline Dataset generate_dataset(const DatasetSpec& spec)
{
    spec.params.validate();
    Dataset ds;
    std::vector<std::string> seen, unseen;
    for (int i = 0; i < spec.seen_maps + spec.unseen_maps; ++i) {
        const std::string id = "map" + std::to_string(i);
        ds.maps.emplace(id, generate_world(spec.params, derive_seed(spec.params.seed, 0x6d6170ULL, static_cast<std::uint64_t>(i))));
        (i < spec.seen_maps ? seen : unseen).push_back(id);
    }
    if (seen.empty() || (spec.val_unseen_episodes > 0 && unseen.empty()))
        throw InvalidArgument("dataset needs seen maps (and unseen maps for val_unseen)");

    struct SplitSpec
    {
        const char* name;
        int count;
        const std::vector<std::string>* maps;
    };
    const SplitSpec splits[] = {{"train", spec.train_episodes, &seen},
                                {"val_seen", spec.val_seen_episodes, &seen},
                                {"val_unseen", spec.val_unseen_episodes, &unseen}};
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto& sp = splits[s];
        if (sp.count <= 0) continue;
        const auto bands = assign_bands(spec.params.mixture, static_cast<std::size_t>(sp.count), derive_seed(spec.params.seed, s));
        std::vector<Episode> eps(static_cast<std::size_t>(sp.count));
        parallel_for(eps.size(), [&](std::size_t i) {
            const auto& map_id = (*sp.maps)[i % sp.maps->size()];
            auto ep = generate_episode(ds.maps.at(map_id), derive_seed(spec.params.seed, 0x6570ULL + s, i),
                                       spec.params.mixture[bands[i]].band, spec.params);
            ep.id = std::string(sp.name) + "-" + std::to_string(i);
            ep.map_id = map_id;
            ep.split = sp.name;
            eps[i] = std::move(ep);
        });
        for (auto& ep : eps) ds.episodes.push_back(std::move(ep));
    }
    return ds;
}

} // namespace lawnav

#endif // LAWNAV_EPISODES_HPP
