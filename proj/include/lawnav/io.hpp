#ifndef LAWNAV_IO_HPP
#define LAWNAV_IO_HPP

#include "episodes.hpp"
#include "metrics.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

// JSONL file formats. Every file is one JSON object per line; doubles are written with
// round-trip precision so reloading is bit-exact.
//
// dataset:    {"schema":"lawnav.dataset","version":1,"maps":M,"episodes":E}
//             {"type":"map","id":..,"width":..,"height":..,"resolution":..,
//              "rows":["#..#",...],"regions":[[x0,y0,x1,y1,landmark],...]}      (row 0 first)
//             {"type":"episode","id":..,"map_id":..,"split":..,"start":[x,y,heading],
//              "goal":[x,y],"pano":[[x,y],...],"instruction":["GO_FORWARD",...],
//              "sub_instructions":[[token_begin,token_end,pano_from,pano_to],...],"divergence":d}
// trajectory: {"episode_id":..,"poses":[[x,y,heading],...],"actions":["FORWARD",...],"stopped":b}
// metrics:    {"episode_id":..,"split":..,"divergence":..,"tl":..,"ne":..,"sr":..,"os":..,
//              "spl":..,"ndtw":..,"sdtw":..,"wa_05":..,"wa_10":..}

namespace lawnav
{

inline constexpr const char* kDatasetSchema = "lawnav.dataset";
inline constexpr int kDatasetVersion = 1;

using json = nlohmann::json;

// maps and episodes ----------------------------------------------------------

inline json map_to_json(const std::string& id, const GridMap& map)
{
    json rows = json::array();
    for (int y = 0; y < map.height(); ++y) {
        std::string row(static_cast<std::size_t>(map.width()), '.');
        for (int x = 0; x < map.width(); ++x)
            if (map.blocked(x, y)) row[static_cast<std::size_t>(x)] = '#';
        rows.push_back(std::move(row));
    }
    json regions = json::array();
    for (const auto& r : map.regions()) regions.push_back({r.x0, r.y0, r.x1, r.y1, r.landmark});
    return {{"type", "map"},          {"id", id},     {"width", map.width()}, {"height", map.height()},
            {"resolution", map.resolution()}, {"rows", rows}, {"regions", regions}};
}

inline GridMap map_from_json(const json& j)
{
    const int w = j.at("width").get<int>(), h = j.at("height").get<int>();
    const auto rows = j.at("rows").get<std::vector<std::string>>();
    if (static_cast<int>(rows.size()) != h) throw InvalidArgument("row count does not match height");
    std::vector<std::uint8_t> occ;
    occ.reserve(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != w) throw InvalidArgument("row length does not match width");
        for (char c : row) {
            if (c != '#' && c != '.') throw InvalidArgument(std::string("unexpected cell character '") + c + "'");
            occ.push_back(c == '#' ? 1 : 0);
        }
    }
    std::vector<Region> regions;
    for (const auto& r : j.at("regions")) {
        const auto v = r.get<std::vector<int>>();
        if (v.size() != 5) throw InvalidArgument("region needs 5 integers");
        if (v[4] < 0 || v[4] >= kMaxLandmarks) throw InvalidArgument("region landmark out of range");
        regions.push_back({v[0], v[1], v[2], v[3], v[4]});
    }
    return GridMap(w, h, j.at("resolution").get<double>(), std::move(occ), std::move(regions));
}

inline json point_json(Point p) { return json::array({p.x, p.y}); }
inline json pose_json(const Pose& p) { return json::array({p.x, p.y, p.heading}); }

inline Point point_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 2) throw InvalidArgument("point must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Pose pose_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 3) throw InvalidArgument("pose must be [x, y, heading]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json episode_to_json(const Episode& ep)
{
    json pano = json::array();
    for (const auto& p : ep.pano.points) pano.push_back(point_json(p));
    json tokens = json::array();
    for (const auto& t : ep.instruction) tokens.push_back(t.str());
    json subs = json::array();
    for (const auto& s : ep.sub_instructions) subs.push_back({s.token_begin, s.token_end, s.pano_from, s.pano_to});
    return {{"type", "episode"},       {"id", ep.id},         {"map_id", ep.map_id},
            {"split", ep.split},       {"start", pose_json(ep.start)}, {"goal", point_json(ep.goal)},
            {"pano", pano},            {"instruction", tokens}, {"sub_instructions", subs},
            {"divergence", ep.divergence}};
}

inline Episode episode_from_json(const json& j)
{
    Episode ep;
    ep.id = j.at("id").get<std::string>();
    ep.map_id = j.at("map_id").get<std::string>();
    ep.split = j.at("split").get<std::string>();
    ep.start = pose_from_json(j.at("start"));
    ep.goal = point_from_json(j.at("goal"));
    for (const auto& p : j.at("pano")) ep.pano.points.push_back(point_from_json(p));
    for (const auto& t : j.at("instruction")) {
        const auto tok = Token::parse(t.get<std::string>());
        if (!tok) throw InvalidArgument("unknown instruction token " + t.get<std::string>());
        ep.instruction.push_back(*tok);
    }
    for (const auto& s : j.at("sub_instructions")) {
        const auto v = s.get<std::vector<std::size_t>>();
        if (v.size() != 4) throw InvalidArgument("sub-instruction needs 4 indices");
        ep.sub_instructions.push_back({v[0], v[1], v[2], v[3]});
    }
    ep.divergence = j.at("divergence").get<double>();
    if (const auto problem = episode_problem(ep); !problem.empty()) throw InvalidArgument(problem);
    return ep;
}

// line reading -----------------------------------------------------------------

/// Calls fn(json, line_number) for each non-blank line; parse and content errors become
/// FormatError naming the file and line.
template <typename Fn>
void for_each_jsonl(std::istream& in, const std::string& name, Fn&& fn)
{
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(name, n, std::string("invalid JSON: ") + e.what());
        }
        try {
            fn(j, n);
        } catch (const FormatError&) {
            throw;
        } catch (const json::exception& e) {
            throw FormatError(name, n, e.what());
        } catch (const Error& e) {
            throw FormatError(name, n, e.what());
        }
    }
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError(path, 0, "cannot open file");
    return in;
}

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    return out;
}

// dataset ----------------------------------------------------------------------

inline void write_dataset(std::ostream& out, const Dataset& ds)
{
    out << json{{"schema", kDatasetSchema}, {"version", kDatasetVersion}, {"maps", ds.maps.size()},
                {"episodes", ds.episodes.size()}}
               .dump()
        << '\n';
    for (const auto& [id, map] : ds.maps) out << map_to_json(id, map).dump() << '\n';
    for (const auto& ep : ds.episodes) out << episode_to_json(ep).dump() << '\n';
}

inline Dataset read_dataset(std::istream& in, const std::string& name = "<dataset>")
{
    Dataset ds;
    bool header = false;
    std::size_t want_maps = 0, want_eps = 0, last_line = 0;
    for_each_jsonl(in, name, [&](const json& j, std::size_t line) {
        last_line = line;
        if (!header) {
            if (j.value("schema", "") != kDatasetSchema) throw FormatError(name, line, "missing dataset header");
            if (j.value("version", 0) != kDatasetVersion)
                throw FormatError(name, line, "unsupported dataset version " + j.value("version", json(0)).dump());
            want_maps = j.at("maps").get<std::size_t>();
            want_eps = j.at("episodes").get<std::size_t>();
            header = true;
            return;
        }
        const auto type = j.at("type").get<std::string>();
        if (type == "map") {
            const auto id = j.at("id").get<std::string>();
            if (!ds.episodes.empty()) throw FormatError(name, line, "map after episodes");
            if (!ds.maps.emplace(id, map_from_json(j)).second) throw FormatError(name, line, "duplicate map id " + id);
        } else if (type == "episode") {
            auto ep = episode_from_json(j);
            if (!ds.maps.count(ep.map_id)) throw FormatError(name, line, "unknown map id " + ep.map_id);
            const auto& map = ds.maps.at(ep.map_id);
            for (const auto& p : ep.pano.points)
                if (!map.is_free(p)) throw FormatError(name, line, "pano point in blocked space");
            ds.episodes.push_back(std::move(ep));
        } else {
            throw FormatError(name, line, "unknown record type " + type);
        }
    });
    if (!header) throw FormatError(name, 1, "empty dataset file");
    if (ds.maps.size() != want_maps || ds.episodes.size() != want_eps)
        throw FormatError(name, last_line, "record count does not match header (maps " + std::to_string(ds.maps.size()) +
                                               "/" + std::to_string(want_maps) + ", episodes " +
                                               std::to_string(ds.episodes.size()) + "/" + std::to_string(want_eps) + ")");
    return ds;
}

inline void save_dataset(const std::string& path, const Dataset& ds)
{
    auto out = open_output(path);
    write_dataset(out, ds);
}

inline Dataset load_dataset(const std::string& path)
{
    auto in = open_input(path);
    return read_dataset(in, path);
}

// trajectory logs ----------------------------------------------------------------

struct TrajectoryLog
{
    std::string episode_id;
    Trajectory trajectory;
};

inline json trajectory_to_json(const std::string& episode_id, const Trajectory& t)
{
    json poses = json::array();
    for (const auto& p : t.poses) poses.push_back(pose_json(p));
    json actions = json::array();
    for (auto a : t.actions) actions.push_back(std::string(action_name(a)));
    return {{"episode_id", episode_id}, {"poses", poses}, {"actions", actions}, {"stopped", t.stopped}};
}

inline ActionType parse_action(const std::string& s)
{
    for (int i = 0; i < kNumActions; ++i)
        if (action_name(action_from_index(i)) == s) return action_from_index(i);
    throw InvalidArgument("unknown action " + s);
}

inline TrajectoryLog trajectory_from_json(const json& j)
{
    TrajectoryLog log;
    log.episode_id = j.at("episode_id").get<std::string>();
    for (const auto& p : j.at("poses")) log.trajectory.poses.push_back(pose_from_json(p));
    for (const auto& a : j.at("actions")) log.trajectory.actions.push_back(parse_action(a.get<std::string>()));
    log.trajectory.stopped = j.value("stopped", false);
    if (log.trajectory.poses.empty()) throw InvalidArgument("trajectory has no poses");
    return log;
}

inline void write_trajectories(std::ostream& out, const std::vector<TrajectoryLog>& logs)
{
    for (const auto& l : logs) out << trajectory_to_json(l.episode_id, l.trajectory).dump() << '\n';
}

inline std::vector<TrajectoryLog> read_trajectories(std::istream& in, const std::string& name = "<trajectories>")
{
    std::vector<TrajectoryLog> out;
    for_each_jsonl(in, name, [&](const json& j, std::size_t) { out.push_back(trajectory_from_json(j)); });
    return out;
}

// metrics ------------------------------------------------------------------------

inline json report_to_json(const MetricsReport& r)
{
    return {{"episode_id", r.episode_id}, {"split", r.split}, {"divergence", r.divergence}, {"tl", r.tl},
            {"ne", r.ne},                 {"sr", r.sr},       {"os", r.os},                 {"spl", r.spl},
            {"ndtw", r.ndtw},             {"sdtw", r.sdtw},   {"wa_05", r.wa_05},           {"wa_10", r.wa_10}};
}

inline MetricsReport report_from_json(const json& j)
{
    MetricsReport r;
    r.episode_id = j.at("episode_id").get<std::string>();
    r.split = j.value("split", "");
    r.divergence = j.at("divergence").get<double>();
    r.tl = j.at("tl").get<double>();
    r.ne = j.at("ne").get<double>();
    r.sr = j.at("sr").get<double>();
    r.os = j.at("os").get<double>();
    r.spl = j.at("spl").get<double>();
    r.ndtw = j.at("ndtw").get<double>();
    r.sdtw = j.at("sdtw").get<double>();
    r.wa_05 = j.at("wa_05").get<double>();
    r.wa_10 = j.at("wa_10").get<double>();
    return r;
}

inline void write_reports(std::ostream& out, const std::vector<MetricsReport>& reports)
{
    for (const auto& r : reports) out << report_to_json(r).dump() << '\n';
}

inline std::vector<MetricsReport> read_reports(std::istream& in, const std::string& name = "<metrics>")
{
    std::vector<MetricsReport> out;
    for_each_jsonl(in, name, [&](const json& j, std::size_t) { out.push_back(report_from_json(j)); });
    return out;
}

} // namespace lawnav

#endif // LAWNAV_IO_HPP
