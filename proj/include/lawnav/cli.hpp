#ifndef LAWNAV_CLI_HPP
#define LAWNAV_CLI_HPP

#include "io.hpp"
#include "report.hpp"
#include "trainer.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

namespace lawnav
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitMalformed = 1;
inline constexpr int kExitConfig = 2;

/// Every tunable default in one place. Loaded from `key = value` files; flags override.
struct RunConfig
{
    DatasetSpec dataset;
    double low_divergence_fraction = 0.35; // share of episodes generated below divergence_threshold
    double divergence_threshold = 0.8;
    TrainConfig train;
    EvalOptions eval;
    std::string eval_split = "val";        // val | train | val_seen | val_unseen | all
    std::vector<double> bin_edges = default_bin_edges();
    double sub_instruction_tau = 0.5;
    bool sub_instruction_all_waypoints = false;

    RunConfig() { apply_defaults(); }

    void apply_defaults()
    {
        train.mode = SupervisionMode::law(PathKind::pano());
        sync();
    }

    /// Derived settings that depend on several keys.
    void sync()
    {
        const double t = divergence_threshold, f = low_divergence_fraction;
        dataset.params.mixture.clear();
        if (f > 0.0) dataset.params.mixture.push_back({{0.0, t}, f});
        if (f < 1.0) dataset.params.mixture.push_back({{t, 1.0}, 1.0 - f});
        eval.max_steps = train.max_steps;
        eval.metrics.success_distance = eval.metrics.success_distance > 0 ? eval.metrics.success_distance : kSuccessDistance;
    }

    void validate() const
    {
        if (!(low_divergence_fraction >= 0.0 && low_divergence_fraction <= 1.0))
            throw ConfigError("low_divergence_fraction must lie in [0, 1]");
        if (!(divergence_threshold > 0.0 && divergence_threshold < 1.0))
            throw ConfigError("divergence_threshold must lie in (0, 1)");
        try {
            dataset.params.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
        if (dataset.seen_maps < 1 || dataset.unseen_maps < 0 || dataset.train_episodes < 0 ||
            dataset.val_seen_episodes < 0 || dataset.val_unseen_episodes < 0)
            throw ConfigError("dataset counts must be non-negative (and at least one seen map)");
        train.validate();
        if (!(sub_instruction_tau > 0.0)) throw ConfigError("sub_instruction_tau must be positive");
    }
};

// parsing helpers ----------------------------------------------------------------

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v)
{
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + v + "'");
    }
    if (used != v.size()) throw ConfigError("expected a number, got '" + v + "'");
    return d;
}

inline long long parse_integer(const std::string& v)
{
    long long out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected a boolean, got '" + v + "'");
}

/// Accepts goal, law-pano, law-step, law-<k>, "law-k <k>", mixed-sum, mixed-random[-<p>] and
/// "mixed-random <p>".
inline SupervisionMode parse_mode(const std::string& text)
{
    std::istringstream in(text);
    std::string name, arg;
    in >> name >> arg;
    if (name == "goal") return SupervisionMode::goal();
    if (name == "law-pano") return SupervisionMode::law(PathKind::pano());
    if (name == "law-step") return SupervisionMode::law(PathKind::step());
    if (name == "mixed-sum") return SupervisionMode::mixed_sum();
    auto mixed = [](const std::string& p) {
        try {
            return SupervisionMode::mixed_random(parse_double(p));
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    };
    if (name == "mixed-random") return mixed(arg.empty() ? "0.5" : arg);
    if (name.rfind("mixed-random-", 0) == 0) return mixed(name.substr(13));
    std::string k;
    if (name == "law-k") k = arg;
    else if (name.rfind("law-", 0) == 0) k = name.substr(4);
    if (!k.empty()) {
        const auto n = parse_integer(k);
        if (n < 1) throw ConfigError("law-k needs k >= 1");
        return SupervisionMode::law(PathKind::resampled(static_cast<int>(n)));
    }
    throw ConfigError("unknown supervision mode '" + text + "'");
}

inline std::vector<double> parse_edges(const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    if (out.size() < 2) throw ConfigError("bins need at least two comma-separated edges");
    return out;
}

inline std::string edges_string(const std::vector<double>& e)
{
    std::string s;
    for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "," : "") + fixed4(e[i]);
    return s;
}

struct ConfigKey
{
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<ConfigKey>& config_keys()
{
    auto num = [](auto member) {
        return ConfigKey{"", [member](RunConfig& c, const std::string& v) { member(c) = parse_double(v); },
                         [member](const RunConfig& c) {
                             std::ostringstream o;
                             o.precision(17);
                             o << member(const_cast<RunConfig&>(c));
                             return o.str();
                         }};
    };
    auto integer = [](auto member) {
        return ConfigKey{"",
                         [member](RunConfig& c, const std::string& v) {
                             member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(parse_integer(v));
                         },
                         [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
    };
    auto boolean = [](auto member) {
        return ConfigKey{"", [member](RunConfig& c, const std::string& v) { member(c) = parse_bool(v); },
                         [member](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
    };
    auto named = [](std::string name, ConfigKey k) {
        k.name = std::move(name);
        return k;
    };
    static const std::vector<ConfigKey> keys = {
        named("seed", integer([](RunConfig& c) -> std::uint64_t& { return c.dataset.params.seed; })),
        named("world_width", num([](RunConfig& c) -> double& { return c.dataset.params.world_width; })),
        named("world_height", num([](RunConfig& c) -> double& { return c.dataset.params.world_height; })),
        named("resolution", num([](RunConfig& c) -> double& { return c.dataset.params.resolution; })),
        named("rooms_x", integer([](RunConfig& c) -> int& { return c.dataset.params.rooms_x; })),
        named("rooms_y", integer([](RunConfig& c) -> int& { return c.dataset.params.rooms_y; })),
        named("wall_density", num([](RunConfig& c) -> double& { return c.dataset.params.wall_density; })),
        named("extra_door_prob", num([](RunConfig& c) -> double& { return c.dataset.params.extra_door_prob; })),
        named("door_width", num([](RunConfig& c) -> double& { return c.dataset.params.door_width; })),
        named("wall_thickness", num([](RunConfig& c) -> double& { return c.dataset.params.wall_thickness; })),
        named("landmark_count", integer([](RunConfig& c) -> int& { return c.dataset.params.landmark_count; })),
        named("pano_min", integer([](RunConfig& c) -> int& { return c.dataset.params.pano_min; })),
        named("pano_max", integer([](RunConfig& c) -> int& { return c.dataset.params.pano_max; })),
        named("min_path_length", num([](RunConfig& c) -> double& { return c.dataset.params.min_path_length; })),
        named("max_path_length", num([](RunConfig& c) -> double& { return c.dataset.params.max_path_length; })),
        named("max_detour_ratio", num([](RunConfig& c) -> double& { return c.dataset.params.max_detour_ratio; })),
        named("max_retries", integer([](RunConfig& c) -> int& { return c.dataset.params.max_retries; })),
        named("low_divergence_fraction", num([](RunConfig& c) -> double& { return c.low_divergence_fraction; })),
        named("divergence_threshold", num([](RunConfig& c) -> double& { return c.divergence_threshold; })),
        named("seen_maps", integer([](RunConfig& c) -> int& { return c.dataset.seen_maps; })),
        named("unseen_maps", integer([](RunConfig& c) -> int& { return c.dataset.unseen_maps; })),
        named("train_episodes", integer([](RunConfig& c) -> int& { return c.dataset.train_episodes; })),
        named("val_seen_episodes", integer([](RunConfig& c) -> int& { return c.dataset.val_seen_episodes; })),
        named("val_unseen_episodes", integer([](RunConfig& c) -> int& { return c.dataset.val_unseen_episodes; })),
        ConfigKey{"mode", [](RunConfig& c, const std::string& v) { c.train.mode = parse_mode(v); },
                  [](const RunConfig& c) { return c.train.mode.name(); }},
        named("train_seed", integer([](RunConfig& c) -> std::uint64_t& { return c.train.seed; })),
        named("tf_epochs", integer([](RunConfig& c) -> int& { return c.train.tf_epochs; })),
        named("dagger_rounds", integer([](RunConfig& c) -> int& { return c.train.dagger_rounds; })),
        named("dagger_episodes", integer([](RunConfig& c) -> int& { return c.train.dagger_episodes; })),
        named("dagger_epochs", integer([](RunConfig& c) -> int& { return c.train.dagger_epochs; })),
        named("beta", num([](RunConfig& c) -> double& { return c.train.beta_base; })),
        named("max_steps", integer([](RunConfig& c) -> int& { return c.train.max_steps; })),
        named("learning_rate", num([](RunConfig& c) -> double& { return c.train.optimizer.learning_rate; })),
        named("momentum", num([](RunConfig& c) -> double& { return c.train.optimizer.momentum; })),
        named("clip_norm", num([](RunConfig& c) -> double& { return c.train.optimizer.clip_norm; })),
        named("batch_episodes", integer([](RunConfig& c) -> int& { return c.train.optimizer.batch_episodes; })),
        named("final_lr_fraction", num([](RunConfig& c) -> double& { return c.train.optimizer.final_lr_fraction; })),
        named("hidden", integer([](RunConfig& c) -> int& { return c.train.policy.hidden; })),
        named("embed_dim", integer([](RunConfig& c) -> int& { return c.train.policy.embed_dim; })),
        named("proj_dim", integer([](RunConfig& c) -> int& { return c.train.policy.proj_dim; })),
        named("progress_horizon", num([](RunConfig& c) -> double& { return c.train.policy.progress_horizon; })),
        named("focus_width", num([](RunConfig& c) -> double& { return c.train.policy.focus_width; })),
        named("stop_radius", num([](RunConfig& c) -> double& { return c.train.oracle.stop_radius; })),
        named("advance_radius", num([](RunConfig& c) -> double& { return c.train.oracle.advance_radius; })),
        named("success_distance", num([](RunConfig& c) -> double& { return c.eval.metrics.success_distance; })),
        named("lenient_stop", boolean([](RunConfig& c) -> bool& { return c.eval.metrics.lenient_stop; })),
        named("ordered_wa", boolean([](RunConfig& c) -> bool& { return c.eval.metrics.ordered_wa; })),
        ConfigKey{"eval_split", [](RunConfig& c, const std::string& v) {
                      if (v != "val" && v != "train" && v != "val_seen" && v != "val_unseen" && v != "all")
                          throw ConfigError("eval_split must be val, train, val_seen, val_unseen or all");
                      c.eval_split = v;
                  },
                  [](const RunConfig& c) { return c.eval_split; }},
        ConfigKey{"bins", [](RunConfig& c, const std::string& v) { c.bin_edges = parse_edges(v); },
                  [](const RunConfig& c) { return edges_string(c.bin_edges); }},
        named("sub_instruction_tau", num([](RunConfig& c) -> double& { return c.sub_instruction_tau; })),
        ConfigKey{"sub_instruction_rule", [](RunConfig& c, const std::string& v) {
                      if (v != "end" && v != "all") throw ConfigError("sub_instruction_rule must be end or all");
                      c.sub_instruction_all_waypoints = v == "all";
                  },
                  [](const RunConfig& c) { return std::string(c.sub_instruction_all_waypoints ? "all" : "end"); }},
    };
    return keys;
}

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& k : config_keys())
        if (k.name == key) {
            k.set(cfg, value);
            return;
        }
    throw ConfigError("unknown config key '" + key + "'");
}

/// Applies a `key = value` file ('#' starts a comment). Errors name the file and line.
inline void load_config_file(RunConfig& cfg, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key = value");
        try {
            set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(n) + ": " + e.what());
        }
    }
}

inline void write_config(std::ostream& out, const RunConfig& cfg)
{
    for (const auto& k : config_keys()) out << k.name << " = " << k.get(cfg) << '\n';
}

// commands ---------------------------------------------------------------------

namespace detail
{

inline std::filesystem::path ensure_dir(const std::string& dir)
{
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<const Episode*> select_split(const Dataset& ds, const std::string& split)
{
    std::vector<const Episode*> out;
    for (const auto& ep : ds.episodes) {
        const bool take = split == "all" || ep.split == split || (split == "val" && ep.split != "train");
        if (take) out.push_back(&ep);
    }
    return out;
}

/// Writes per-episode metrics (JSONL), the split summary (markdown, json, csv) and the
/// trajectory log when given.
inline void write_eval_outputs(const std::filesystem::path& dir, const std::vector<MetricsReport>& reports,
                               const std::vector<TrajectoryLog>* logs, const std::string& label, std::ostream& out)
{
    {
        auto f = open_output((dir / "metrics.jsonl").string());
        write_reports(f, reports);
    }
    if (logs) {
        auto f = open_output((dir / "trajectories.jsonl").string());
        write_trajectories(f, *logs);
    }
    std::map<std::string, std::vector<MetricsReport>> by_split;
    for (const auto& r : reports) by_split[r.split].push_back(r);
    std::map<std::string, MetricsReport> means;
    std::vector<MetricsReport> mean_rows;
    for (const auto& [split, reps] : by_split) {
        auto m = mean_report(reps);
        m.episode_id = "mean";
        m.split = split;
        means[split] = m;
        mean_rows.push_back(m);
    }
    {
        auto f = open_output((dir / "summary.md").string());
        write_summary_table(f, means, label);
    }
    {
        auto f = open_output((dir / "summary.csv").string());
        write_report(f, mean_rows, ReportFormat::Csv);
    }
    {
        auto f = open_output((dir / "summary.json").string());
        write_report(f, mean_rows, ReportFormat::Json);
    }
    write_summary_table(out, means, label);
}

} // namespace detail

inline int cmd_gen(const RunConfig& cfg, const std::string& out_path, std::ostream& out)
{
    const auto ds = generate_dataset(cfg.dataset);
    save_dataset(out_path, ds);
    out << "wrote " << ds.episodes.size() << " episodes on " << ds.maps.size() << " maps to " << out_path << '\n';
    return kExitOk;
}

inline int cmd_train(const RunConfig& cfg, const std::string& dataset_path, const std::string& out_dir, std::ostream& out)
{
    const auto ds = load_dataset(dataset_path);
    const auto dir = detail::ensure_dir(out_dir);
    {
        auto f = open_output((dir / "config.txt").string());
        write_config(f, cfg);
    }
    auto log = open_output((dir / "train_log.csv").string());
    write_train_log_header(log);
    const auto result = train_policy(ds, cfg.train, [&](const TrainLogRow& r) { write_train_log_row(log, r); });
    for (std::size_t k = 0; k < result.round_checkpoints.size(); ++k)
        save_checkpoint((dir / ("checkpoint_round" + std::to_string(k) + ".json")).string(), result.round_checkpoints[k]);
    save_checkpoint((dir / "checkpoint.json").string(), result.params);
    out << "trained " << cfg.train.mode.name() << " (seed " << cfg.train.seed << "), checkpoint " << (dir / "checkpoint.json").string()
        << '\n';
    return kExitOk;
}

inline int cmd_eval(const RunConfig& cfg, const std::string& dataset_path, const std::string& checkpoint,
                    const std::optional<SupervisionMode>& oracle, const std::string& out_dir, std::ostream& out)
{
    const auto ds = load_dataset(dataset_path);
    std::optional<PolicyParams> params;
    if (!oracle) {
        if (checkpoint.empty()) throw ConfigError("eval needs --checkpoint (or --oracle)");
        try {
            params = load_checkpoint(checkpoint);
        } catch (const InvalidArgument& e) {
            throw FormatError(checkpoint, 1, e.what());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(checkpoint, 1, e.what());
        }
    }
    EvalOptions opts = cfg.eval;
    opts.oracle_bypass = oracle;
    const auto res = evaluate_policy(params ? &*params : nullptr, ds, detail::select_split(ds, cfg.eval_split), opts);
    std::vector<MetricsReport> reports;
    std::vector<TrajectoryLog> logs;
    for (const auto& e : res.episodes) {
        reports.push_back(e.report);
        logs.push_back({e.report.episode_id, e.trajectory});
    }
    detail::write_eval_outputs(detail::ensure_dir(out_dir), reports, &logs, oracle ? "oracle-" + oracle->name() : "policy", out);
    return kExitOk;
}

inline int cmd_score(const RunConfig& cfg, const std::string& dataset_path, const std::string& log_path,
                     const std::string& out_dir, std::ostream& out)
{
    const auto ds = load_dataset(dataset_path);
    auto in = open_input(log_path);
    const auto logs = read_trajectories(in, log_path);
    std::map<std::string, const Episode*> by_id;
    for (const auto& ep : ds.episodes) by_id[ep.id] = &ep;
    std::vector<MetricsReport> reports(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i)
        if (!by_id.count(logs[i].episode_id))
            throw FormatError(log_path, i + 1, "unknown episode id " + logs[i].episode_id);
    parallel_for(logs.size(), [&](std::size_t i) {
        const auto ctx = make_context(ds, *by_id.at(logs[i].episode_id));
        reports[i] = compute_metrics(*ctx.map, *ctx.episode, ctx.step_reference, *ctx.goal_field, logs[i].trajectory,
                                     cfg.eval.metrics);
    });
    detail::write_eval_outputs(detail::ensure_dir(out_dir), reports, nullptr, "scored", out);
    return kExitOk;
}

struct AuditResult
{
    std::size_t total = 0;
    std::size_t below = 0;
    double fraction = 0.0;
    BinTable histogram;
};

inline AuditResult audit_dataset(const Dataset& ds, double threshold, const std::vector<double>& edges)
{
    AuditResult a;
    std::vector<MetricsReport> rows;
    for (const auto& ep : ds.episodes) {
        ++a.total;
        if (ep.divergence < threshold) ++a.below;
        MetricsReport r;
        r.divergence = ep.divergence;
        rows.push_back(r);
    }
    a.fraction = a.total ? static_cast<double>(a.below) / static_cast<double>(a.total) : 0.0;
    a.histogram = bin_by_divergence(rows, edges);
    return a;
}

inline int cmd_audit(const RunConfig& cfg, const std::string& dataset_path, double threshold, const std::string& out_dir,
                     std::ostream& out)
{
    const auto ds = load_dataset(dataset_path);
    const auto a = audit_dataset(ds, threshold, cfg.bin_edges);
    out << "bin_lo,bin_hi,n\n";
    for (const auto& b : a.histogram.bins) out << fixed4(b.lo) << ',' << fixed4(b.hi) << ',' << b.n << '\n';
    out << "fraction_below_" << fixed4(threshold) << " = " << fixed4(a.fraction) << " (" << a.below << "/" << a.total << ")\n";
    if (!out_dir.empty()) {
        const auto dir = detail::ensure_dir(out_dir);
        auto f = open_output((dir / "audit.csv").string());
        f << "bin_lo,bin_hi,n\n";
        for (const auto& b : a.histogram.bins) f << fixed4(b.lo) << ',' << fixed4(b.hi) << ',' << b.n << '\n';
        f << "# fraction_below," << fixed4(threshold) << ',' << fixed4(a.fraction) << '\n';
    }
    return kExitOk;
}

inline int cmd_analyze(const RunConfig& cfg, const std::string& metrics_path, const std::string& dataset_path,
                       const std::string& log_path, const std::string& out_dir, std::ostream& out)
{
    auto in = open_input(metrics_path);
    const auto reports = read_reports(in, metrics_path);
    const auto table = bin_by_divergence(reports, cfg.bin_edges);
    const auto dir = detail::ensure_dir(out_dir);
    {
        auto f = open_output((dir / "bins.csv").string());
        write_bins_csv(f, table);
    }
    write_bins_csv(out, table);
    if (!log_path.empty()) {
        if (dataset_path.empty()) throw ConfigError("analyze needs --dataset with --trajectories");
        const auto ds = load_dataset(dataset_path);
        auto lin = open_input(log_path);
        const auto logs = read_trajectories(lin, log_path);
        std::map<std::string, const Episode*> by_id;
        for (const auto& ep : ds.episodes) by_id[ep.id] = &ep;
        auto f = open_output((dir / "sub_instructions.csv").string());
        write_sub_instruction_header(f);
        std::size_t total = 0, correct = 0;
        for (std::size_t i = 0; i < logs.size(); ++i) {
            auto it = by_id.find(logs[i].episode_id);
            if (it == by_id.end()) throw FormatError(log_path, i + 1, "unknown episode id " + logs[i].episode_id);
            const auto pts = logs[i].trajectory.points();
            const auto visits = sub_instruction_visits(ds.map_for(*it->second), *it->second, pts, cfg.sub_instruction_tau,
                                                       cfg.sub_instruction_all_waypoints);
            write_sub_instruction_rows(f, *it->second, visits);
            total += visits.size();
            correct += static_cast<std::size_t>(std::count(visits.begin(), visits.end(), true));
        }
        out << "sub-instructions followed: " << correct << "/" << total << '\n';
    }
    return kExitOk;
}

/// Entry point of the lawsim tool. Returns 0 on success, 1 for malformed input files
/// and 2 for configuration or usage errors.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"lawsim: language-aligned waypoint supervision benchmark"};
    app.require_subcommand(1);
    std::string config_path, dataset, checkpoint, out_path, log_path, metrics_path, oracle_mode;
    std::vector<std::string> mode_args;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::string bins;
    std::vector<std::string> sets;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value config file");
        sub->add_option("--seed", seed, "seed (dataset seed for gen, training seed for train)");
        sub->add_option("--set", sets, "override a config key (key=value)");
    };
    auto* gen = app.add_subcommand("gen", "generate worlds and episodes");
    common(gen);
    gen->add_option("--out", out_path, "dataset JSONL")->required();
    auto* train = app.add_subcommand("train", "teacher forcing + DAgger");
    common(train);
    train->add_option("--dataset", dataset)->required();
    train->add_option("--mode", mode_args, "supervision mode")->expected(1, 2);
    train->add_option("--out", out_path, "output directory")->required();
    auto* eval = app.add_subcommand("eval", "greedy rollouts + metrics");
    common(eval);
    eval->add_option("--dataset", dataset)->required();
    eval->add_option("--checkpoint", checkpoint);
    eval->add_option("--oracle", oracle_mode, "roll out this oracle instead of a policy");
    eval->add_option("--out", out_path, "output directory")->required();
    auto* score = app.add_subcommand("score", "metrics for an external trajectory log");
    common(score);
    score->add_option("--dataset", dataset)->required();
    score->add_option("--trajectories", log_path, "trajectory log JSONL")->required();
    score->add_option("--out", out_path, "output directory")->required();
    auto* audit = app.add_subcommand("audit", "divergence histogram");
    common(audit);
    audit->add_option("--dataset", dataset)->required();
    audit->add_option("--threshold", threshold);
    audit->add_option("--bins", bins);
    audit->add_option("--out", out_path, "output directory");
    auto* analyze = app.add_subcommand("analyze", "divergence-binned analysis");
    common(analyze);
    analyze->add_option("--metrics", metrics_path, "metrics JSONL")->required();
    analyze->add_option("--bins", bins);
    analyze->add_option("--threshold", threshold, "sub-instruction visit radius");
    analyze->add_option("--dataset", dataset);
    analyze->add_option("--trajectories", log_path);
    analyze->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) load_config_file(cfg, config_path);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
            set_config_value(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
        }
        if (!bins.empty()) cfg.bin_edges = parse_edges(bins);
        std::string mode_text;
        for (const auto& m : mode_args) mode_text += (mode_text.empty() ? "" : " ") + m;
        if (!mode_text.empty()) cfg.train.mode = parse_mode(mode_text);
        if (seed) {
            if (gen->parsed()) cfg.dataset.params.seed = *seed;
            else cfg.train.seed = *seed;
        }
        if (analyze->parsed() && threshold) cfg.sub_instruction_tau = *threshold;
        cfg.sync();
        cfg.validate();

        if (gen->parsed()) return cmd_gen(cfg, out_path, out);
        if (train->parsed()) return cmd_train(cfg, dataset, out_path, out);
        if (eval->parsed()) {
            std::optional<SupervisionMode> oracle;
            if (!oracle_mode.empty()) oracle = parse_mode(oracle_mode);
            return cmd_eval(cfg, dataset, checkpoint, oracle, out_path, out);
        }
        if (score->parsed()) return cmd_score(cfg, dataset, log_path, out_path, out);
        if (audit->parsed()) return cmd_audit(cfg, dataset, threshold.value_or(cfg.divergence_threshold), out_path, out);
        if (analyze->parsed()) return cmd_analyze(cfg, metrics_path, dataset, log_path, out_path, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const FormatError& e) {
        err << "malformed input: " << e.what() << '\n';
        return kExitMalformed;
    } catch (const InvalidArgument& e) {
        // bad values reaching the library from flags or config
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitMalformed;
    }
    return kExitConfig;
}

} // namespace lawnav

#endif // LAWNAV_CLI_HPP
