#ifndef LAWNAV_TRAINER_HPP
#define LAWNAV_TRAINER_HPP

#include "episodes.hpp"
#include "metrics.hpp"
#include "policy.hpp"
#include "sensors.hpp"

#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace lawnav
{

struct OptimizerConfig
{
    double learning_rate = 0.1;
    double momentum = 0.9;
    double clip_norm = 5.0;
    int batch_episodes = 4;
    double final_lr_fraction = 0.05; // learning rate at the end of each phase or round, as a fraction
};

struct TrainConfig
{
    SupervisionMode mode;
    int tf_epochs = 160;         // teacher-forcing epochs
    int dagger_rounds = 1;
    int dagger_episodes = 0;     // episodes rolled out per round (0 = all training episodes)
    int dagger_epochs = 4;       // epochs over the aggregated buffer after each round
    double beta_base = 0.75;     // beta_k = beta_base^k
    int max_steps = 200;
    OptimizerConfig optimizer;
    PolicyConfig policy;
    OracleConfig oracle;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (tf_epochs < 0 || dagger_rounds < 0 || dagger_epochs < 0 || dagger_episodes < 0)
            throw ConfigError("epoch and round counts must be non-negative");
        if (!(beta_base >= 0.0 && beta_base <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
        if (max_steps < 1) throw ConfigError("max_steps must be positive");
        if (optimizer.batch_episodes < 1) throw ConfigError("batch size must be positive");
        if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
        if (!(optimizer.clip_norm > 0.0)) throw ConfigError("clip norm must be positive");
        if (!(optimizer.final_lr_fraction > 0.0 && optimizer.final_lr_fraction <= 1.0))
            throw ConfigError("final_lr_fraction must lie in (0, 1]");
    }

    double beta(int round) const { return std::pow(beta_base, round); }
};

/// Aggregated oracle-labelled rollouts; only ever appended to.
class ReplayBuffer
{
  public:
    void append(std::vector<EpisodeRecord> records)
    {
        for (auto& r : records) {
            steps_ += r.steps.size();
            records_.push_back(std::move(r));
        }
    }
    const std::vector<EpisodeRecord>& records() const noexcept { return records_; }
    std::size_t episode_count() const noexcept { return records_.size(); }
    std::size_t step_count() const noexcept { return steps_; }

  private:
    std::vector<EpisodeRecord> records_;
    std::size_t steps_ = 0;
};

/// Per-episode data shared by oracles, rollouts and metrics.
struct EpisodeContext
{
    const Episode* episode = nullptr;
    const GridMap* map = nullptr;
    WaypointPath step_reference;
    std::unique_ptr<DistanceField> goal_field;
    std::vector<int> tokens;

    /// Waypoints the language-aligned oracle follows for a given density.
    WaypointPath law_path(PathKind kind) const
    {
        switch (kind.tag) {
        case PathKind::Tag::Pano: return episode->pano;
        case PathKind::Tag::Step: return step_reference;
        case PathKind::Tag::Resampled: return resample_equidistant(*map, step_reference, kind.count);
        }
        return episode->pano;
    }
};

inline EpisodeContext make_context(const Dataset& ds, const Episode& ep)
{
    EpisodeContext c;
    c.episode = &ep;
    c.map = &ds.map_for(ep);
    c.step_reference = densify_to_steps(*c.map, ep.pano);
    c.goal_field = std::make_unique<DistanceField>(*c.map, ep.goal);
    c.tokens = token_ids(ep.instruction);
    return c;
}

inline std::vector<EpisodeContext> make_contexts(const Dataset& ds, const std::vector<const Episode*>& episodes)
{
    std::vector<EpisodeContext> out(episodes.size());
    parallel_for(episodes.size(), [&](std::size_t i) { out[i] = make_context(ds, *episodes[i]); });
    return out;
}

/// The labelling oracle of one rollout (stateful for the language-aligned sensor).
class Supervisor
{
  public:
    Supervisor(const EpisodeContext& ctx, const SupervisionMode& mode, const OracleConfig& cfg, std::uint64_t episode_seed)
        : ctx_(ctx), mode_(mode), cfg_(cfg), seed_(episode_seed)
    {
        if (mode.kind != SupervisionMode::Kind::Goal) law_path_ = ctx.law_path(mode.path);
    }

    /// Loss targets at this pose plus the action the oracle would execute.
    std::pair<LabelSet, ActionType> label(const Pose& pose, std::size_t step)
    {
        const auto& ep = *ctx_.episode;
        switch (mode_.kind) {
        case SupervisionMode::Kind::Goal: {
            const auto g = goal_action(*ctx_.map, pose, *ctx_.goal_field, ep.pano.size(), cfg_);
            return {{{g.action, 1.0}}, g.action};
        }
        case SupervisionMode::Kind::Law: {
            const auto l = law_action(*ctx_.map, pose, law_path_, progress_, cfg_);
            return {{{l.action, 1.0}}, l.action};
        }
        default: {
            const auto l = law_action(*ctx_.map, pose, law_path_, progress_, cfg_);
            const auto g = goal_action(*ctx_.map, pose, *ctx_.goal_field, ep.pano.size(), cfg_);
            auto labels = mixed_labels(mode_, l, g, seed_, step);
            // G+L executes the language-aligned action; G-or-L executes whichever label was drawn
            const ActionType act = mode_.kind == SupervisionMode::Kind::MixedSum ? l.action : labels.front().action;
            return {std::move(labels), act};
        }
        }
    }

  private:
    const EpisodeContext& ctx_;
    SupervisionMode mode_;
    OracleConfig cfg_;
    std::uint64_t seed_;
    WaypointPath law_path_;
    LawProgress progress_;
};

struct CollectResult
{
    EpisodeRecord record;
    Trajectory trajectory;
};

/// Rolls out one episode, labelling every visited state. Each step executes the oracle
/// action with probability beta, otherwise an action sampled from the policy.
inline CollectResult collect_episode(const EpisodeContext& ctx, const SupervisionMode& mode, const PolicyParams* params,
                                     double beta, int max_steps, const OracleConfig& cfg, std::uint64_t seed, int round)
{
    const auto& map = *ctx.map;
    const auto& ep = *ctx.episode;
    CollectResult out;
    out.record.episode_id = ep.id;
    out.record.tokens = ctx.tokens;
    out.record.round = round;
    Supervisor sup(ctx, mode, cfg, derive_seed(seed, 0x656c6162ULL));
    Rng rng(derive_seed(seed, 0x726f6c6cULL));
    PolicyState state;
    if (params) state = initial_state(*params);
    Pose pose = ep.start;
    out.trajectory.poses.push_back(pose);
    std::optional<ActionType> prev;
    for (int t = 0; t < max_steps; ++t) {
        Observation obs = observe(map, pose, prev, t);
        auto [labels, oracle_act] = sup.label(pose, static_cast<std::size_t>(t));
        ActionType act = oracle_act;
        const bool use_oracle = beta >= 1.0 || params == nullptr || uniform01(rng) < beta;
        if (params && beta < 1.0) {
            auto o = policy_step(*params, state, obs, ctx.tokens);
            state = std::move(o.state);
            const ActionType sampled = select_action(o.probs, SelectMode::Sample, &rng);
            if (!use_oracle) act = sampled;
        }
        out.record.steps.push_back({std::move(obs), std::move(labels)});
        out.trajectory.actions.push_back(act);
        prev = act;
        if (act == ActionType::Stop) {
            out.trajectory.poses.push_back(pose);
            out.trajectory.stopped = true;
            break;
        }
        pose = apply_action(map, pose, act);
        out.trajectory.poses.push_back(pose);
    }
    return out;
}

// optimisation ---------------------------------------------------------------

struct TrainLogRow
{
    std::string phase;
    int round = 0;
    int epoch = 0;
    double loss = 0.0;
    std::size_t buffer_size = 0;
};

using TrainLogger = std::function<void(const TrainLogRow&)>;

inline void write_train_log_header(std::ostream& out) { out << "phase,round,epoch,loss,buffer_size\n"; }

inline void write_train_log_row(std::ostream& out, const TrainLogRow& r)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", r.loss);
    out << r.phase << ',' << r.round << ',' << r.epoch << ',' << buf << ',' << r.buffer_size << '\n';
}

/// SGD with momentum and global-norm clipping. `lr_scale` multiplies the learning rate.
class Sgd
{
  public:
    Sgd(const OptimizerConfig& cfg, std::size_t n) : cfg_(cfg), velocity_(n, 0.0) {}

    const OptimizerConfig& config() const noexcept { return cfg_; }

    void step(PolicyParams& params, std::vector<double>& grad, double lr_scale = 1.0)
    {
        double sq = 0.0;
        for (double g : grad) sq += g * g;
        const double gnorm = std::sqrt(sq);
        const double scale = gnorm > cfg_.clip_norm ? cfg_.clip_norm / gnorm : 1.0;
        for (std::size_t k = 0; k < grad.size(); ++k) {
            velocity_[k] = cfg_.momentum * velocity_[k] - cfg_.learning_rate * lr_scale * scale * grad[k];
            params.values[k] += velocity_[k];
        }
    }

  private:
    OptimizerConfig cfg_;
    std::vector<double> velocity_;
};

/// Learning-rate scale at fraction `t` of a phase: linear from 1 down to final_lr_fraction.
inline double lr_scale_at(const OptimizerConfig& cfg, double t) { return 1.0 - (1.0 - cfg.final_lr_fraction) * t; }

/// One pass over the records in a seeded order; returns the step-weighted mean loss.
/// This is epoch `epoch` of `epochs` in the current phase (sets the decayed rate).
inline double train_epoch(PolicyParams& params, Sgd& opt, const std::vector<EpisodeRecord>& records, int batch,
                          std::uint64_t seed, int epoch = 0, int epochs = 1)
{
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i - 1)))]);
    double total = 0.0;
    std::size_t steps = 0;
    std::vector<const EpisodeRecord*> mb;
    const std::size_t batches = (order.size() + static_cast<std::size_t>(batch) - 1) / static_cast<std::size_t>(batch);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
        mb.clear();
        for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(batch)); ++i)
            mb.push_back(&records[order[i]]);
        auto lg = loss_and_grad(params, mb);
        const std::size_t n = batch_steps(mb);
        total += lg.loss * static_cast<double>(n);
        steps += n;
        const double t = (epoch + static_cast<double>(start / static_cast<std::size_t>(batch)) / static_cast<double>(batches)) /
                         std::max(1, epochs);
        opt.step(params, lg.grad, lr_scale_at(opt.config(), t));
    }
    return steps ? total / static_cast<double>(steps) : 0.0;
}

inline std::vector<EpisodeRecord> collect_all(const std::vector<EpisodeContext>& contexts, const SupervisionMode& mode,
                                              const PolicyParams* params, double beta, const TrainConfig& cfg, int round)
{
    std::vector<EpisodeRecord> records(contexts.size());
    parallel_for(contexts.size(), [&](std::size_t i) {
        records[i] = collect_episode(contexts[i], mode, params, beta, cfg.max_steps, cfg.oracle,
                                     derive_seed(cfg.seed, 0x636f6c6cULL, static_cast<std::uint64_t>(round), i), round)
                         .record;
    });
    return records;
}

/// Supervision used while teacher forcing. Mixtures pretrain with the goal oracle and
/// switch to the mixed labels for DAgger.
inline SupervisionMode teacher_forcing_mode(const SupervisionMode& mode)
{
    return mode.mixed() ? SupervisionMode::goal() : mode;
}

/// Behaviour cloning on oracle-executed rollouts.
inline PolicyParams teacher_forcing_phase(const std::vector<EpisodeContext>& train, const TrainConfig& cfg,
                                          ReplayBuffer& buffer, const TrainLogger& log = {})
{
    if (train.empty()) throw InvalidArgument("teacher forcing needs a non-empty dataset");
    cfg.validate();
    PolicyParams params = init_params(cfg.seed, cfg.policy);
    const auto mode = teacher_forcing_mode(cfg.mode);
    auto records = collect_all(train, mode, nullptr, 1.0, cfg, 0);
    ReplayBuffer tf;
    tf.append(std::move(records));
    Sgd opt(cfg.optimizer, params.size());
    for (int e = 0; e < cfg.tf_epochs; ++e) {
        const double loss = train_epoch(params, opt, tf.records(), cfg.optimizer.batch_episodes,
                                        derive_seed(cfg.seed, 0x7466ULL, static_cast<std::uint64_t>(e)), e, cfg.tf_epochs);
        if (log) log({"tf", 0, e, loss, tf.step_count()});
    }
    // mixtures start DAgger from an empty buffer so goal-only labels are not replayed
    if (!cfg.mode.mixed()) buffer.append(std::vector<EpisodeRecord>(tf.records()));
    return params;
}

/// Selects the episodes rolled out in a DAgger round.
inline std::vector<std::size_t> dagger_subset(std::size_t n, const TrainConfig& cfg, int round)
{
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (cfg.dagger_episodes == 0 || static_cast<std::size_t>(cfg.dagger_episodes) >= n) return idx;
    Rng rng(derive_seed(cfg.seed, 0x737562ULL, static_cast<std::uint64_t>(round)));
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i - 1)))]);
    idx.resize(static_cast<std::size_t>(cfg.dagger_episodes));
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// DAgger round k (k >= 1 for the rounds after teacher forcing; beta_k = base^k).
inline void dagger_round(PolicyParams& params, const std::vector<EpisodeContext>& train, ReplayBuffer& buffer, int round,
                         const TrainConfig& cfg, Sgd& opt, const TrainLogger& log = {})
{
    if (round < 0) throw InvalidArgument("dagger round must be non-negative");
    const auto idx = dagger_subset(train.size(), cfg, round);
    std::vector<EpisodeRecord> records(idx.size());
    const PolicyParams snapshot = params;
    const double beta = cfg.beta(round);
    parallel_for(idx.size(), [&](std::size_t i) {
        records[i] = collect_episode(train[idx[i]], cfg.mode, &snapshot, beta, cfg.max_steps, cfg.oracle,
                                     derive_seed(cfg.seed, 0x636f6c6cULL, static_cast<std::uint64_t>(round), idx[i]), round)
                         .record;
    });
    buffer.append(std::move(records));
    for (int e = 0; e < cfg.dagger_epochs; ++e) {
        const double loss = train_epoch(params, opt, buffer.records(), cfg.optimizer.batch_episodes,
                                        derive_seed(cfg.seed, 0x6461ULL, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(e)),
                                        e, cfg.dagger_epochs);
        if (log) log({"dagger", round, e, loss, buffer.step_count()});
    }
}

struct TrainResult
{
    PolicyParams params;
    std::vector<PolicyParams> round_checkpoints; // after teacher forcing, then after each DAgger round
};

/// Teacher forcing followed by DAgger rounds 1..N.
inline TrainResult train_policy(const Dataset& ds, const TrainConfig& cfg, const TrainLogger& log = {})
{
    cfg.validate();
    const auto contexts = make_contexts(ds, ds.split("train"));
    ReplayBuffer buffer;
    TrainResult result;
    result.params = teacher_forcing_phase(contexts, cfg, buffer, log);
    result.round_checkpoints.push_back(result.params);
    Sgd opt(cfg.optimizer, result.params.size());
    for (int k = 1; k <= cfg.dagger_rounds; ++k) {
        dagger_round(result.params, contexts, buffer, k, cfg, opt, log);
        result.round_checkpoints.push_back(result.params);
    }
    return result;
}

// evaluation -----------------------------------------------------------------

/// Greedy rollout of the policy (or of the oracle when `oracle` is given).
inline Trajectory rollout_policy(const EpisodeContext& ctx, const PolicyParams* params, int max_steps,
                                 const SupervisionMode* oracle = nullptr, const OracleConfig& cfg = {})
{
    if (oracle) return collect_episode(ctx, *oracle, nullptr, 1.0, max_steps, cfg, 0, 0).trajectory;
    if (!params) throw InvalidArgument("rollout_policy needs parameters or an oracle");
    const auto& map = *ctx.map;
    Trajectory traj;
    Pose pose = ctx.episode->start;
    traj.poses.push_back(pose);
    PolicyState state = initial_state(*params);
    std::optional<ActionType> prev;
    for (int t = 0; t < max_steps; ++t) {
        auto o = policy_step(*params, state, observe(map, pose, prev, t), ctx.tokens);
        state = std::move(o.state);
        const ActionType act = select_action(o.probs, SelectMode::Argmax);
        traj.actions.push_back(act);
        prev = act;
        if (act == ActionType::Stop) {
            traj.poses.push_back(pose);
            traj.stopped = true;
            break;
        }
        pose = apply_action(map, pose, act);
        traj.poses.push_back(pose);
    }
    return traj;
}

struct EvalOptions
{
    int max_steps = 200;
    std::optional<SupervisionMode> oracle_bypass; // roll out this oracle instead of the policy
    MetricsOptions metrics;
};

struct EpisodeEval
{
    MetricsReport report;
    Trajectory trajectory;
};

struct EvalResult
{
    std::vector<EpisodeEval> episodes;
    std::map<std::string, MetricsReport> split_means;

    std::vector<MetricsReport> reports(std::string_view split = {}) const
    {
        std::vector<MetricsReport> out;
        for (const auto& e : episodes)
            if (split.empty() || e.report.split == split) out.push_back(e.report);
        return out;
    }
};

inline EvalResult evaluate_policy(const PolicyParams* params, const Dataset& ds, const std::vector<const Episode*>& episodes,
                                  const EvalOptions& opts = {})
{
    EvalResult out;
    out.episodes.resize(episodes.size());
    parallel_for(episodes.size(), [&](std::size_t i) {
        const auto ctx = make_context(ds, *episodes[i]);
        auto traj = rollout_policy(ctx, params, opts.max_steps, opts.oracle_bypass ? &*opts.oracle_bypass : nullptr);
        out.episodes[i].report = compute_metrics(*ctx.map, *ctx.episode, ctx.step_reference, *ctx.goal_field, traj, opts.metrics);
        out.episodes[i].trajectory = std::move(traj);
    });
    std::map<std::string, std::vector<MetricsReport>> by_split;
    for (const auto& e : out.episodes) by_split[e.report.split].push_back(e.report);
    for (const auto& [split, reps] : by_split) {
        auto m = mean_report(reps);
        m.split = split;
        m.episode_id = "mean";
        out.split_means[split] = m;
    }
    return out;
}

/// Evaluates the validation splits (val_seen and val_unseen).
inline EvalResult evaluate_policy(const PolicyParams* params, const Dataset& ds, const EvalOptions& opts = {})
{
    std::vector<const Episode*> eps;
    for (const auto& ep : ds.episodes)
        if (ep.split != "train") eps.push_back(&ep);
    return evaluate_policy(params, ds, eps, opts);
}

} // namespace lawnav

#endif // LAWNAV_TRAINER_HPP
