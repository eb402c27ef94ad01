#ifndef LAWNAV_POLICY_HPP
#define LAWNAV_POLICY_HPP

#include "core.hpp"
#include "episode.hpp"
#include "sensors.hpp"
#include "worldsim.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace lawnav
{

/// Shape configuration of the recurrent policy.
struct PolicyConfig
{
    int n_rays = 9;
    double max_range = 5.0;
    int vocab = kVocabularySize;
    int embed_dim = 16;
    int proj_dim = 32;
    int hidden = 32;
    bool linear_only = false;         // logits = W f + b, no recurrence (used for closed-form checks)
    double progress_horizon = 64.0;   // steps over which the instruction focus sweeps start->end
    double focus_width = 0.2;         // width of the progress focus over normalized token positions

    int prev_action_slots() const noexcept { return kNumActions + 1; } // + "none"
    int feature_dim() const noexcept { return n_rays + prev_action_slots() + 2 * embed_dim; }

    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct TensorInfo
{
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// Ordered named tensors describing the flat parameter vector.
inline std::vector<TensorInfo> tensor_layout(const PolicyConfig& c)
{
    std::vector<std::pair<std::string, std::vector<int>>> spec;
    spec.push_back({"embedding", {c.vocab, c.embed_dim}});
    if (c.linear_only) {
        spec.push_back({"lin_w", {kNumActions, c.feature_dim()}});
        spec.push_back({"lin_b", {kNumActions}});
    } else {
        spec.push_back({"in_w", {c.proj_dim, c.feature_dim()}});
        spec.push_back({"in_b", {c.proj_dim}});
        for (const char* g : {"z", "r", "n"}) {
            spec.push_back({std::string("gru_w") + g, {c.hidden, c.proj_dim}});
            spec.push_back({std::string("gru_u") + g, {c.hidden, c.hidden}});
            spec.push_back({std::string("gru_b") + g, {c.hidden}});
        }
        spec.push_back({"gru_bun", {c.hidden}});
        spec.push_back({"out_w", {kNumActions, c.hidden}});
        spec.push_back({"out_b", {kNumActions}});
    }
    std::vector<TensorInfo> out;
    std::size_t offset = 0;
    for (auto& [name, shape] : spec) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        out.push_back({name, shape, offset, n});
        offset += n;
    }
    return out;
}

/// theta: all learnable weights in one flat vector.
struct PolicyParams
{
    PolicyConfig config;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }

    friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

inline constexpr double kInitScale = 0.08;

inline PolicyParams init_params(std::uint64_t seed, const PolicyConfig& config = {})
{
    const auto layout = tensor_layout(config);
    PolicyParams p{config, std::vector<double>(layout.back().offset + layout.back().size)};
    Rng rng(derive_seed(seed, 0x706f6c696379ULL));
    for (double& v : p.values) v = uniform(rng, -kInitScale, kInitScale);
    return p;
}

// views ----------------------------------------------------------------------

namespace detail
{

/// Pointers into a flat parameter (or gradient) vector.
template <typename T>
struct Net
{
    T* embedding = nullptr;
    T *lin_w = nullptr, *lin_b = nullptr;
    T *in_w = nullptr, *in_b = nullptr;
    T *wz = nullptr, *uz = nullptr, *bz = nullptr;
    T *wr = nullptr, *ur = nullptr, *br = nullptr;
    T *wn = nullptr, *un = nullptr, *bn = nullptr, *bun = nullptr;
    T *out_w = nullptr, *out_b = nullptr;

    Net(const PolicyConfig& c, T* base)
    {
        for (const auto& t : tensor_layout(c)) {
            T* ptr = base + t.offset;
            if (t.name == "embedding") embedding = ptr;
            else if (t.name == "lin_w") lin_w = ptr;
            else if (t.name == "lin_b") lin_b = ptr;
            else if (t.name == "in_w") in_w = ptr;
            else if (t.name == "in_b") in_b = ptr;
            else if (t.name == "gru_wz") wz = ptr;
            else if (t.name == "gru_uz") uz = ptr;
            else if (t.name == "gru_bz") bz = ptr;
            else if (t.name == "gru_wr") wr = ptr;
            else if (t.name == "gru_ur") ur = ptr;
            else if (t.name == "gru_br") br = ptr;
            else if (t.name == "gru_wn") wn = ptr;
            else if (t.name == "gru_un") un = ptr;
            else if (t.name == "gru_bn") bn = ptr;
            else if (t.name == "gru_bun") bun = ptr;
            else if (t.name == "out_w") out_w = ptr;
            else if (t.name == "out_b") out_b = ptr;
        }
    }
};

// y = W x + b  (W rows x cols, row-major)
inline void affine(const double* w, const double* b, const double* x, int rows, int cols, double* y)
{
    for (int i = 0; i < rows; ++i) {
        const double* wi = w + static_cast<std::ptrdiff_t>(i) * cols;
        double acc = b ? b[i] : 0.0;
        for (int j = 0; j < cols; ++j) acc += wi[j] * x[j];
        y[i] = acc;
    }
}

// y += W^T g
inline void affine_t(const double* w, const double* g, int rows, int cols, double* y)
{
    for (int i = 0; i < rows; ++i) {
        const double* wi = w + static_cast<std::ptrdiff_t>(i) * cols;
        const double gi = g[i];
        if (gi == 0.0) continue;
        for (int j = 0; j < cols; ++j) y[j] += wi[j] * gi;
    }
}

// dW += g x^T
inline void outer_add(double* dw, const double* g, const double* x, int rows, int cols)
{
    for (int i = 0; i < rows; ++i) {
        double* di = dw + static_cast<std::ptrdiff_t>(i) * cols;
        const double gi = g[i];
        if (gi == 0.0) continue;
        for (int j = 0; j < cols; ++j) di[j] += gi * x[j];
    }
}

inline double sigmoid(double v) noexcept { return 1.0 / (1.0 + std::exp(-v)); }

inline std::array<double, kNumActions> softmax(const double* logits)
{
    std::array<double, kNumActions> p{};
    double mx = logits[0];
    for (int a = 1; a < kNumActions; ++a) mx = std::max(mx, logits[a]);
    double total = 0.0;
    for (int a = 0; a < kNumActions; ++a) total += (p[static_cast<std::size_t>(a)] = std::exp(logits[a] - mx));
    for (double& v : p) v /= total;
    return p;
}

/// Progress focus weights over token positions.
inline std::vector<double> focus_weights(const PolicyConfig& c, std::size_t n_tokens, int step_index)
{
    std::vector<double> w(n_tokens, 0.0);
    if (n_tokens == 0) return w;
    const double progress = std::min(1.0, static_cast<double>(step_index) / c.progress_horizon);
    double total = 0.0;
    for (std::size_t i = 0; i < n_tokens; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n_tokens);
        const double z = (u - progress) / c.focus_width;
        total += (w[i] = std::exp(-0.5 * z * z));
    }
    for (double& v : w) v /= total;
    return w;
}

/// Feature vector [ranges/max_range | prev-action one-hot | mean embedding | focused embedding].
inline void build_features(const PolicyConfig& c, const double* embedding, const Observation& obs,
                           std::span<const int> tokens, const std::vector<double>& focus, double* f)
{
    int k = 0;
    for (int i = 0; i < c.n_rays; ++i)
        f[k++] = i < static_cast<int>(obs.ranges.size()) ? obs.ranges[static_cast<std::size_t>(i)] / c.max_range : 0.0;
    for (int i = 0; i < c.prev_action_slots(); ++i) f[k + i] = 0.0;
    f[k + (obs.prev_action ? 1 + action_index(*obs.prev_action) : 0)] = 1.0;
    k += c.prev_action_slots();
    double* mean = f + k;
    double* focused = f + k + c.embed_dim;
    for (int d = 0; d < 2 * c.embed_dim; ++d) mean[d] = 0.0;
    const double inv = tokens.empty() ? 0.0 : 1.0 / static_cast<double>(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const double* e = embedding + static_cast<std::ptrdiff_t>(tokens[i]) * c.embed_dim;
        for (int d = 0; d < c.embed_dim; ++d) {
            mean[d] += inv * e[d];
            focused[d] += focus[i] * e[d];
        }
    }
}

} // namespace detail

// inference ------------------------------------------------------------------

struct PolicyState
{
    std::vector<double> hidden;
    int step_index = 0;
};

inline PolicyState initial_state(const PolicyParams& params)
{
    return {std::vector<double>(static_cast<std::size_t>(params.config.hidden), 0.0), 0};
}

using ActionDistribution = std::array<double, kNumActions>;

struct PolicyOutput
{
    ActionDistribution probs{};
    PolicyState state;
};

inline std::vector<int> token_ids(const std::vector<Token>& tokens)
{
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(t.id());
    return ids;
}

/// pi_theta(a | observation, instruction, history): one step of the recurrent policy.
inline PolicyOutput policy_step(const PolicyParams& params, const PolicyState& state, const Observation& obs,
                                std::span<const int> tokens)
{
    const auto& c = params.config;
    const detail::Net<const double> net(c, params.values.data());
    std::vector<double> f(static_cast<std::size_t>(c.feature_dim()));
    detail::build_features(c, net.embedding, obs, tokens, detail::focus_weights(c, tokens.size(), obs.step_index),
                           f.data());
    std::array<double, kNumActions> logits{};
    PolicyOutput out;
    out.state.step_index = state.step_index + 1;
    if (c.linear_only) {
        detail::affine(net.lin_w, net.lin_b, f.data(), kNumActions, c.feature_dim(), logits.data());
        out.state.hidden = state.hidden;
    } else {
        const int P = c.proj_dim, H = c.hidden;
        std::vector<double> x(static_cast<std::size_t>(P)), z(static_cast<std::size_t>(H)), r(static_cast<std::size_t>(H)),
            n(static_cast<std::size_t>(H)), q(static_cast<std::size_t>(H)), tmp(static_cast<std::size_t>(H));
        detail::affine(net.in_w, net.in_b, f.data(), P, c.feature_dim(), x.data());
        for (double& v : x) v = std::tanh(v);
        const double* h = state.hidden.data();
        detail::affine(net.wz, net.bz, x.data(), H, P, z.data());
        detail::affine(net.uz, nullptr, h, H, H, tmp.data());
        for (int i = 0; i < H; ++i) z[static_cast<std::size_t>(i)] = detail::sigmoid(z[static_cast<std::size_t>(i)] + tmp[static_cast<std::size_t>(i)]);
        detail::affine(net.wr, net.br, x.data(), H, P, r.data());
        detail::affine(net.ur, nullptr, h, H, H, tmp.data());
        for (int i = 0; i < H; ++i) r[static_cast<std::size_t>(i)] = detail::sigmoid(r[static_cast<std::size_t>(i)] + tmp[static_cast<std::size_t>(i)]);
        detail::affine(net.un, net.bun, h, H, H, q.data());
        detail::affine(net.wn, net.bn, x.data(), H, P, n.data());
        out.state.hidden.resize(static_cast<std::size_t>(H));
        for (int i = 0; i < H; ++i) {
            const auto k = static_cast<std::size_t>(i);
            n[k] = std::tanh(n[k] + r[k] * q[k]);
            out.state.hidden[k] = (1.0 - z[k]) * n[k] + z[k] * h[i];
        }
        detail::affine(net.out_w, net.out_b, out.state.hidden.data(), kNumActions, H, logits.data());
    }
    out.probs = detail::softmax(logits.data());
    return out;
}

enum class SelectMode : std::uint8_t
{
    Argmax,
    Sample,
};

/// Argmax breaks ties toward the lowest action index; Sample draws from rng.
inline ActionType select_action(const ActionDistribution& probs, SelectMode mode, Rng* rng = nullptr)
{
    if (mode == SelectMode::Argmax || rng == nullptr) {
        int best = 0;
        for (int a = 1; a < kNumActions; ++a)
            if (probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(best)]) best = a;
        return action_from_index(best);
    }
    const double u = uniform01(*rng);
    double acc = 0.0;
    for (int a = 0; a < kNumActions; ++a) {
        acc += probs[static_cast<std::size_t>(a)];
        if (u < acc) return action_from_index(a);
    }
    for (int a = kNumActions - 1; a >= 0; --a)
        if (probs[static_cast<std::size_t>(a)] > 0.0) return action_from_index(a);
    return ActionType::Stop;
}

// training data --------------------------------------------------------------

struct StepRecord
{
    Observation obs;
    LabelSet labels;
};

/// One oracle-labelled rollout; the unit of batching for the loss.
struct EpisodeRecord
{
    std::string episode_id;
    std::vector<int> tokens;
    std::vector<StepRecord> steps;
    int round = 0;
};

class NonFiniteLoss : public Error
{
  public:
    NonFiniteLoss(const std::string& episode_id)
        : Error("non-finite loss in episode " + episode_id), episode_id_(episode_id)
    {
    }
    const std::string& episode_id() const noexcept { return episode_id_; }

  private:
    std::string episode_id_;
};

struct LossAndGrad
{
    double loss = 0.0;
    std::vector<double> grad;
};

namespace detail
{

struct StepCache
{
    std::vector<double> f, x, z, r, n, q, h_prev, h;
    ActionDistribution probs{};
};

/// Sum (not mean) of weighted cross-entropy over one episode, accumulating the
/// gradient of that sum scaled by `scale` into grad (when non-null).
inline double episode_loss(const PolicyParams& params, const EpisodeRecord& ep, double scale, double* grad)
{
    const auto& c = params.config;
    const Net<const double> net(c, params.values.data());
    const int D = c.feature_dim(), P = c.proj_dim, H = c.hidden;
    const std::size_t T = ep.steps.size();
    std::vector<StepCache> cache(T);
    double loss = 0.0;
    std::vector<double> h(static_cast<std::size_t>(H), 0.0), tmp(static_cast<std::size_t>(H));
    std::vector<std::vector<double>> focus(T);
    for (std::size_t t = 0; t < T; ++t) {
        auto& s = cache[t];
        const auto& obs = ep.steps[t].obs;
        focus[t] = focus_weights(c, ep.tokens.size(), obs.step_index);
        s.f.resize(static_cast<std::size_t>(D));
        build_features(c, net.embedding, obs, ep.tokens, focus[t], s.f.data());
        std::array<double, kNumActions> logits{};
        if (c.linear_only) {
            affine(net.lin_w, net.lin_b, s.f.data(), kNumActions, D, logits.data());
        } else {
            s.x.resize(static_cast<std::size_t>(P));
            affine(net.in_w, net.in_b, s.f.data(), P, D, s.x.data());
            for (double& v : s.x) v = std::tanh(v);
            s.h_prev = h;
            s.z.resize(static_cast<std::size_t>(H));
            s.r.resize(static_cast<std::size_t>(H));
            s.n.resize(static_cast<std::size_t>(H));
            s.q.resize(static_cast<std::size_t>(H));
            affine(net.wz, net.bz, s.x.data(), H, P, s.z.data());
            affine(net.uz, nullptr, h.data(), H, H, tmp.data());
            for (int i = 0; i < H; ++i) s.z[static_cast<std::size_t>(i)] = sigmoid(s.z[static_cast<std::size_t>(i)] + tmp[static_cast<std::size_t>(i)]);
            affine(net.wr, net.br, s.x.data(), H, P, s.r.data());
            affine(net.ur, nullptr, h.data(), H, H, tmp.data());
            for (int i = 0; i < H; ++i) s.r[static_cast<std::size_t>(i)] = sigmoid(s.r[static_cast<std::size_t>(i)] + tmp[static_cast<std::size_t>(i)]);
            affine(net.un, net.bun, h.data(), H, H, s.q.data());
            affine(net.wn, net.bn, s.x.data(), H, P, s.n.data());
            for (int i = 0; i < H; ++i) {
                const auto k = static_cast<std::size_t>(i);
                s.n[k] = std::tanh(s.n[k] + s.r[k] * s.q[k]);
                h[k] = (1.0 - s.z[k]) * s.n[k] + s.z[k] * h[k];
            }
            s.h = h;
            affine(net.out_w, net.out_b, h.data(), kNumActions, H, logits.data());
        }
        s.probs = softmax(logits.data());
        for (const auto& l : ep.steps[t].labels)
            loss -= l.weight * std::log(s.probs[static_cast<std::size_t>(action_index(l.action))]);
    }
    if (!std::isfinite(loss)) throw NonFiniteLoss(ep.episode_id);
    if (grad == nullptr) return loss;

    Net<double> g(c, grad);
    std::vector<double> dh(static_cast<std::size_t>(H), 0.0), dh_prev(static_cast<std::size_t>(H)),
        dx(static_cast<std::size_t>(P)), df(static_cast<std::size_t>(D)), da_z(static_cast<std::size_t>(H)),
        da_r(static_cast<std::size_t>(H)), da_n(static_cast<std::size_t>(H)), dq(static_cast<std::size_t>(H));
    for (std::size_t tt = T; tt-- > 0;) {
        const auto& s = cache[tt];
        std::array<double, kNumActions> dlogits{};
        double wsum = 0.0;
        for (const auto& l : ep.steps[tt].labels) {
            wsum += l.weight;
            dlogits[static_cast<std::size_t>(action_index(l.action))] -= l.weight;
        }
        for (int a = 0; a < kNumActions; ++a)
            dlogits[static_cast<std::size_t>(a)] = scale * (dlogits[static_cast<std::size_t>(a)] + wsum * s.probs[static_cast<std::size_t>(a)]);

        std::fill(df.begin(), df.end(), 0.0);
        if (c.linear_only) {
            outer_add(g.lin_w, dlogits.data(), s.f.data(), kNumActions, D);
            for (int a = 0; a < kNumActions; ++a) g.lin_b[a] += dlogits[static_cast<std::size_t>(a)];
            affine_t(net.lin_w, dlogits.data(), kNumActions, D, df.data());
        } else {
            outer_add(g.out_w, dlogits.data(), s.h.data(), kNumActions, H);
            for (int a = 0; a < kNumActions; ++a) g.out_b[a] += dlogits[static_cast<std::size_t>(a)];
            affine_t(net.out_w, dlogits.data(), kNumActions, H, dh.data());

            for (int i = 0; i < H; ++i) {
                const auto k = static_cast<std::size_t>(i);
                const double dn = dh[k] * (1.0 - s.z[k]);
                const double dz = dh[k] * (s.h_prev[k] - s.n[k]);
                dh_prev[k] = dh[k] * s.z[k];
                da_n[k] = dn * (1.0 - s.n[k] * s.n[k]);
                const double dr = da_n[k] * s.q[k];
                dq[k] = da_n[k] * s.r[k];
                da_z[k] = dz * s.z[k] * (1.0 - s.z[k]);
                da_r[k] = dr * s.r[k] * (1.0 - s.r[k]);
            }
            std::fill(dx.begin(), dx.end(), 0.0);
            outer_add(g.wn, da_n.data(), s.x.data(), H, P);
            outer_add(g.wz, da_z.data(), s.x.data(), H, P);
            outer_add(g.wr, da_r.data(), s.x.data(), H, P);
            outer_add(g.un, dq.data(), s.h_prev.data(), H, H);
            outer_add(g.uz, da_z.data(), s.h_prev.data(), H, H);
            outer_add(g.ur, da_r.data(), s.h_prev.data(), H, H);
            for (int i = 0; i < H; ++i) {
                const auto k = static_cast<std::size_t>(i);
                g.bn[i] += da_n[k];
                g.bun[i] += dq[k];
                g.bz[i] += da_z[k];
                g.br[i] += da_r[k];
            }
            affine_t(net.wn, da_n.data(), H, P, dx.data());
            affine_t(net.wz, da_z.data(), H, P, dx.data());
            affine_t(net.wr, da_r.data(), H, P, dx.data());
            affine_t(net.un, dq.data(), H, H, dh_prev.data());
            affine_t(net.uz, da_z.data(), H, H, dh_prev.data());
            affine_t(net.ur, da_r.data(), H, H, dh_prev.data());
            dh.swap(dh_prev);

            for (int i = 0; i < P; ++i) dx[static_cast<std::size_t>(i)] *= 1.0 - s.x[static_cast<std::size_t>(i)] * s.x[static_cast<std::size_t>(i)];
            outer_add(g.in_w, dx.data(), s.f.data(), P, D);
            for (int i = 0; i < P; ++i) g.in_b[i] += dx[static_cast<std::size_t>(i)];
            affine_t(net.in_w, dx.data(), P, D, df.data());
        }
        // instruction context -> embedding rows
        const int off = c.n_rays + c.prev_action_slots();
        const double* dmean = df.data() + off;
        const double* dfocus = dmean + c.embed_dim;
        const double inv = ep.tokens.empty() ? 0.0 : 1.0 / static_cast<double>(ep.tokens.size());
        for (std::size_t i = 0; i < ep.tokens.size(); ++i) {
            double* ge = g.embedding + static_cast<std::ptrdiff_t>(ep.tokens[i]) * c.embed_dim;
            const double wf = focus[tt][i];
            for (int d = 0; d < c.embed_dim; ++d) ge[d] += inv * dmean[d] + wf * dfocus[d];
        }
    }
    return loss;
}

} // namespace detail

inline std::size_t batch_steps(std::span<const EpisodeRecord* const> batch)
{
    std::size_t n = 0;
    for (const auto* ep : batch) n += ep->steps.size();
    return n;
}

/// Mean (over steps) weighted cross-entropy of the batch.
inline double batch_loss(const PolicyParams& params, std::span<const EpisodeRecord* const> batch)
{
    const std::size_t n = batch_steps(batch);
    if (n == 0) return 0.0;
    double total = 0.0;
    for (const auto* ep : batch) total += detail::episode_loss(params, *ep, 0.0, nullptr);
    return total / static_cast<double>(n);
}

/// Mean cross-entropy and its exact gradient (backpropagation through time). Episodes
/// are processed in parallel and reduced in batch order.
inline LossAndGrad loss_and_grad(const PolicyParams& params, std::span<const EpisodeRecord* const> batch)
{
    LossAndGrad out{0.0, std::vector<double>(params.size(), 0.0)};
    const std::size_t n = batch_steps(batch);
    if (n == 0) return out;
    const double scale = 1.0 / static_cast<double>(n);
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), batch.size()));
    if (workers <= 1) {
        for (const auto* ep : batch) out.loss += detail::episode_loss(params, *ep, scale, out.grad.data());
    } else {
        std::vector<std::vector<double>> grads(batch.size());
        std::vector<double> losses(batch.size());
        parallel_for(batch.size(), [&](std::size_t i) {
            grads[i].assign(params.size(), 0.0);
            losses[i] = detail::episode_loss(params, *batch[i], scale, grads[i].data());
        });
        for (std::size_t i = 0; i < batch.size(); ++i) {
            out.loss += losses[i];
            for (std::size_t k = 0; k < params.size(); ++k) out.grad[k] += grads[i][k];
        }
    }
    out.loss *= scale;
    return out;
}

inline LossAndGrad loss_and_grad(const PolicyParams& params, const std::vector<EpisodeRecord>& batch)
{
    std::vector<const EpisodeRecord*> ptrs;
    for (const auto& ep : batch) ptrs.push_back(&ep);
    return loss_and_grad(params, ptrs);
}

using GradientFn = std::function<std::vector<double>(const PolicyParams&, std::span<const EpisodeRecord* const>)>;

/// Max relative error between an analytic gradient and central differences over a
/// seeded random subset of coordinates. The denominator is floored at 1e-6: below that
/// the difference quotient is dominated by rounding noise (~1e-11 at eps = 1e-5), so tiny
/// components are compared in absolute terms.
inline double grad_check(const PolicyParams& params, std::span<const EpisodeRecord* const> batch, double eps,
                         std::uint64_t seed = 0, std::size_t coordinates = 200, GradientFn analytic = {})
{
    const auto grad = analytic ? analytic(params, batch) : loss_and_grad(params, batch).grad;
    Rng rng(derive_seed(seed, 0x67636865636bULL));
    PolicyParams probe = params;
    double worst = 0.0;
    const std::size_t count = std::min(coordinates, params.size());
    for (std::size_t s = 0; s < count; ++s) {
        const auto k = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(params.size()) - 1));
        probe.values[k] = params.values[k] + eps;
        const double up = batch_loss(probe, batch);
        probe.values[k] = params.values[k] - eps;
        const double down = batch_loss(probe, batch);
        probe.values[k] = params.values[k];
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max(std::abs(numeric) + std::abs(grad[k]), 1e-6);
        worst = std::max(worst, std::abs(numeric - grad[k]) / denom);
    }
    return worst;
}

// checkpoints ----------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json config_to_json(const PolicyConfig& c)
{
    return {{"n_rays", c.n_rays},         {"max_range", c.max_range},
            {"vocab", c.vocab},           {"embed_dim", c.embed_dim},
            {"proj_dim", c.proj_dim},     {"hidden", c.hidden},
            {"linear_only", c.linear_only}, {"progress_horizon", c.progress_horizon},
            {"focus_width", c.focus_width}};
}

inline PolicyConfig config_from_json(const nlohmann::json& j)
{
    PolicyConfig c;
    c.n_rays = j.at("n_rays").get<int>();
    c.max_range = j.at("max_range").get<double>();
    c.vocab = j.at("vocab").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.proj_dim = j.at("proj_dim").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.linear_only = j.at("linear_only").get<bool>();
    c.progress_horizon = j.at("progress_horizon").get<double>();
    c.focus_width = j.at("focus_width").get<double>();
    return c;
}

inline nlohmann::json checkpoint_to_json(const PolicyParams& p)
{
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : tensor_layout(p.config)) {
        std::vector<double> data(p.values.begin() + static_cast<std::ptrdiff_t>(t.offset),
                                 p.values.begin() + static_cast<std::ptrdiff_t>(t.offset + t.size));
        tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"data", data}});
    }
    return {{"format", "lawnav.policy"}, {"version", kCheckpointVersion}, {"config", config_to_json(p.config)},
            {"tensors", tensors}};
}

/// Rebuilds parameters from a checkpoint; every tensor must match the configured shape.
inline PolicyParams checkpoint_from_json(const nlohmann::json& j)
{
    if (j.value("format", "") != "lawnav.policy") throw InvalidArgument("not a policy checkpoint");
    if (j.value("version", 0) != kCheckpointVersion) throw InvalidArgument("unsupported checkpoint version");
    PolicyParams p;
    p.config = config_from_json(j.at("config"));
    const auto layout = tensor_layout(p.config);
    p.values.assign(layout.back().offset + layout.back().size, 0.0);
    const auto& tensors = j.at("tensors");
    if (tensors.size() != layout.size()) throw InvalidArgument("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& t = tensors[i];
        if (t.at("name").get<std::string>() != layout[i].name) throw InvalidArgument("checkpoint tensor name mismatch: " + t.at("name").get<std::string>());
        if (t.at("shape").get<std::vector<int>>() != layout[i].shape)
            throw InvalidArgument("checkpoint shape mismatch for tensor " + layout[i].name);
        const auto data = t.at("data").get<std::vector<double>>();
        if (data.size() != layout[i].size) throw InvalidArgument("checkpoint size mismatch for tensor " + layout[i].name);
        std::copy(data.begin(), data.end(), p.values.begin() + static_cast<std::ptrdiff_t>(layout[i].offset));
    }
    return p;
}

inline void save_checkpoint(const std::string& path, const PolicyParams& p)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint " + path);
    out << checkpoint_to_json(p).dump() << '\n';
}

inline PolicyParams load_checkpoint(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot read checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path, 1, e.what());
    }
    return checkpoint_from_json(j);
}

} // namespace lawnav

#endif // LAWNAV_POLICY_HPP
