#pragma once

#include <random>

#include <json.hpp>

#include "gridse/conic_diff.hpp"
#include "gridse/dataset.hpp"
#include "gridse/rse.hpp"

namespace gridse::learn {

class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Loss primitives

/// Softplus weight map ln(1 + e^w) + eps_p, strictly positive and monotone.
inline double positive_weight(double w_raw, double eps_p) {
    const double sp = w_raw > 0.0 ? w_raw + std::log1p(std::exp(-w_raw))
                                  : std::log1p(std::exp(w_raw));
    return sp + eps_p;
}

inline VectorXd positive_weight(const VectorXd& w_raw, double eps_p) {
    return w_raw.unaryExpr([eps_p](double w) { return positive_weight(w, eps_p); });
}

/// d(positive_weight)/dw, the logistic function.
inline double positive_weight_derivative(double w_raw) {
    return w_raw > 0.0 ? 1.0 / (1.0 + std::exp(-w_raw))
                       : std::exp(w_raw) / (1.0 + std::exp(w_raw));
}

/// w_raw value whose mapped weight equals `target`.
inline double inverse_positive_weight(double target, double eps_p) {
    const double sp = target - eps_p;
    return std::log(std::expm1(sp));
}

/// Huber penalty: quadratic w eps^2 / 2 inside |eps| <= delta, linear
/// w delta (|eps| - delta/2) outside.
inline double huber_term(double eps, double w, double delta) {
    const double a = std::abs(eps);
    return a <= delta ? 0.5 * w * eps * eps : w * delta * (a - 0.5 * delta);
}

inline double huber_term_deps(double eps, double w, double delta) {
    const double a = std::abs(eps);
    return a <= delta ? w * eps : w * delta * (eps > 0 ? 1.0 : -1.0);
}

inline double huber_term_dw(double eps, double delta) {
    const double a = std::abs(eps);
    return a <= delta ? 0.5 * eps * eps : delta * (a - 0.5 * delta);
}

inline double huber_loss(const VectorXd& eps, const VectorXd& w_hat, double delta) {
    if (delta <= 0.0) throw std::invalid_argument("huber_loss: delta must be positive");
    double sum = 0.0;
    for (Eigen::Index m = 0; m < eps.size(); ++m) sum += huber_term(eps[m], w_hat[m], delta);
    return sum;
}

/// Accuracy / physics decomposition of the hybrid loss.
struct LossBreakdown {
    double acc = 0.0;
    double huber = 0.0;
    double reg = 0.0;
    double hybrid = 0.0;
};

inline LossBreakdown make_breakdown(double acc, double huber, double reg, double rho) {
    return {acc, huber, reg, acc + rho * (huber + reg)};
}

// ---------------------------------------------------------------------------
// Parameters, layers, Adam

struct DenseLayer {
    Eigen::MatrixXd W;
    VectorXd b;
};

struct LearnableParams {
    VectorXd w_raw;                 // per-measurement weights before softplus
    std::vector<DenseLayer> layers; // post-processing network
};

inline Eigen::Index param_count(const LearnableParams& p) {
    Eigen::Index total = p.w_raw.size();
    for (const auto& l : p.layers) total += l.W.size() + l.b.size();
    return total;
}

inline VectorXd flatten(const LearnableParams& p) {
    VectorXd out(param_count(p));
    Eigen::Index at = 0;
    out.head(p.w_raw.size()) = p.w_raw;
    at += p.w_raw.size();
    for (const auto& l : p.layers) {
        out.segment(at, l.W.size()) = Eigen::Map<const VectorXd>(l.W.data(), l.W.size());
        at += l.W.size();
        out.segment(at, l.b.size()) = l.b;
        at += l.b.size();
    }
    return out;
}

inline void unflatten(const VectorXd& v, LearnableParams& p) {
    Eigen::Index at = 0;
    p.w_raw = v.head(p.w_raw.size());
    at += p.w_raw.size();
    for (auto& l : p.layers) {
        l.W = Eigen::Map<const Eigen::MatrixXd>(v.data() + at, l.W.rows(), l.W.cols());
        at += l.W.size();
        l.b = v.segment(at, l.b.size());
        at += l.b.size();
    }
}

struct TrainConfig {
    double alpha = 1e-3;   // learning rate
    double zeta = 5e-4;    // decoupled weight decay
    int batch = 32;
    int epochs = 300;
    double rho = 1.0;      // physics loss weight
    double delta = 1e-5;   // Huber knot
    double eps_p = 1e-5;   // softplus floor
    double beta1 = 0.9;
    double beta2 = 0.999;
    std::uint64_t seed = 0;
    double rho_r = 1.0;            // WLAV weight inside the relaxed objective
    double solver_tol = 1e-8;
    int solver_max_iter = 50000;
    double max_skip_fraction = 0.2;

    void validate() const {
        if (alpha <= 0 || zeta < 0 || batch < 1 || epochs < 0 || delta <= 0 || eps_p <= 0)
            throw std::invalid_argument("TrainConfig: invalid hyperparameters");
    }
};

struct AdamState {
    VectorXd m, v;
    long step = 0;
};

/// Adam with bias correction and decoupled weight decay.
inline void adam_step(AdamState& st, VectorXd& params, const VectorXd& grad,
                      const TrainConfig& cfg) {
    if (st.m.size() != params.size()) {
        st.m = VectorXd::Zero(params.size());
        st.v = VectorXd::Zero(params.size());
        st.step = 0;
    }
    if (grad.size() != params.size()) throw std::invalid_argument("adam_step: shape mismatch");
    ++st.step;
    st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * grad;
    st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    const VectorXd m_hat = st.m / bc1;
    const VectorXd v_hat = st.v / bc2;
    params -= cfg.alpha * (m_hat.array() / (v_hat.array().sqrt() + 1e-8)).matrix();
    if (cfg.zeta > 0.0) params -= cfg.alpha * cfg.zeta * params;
}

// ---------------------------------------------------------------------------
// Shared pieces

inline VectorXd state_target(const StateVector& st) {
    VectorXd t(2 * st.size());
    t << st.V, st.theta;
    return t;
}

inline void init_layers(std::vector<DenseLayer>& layers, int in_dim, int hidden, int out_dim,
                        std::mt19937_64& rng) {
    auto fill = [&rng](DenseLayer& l, int rows, int cols) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
        l.W.resize(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) l.W(r, c) = scale * u(rng);
        l.b = VectorXd::Zero(rows);
    };
    layers.resize(2);
    fill(layers[0], hidden, in_dim);
    fill(layers[1], out_dim, hidden);
}

struct NetTrace {
    VectorXd input, hidden, out;
};

inline NetTrace net_forward(const std::vector<DenseLayer>& layers, const VectorXd& input) {
    NetTrace t;
    t.input = input;
    t.hidden = (layers[0].W * input + layers[0].b).array().tanh();
    t.out = layers[1].W * t.hidden + layers[1].b;
    return t;
}

/// Backpropagates d(loss)/d(out); returns d(loss)/d(input) and accumulates
/// layer gradients into `grads` (same shapes as the layers).
inline VectorXd net_backward(const std::vector<DenseLayer>& layers, const NetTrace& t,
                             const VectorXd& gout, std::vector<DenseLayer>& grads) {
    grads[1].W += gout * t.hidden.transpose();
    grads[1].b += gout;
    VectorXd gh = layers[1].W.transpose() * gout;
    gh = gh.cwiseProduct((1.0 - t.hidden.array().square()).matrix());
    grads[0].W += gh * t.input.transpose();
    grads[0].b += gh;
    return layers[0].W.transpose() * gh;
}

/// Residuals of the linearized measurement equations at given X entries,
/// plus the power-loss value; used by models that do not run the Opt-Layer.
struct PhysicsEvaluator {
    const AdmittanceModel* model = nullptr;
    SparsityMap map;
    std::vector<Eigen::SparseVector<double>> rows;  // per-measurement X coefficients
    VectorXd c_reg;                                 // power loss as a linear form on X entries
    std::vector<MeasKind> kinds;

    void build(const AdmittanceModel& mdl, const RelaxedProblem& rp) {
        model = &mdl;
        map = rp.map;
        const int M = rp.n_meas();
        rows.assign(M, Eigen::SparseVector<double>(map.x_dim()));
        kinds.resize(M);
        for (int m = 0; m < M; ++m) kinds[m] = rp.metas[m].kind;
        for (Eigen::Index j = 0; j < map.x_dim(); ++j)
            for (SpMat::InnerIterator it(rp.prog.A, j); it; ++it)
                if (it.row() < M) rows[it.row()].coeffRef(j) = it.value();
        c_reg = VectorXd::Zero(map.x_dim());
        for (int i = 0; i < map.n_buses; ++i)
            c_reg[map.diag_slot(i)] = mdl.Y.coeff(i, i).real();
        for (int k = 0; k < map.n_pairs(); ++k) {
            const auto [i, j] = map.pairs[k];
            c_reg[map.re_slot(k)] = 2.0 * mdl.Y.coeff(i, j).real();
        }
    }

    VectorXd rhs(const VectorXd& z) const {
        VectorXd b(z.size());
        for (Eigen::Index m = 0; m < z.size(); ++m)
            b[m] = kinds[m] == MeasKind::vmag ? z[m] * z[m] : z[m];
        return b;
    }

    VectorXd residuals(const VectorXd& z, const VectorXd& x_entries) const {
        VectorXd eps = rhs(z);
        for (size_t m = 0; m < rows.size(); ++m) eps[m] -= rows[m].dot(x_entries);
        return eps;
    }
};

/// X entries implied by a polar state, on the sparsity map.
inline VectorXd implied_x_entries(const SparsityMap& map, const VectorXd& V,
                                  const VectorXd& theta) {
    VectorXd x(map.x_dim());
    for (int i = 0; i < map.n_buses; ++i) x[map.diag_slot(i)] = V[i] * V[i];
    for (int k = 0; k < map.n_pairs(); ++k) {
        const auto [i, j] = map.pairs[k];
        const double th = theta[i] - theta[j];
        x[map.re_slot(k)] = V[i] * V[j] * std::cos(th);
        x[map.im_slot(k)] = V[i] * V[j] * std::sin(th);
    }
    return x;
}

/// Accumulates d(loss)/d(X entries) into d(loss)/d(V, theta).
inline void implied_x_backward(const SparsityMap& map, const VectorXd& V, const VectorXd& theta,
                               const VectorXd& gx, VectorXd& gV, VectorXd& gTheta) {
    for (int i = 0; i < map.n_buses; ++i) gV[i] += 2.0 * V[i] * gx[map.diag_slot(i)];
    for (int k = 0; k < map.n_pairs(); ++k) {
        const auto [i, j] = map.pairs[k];
        const double th = theta[i] - theta[j];
        const double c = std::cos(th), s = std::sin(th);
        const double gre = gx[map.re_slot(k)], gim = gx[map.im_slot(k)];
        gV[i] += V[j] * (c * gre + s * gim);
        gV[j] += V[i] * (c * gre + s * gim);
        const double gth = V[i] * V[j] * (-s * gre + c * gim);
        gTheta[i] += gth;
        gTheta[j] -= gth;
    }
}

// ---------------------------------------------------------------------------
// Opt-Layer model: differentiable relaxed estimation feeding dense layers

struct ForwardResult {
    bool ok = false;
    bool degenerate = false;
    LossBreakdown losses;
    VectorXd w_hat;
    ConicSolution solution;
    NetTrace trace;
    VectorXd eps;  // solution residual variables
};

class OptLayerModel {
  public:
    OptLayerModel(const AdmittanceModel& model, std::vector<MeasurementMeta> metas,
                  TrainConfig cfg)
        : model_(&model), cfg_(cfg) {
        cfg_.validate();
        const int M = static_cast<int>(metas.size());
        VectorXd z0 = VectorXd::Zero(M);
        rp_ = build_relaxed(model, std::move(metas), z0, VectorXd::Ones(M), cfg_.rho_r);
        physics_.build(model, rp_);
        params_.w_raw = VectorXd::Constant(M, inverse_positive_weight(1.0, cfg_.eps_p));
        std::mt19937_64 rng(detail::splitmix64(cfg_.seed ^ 0xa11ef00dULL));
        const int n = model.n_buses();
        init_layers(params_.layers, rp_.map.x_dim(), 4 * n, 2 * n, rng);
        solver_.options().tol = cfg_.solver_tol;
        solver_.options().max_iter = cfg_.solver_max_iter;
    }

    LearnableParams& params() { return params_; }
    const LearnableParams& params() const { return params_; }
    const RelaxedProblem& relaxed() const { return rp_; }
    const TrainConfig& config() const { return cfg_; }

    ForwardResult forward(const MeasurementSample& sample) {
        ForwardResult fr;
        fr.w_hat = positive_weight(params_.w_raw, cfg_.eps_p);
        set_weights(rp_, fr.w_hat);
        set_measurements(rp_, sample.z);
        fr.solution = solver_.solve(rp_.prog);
        if (fr.solution.status != SolveStatus::optimal) return fr;
        fr.ok = true;

        const VectorXd x_in = fr.solution.x.head(rp_.map.x_dim());
        fr.trace = net_forward(params_.layers, x_in);
        fr.eps.resize(rp_.n_meas());
        for (int m = 0; m < rp_.n_meas(); ++m) fr.eps[m] = fr.solution.x[rp_.eps_slot(m)];

        const VectorXd target = state_target(sample.true_state);
        const double acc = (fr.trace.out - target).squaredNorm() / target.size();
        const double hub = huber_loss(fr.eps, fr.w_hat, cfg_.delta);
        const double reg = physics_.c_reg.dot(x_in);
        fr.losses = make_breakdown(acc, hub, reg, cfg_.rho);
        return fr;
    }

    /// Gradient of the hybrid loss for one sample, flattened as
    /// (w_raw, layer0.W, layer0.b, layer1.W, layer1.b).
    VectorXd backward(const ForwardResult& fr, const MeasurementSample& sample) {
        const int M = rp_.n_meas();
        const Eigen::Index p = rp_.prog.p();

        std::vector<DenseLayer> layer_grads(2);
        for (int l = 0; l < 2; ++l) {
            layer_grads[l].W = Eigen::MatrixXd::Zero(params_.layers[l].W.rows(),
                                                     params_.layers[l].W.cols());
            layer_grads[l].b = VectorXd::Zero(params_.layers[l].b.size());
        }
        const VectorXd target = state_target(sample.true_state);
        const VectorXd gout = 2.0 * (fr.trace.out - target) / target.size();
        const VectorXd g_xin = net_backward(params_.layers, fr.trace, gout, layer_grads);

        // seed on the solution vector: network input plus the direct
        // dependence of the physics losses on the residuals and X entries
        VectorXd seed_x = VectorXd::Zero(p);
        seed_x.head(rp_.map.x_dim()) = g_xin + cfg_.rho * physics_.c_reg;
        for (int m = 0; m < M; ++m)
            seed_x[rp_.eps_slot(m)] =
                cfg_.rho * huber_term_deps(fr.eps[m], fr.w_hat[m], cfg_.delta);

        OmegaSystem diff(rp_.prog, fr.solution);
        const auto adj = diff.adjoint(seed_x, VectorXd::Zero(rp_.prog.d()),
                                      VectorXd::Zero(rp_.prog.d()));

        VectorXd g_w_hat(M);
        for (int m = 0; m < M; ++m) {
            g_w_hat[m] = cfg_.rho_r * adj.dc[rp_.weight_slots[m]] +
                         cfg_.rho * huber_term_dw(fr.eps[m], cfg_.delta);
        }
        LearnableParams grads;
        grads.w_raw.resize(M);
        for (int m = 0; m < M; ++m)
            grads.w_raw[m] = g_w_hat[m] * positive_weight_derivative(params_.w_raw[m]);
        grads.layers = std::move(layer_grads);
        auto flat = flatten(grads);
        if (adj.degenerate) last_degenerate_ = true;
        return flat;
    }

    bool consume_degenerate_flag() {
        const bool d = last_degenerate_;
        last_degenerate_ = false;
        return d;
    }

  private:
    const AdmittanceModel* model_;
    TrainConfig cfg_;
    RelaxedProblem rp_;
    PhysicsEvaluator physics_;
    LearnableParams params_;
    ConicSolver solver_;
    bool last_degenerate_ = false;
};

// ---------------------------------------------------------------------------
// FCNN baselines: z mapped directly to the state, trained on MSE or on the
// hybrid loss with residuals taken from the implied rank-one X

class FcnnModel {
  public:
    FcnnModel(const AdmittanceModel& model, std::vector<MeasurementMeta> metas, TrainConfig cfg,
              bool hybrid)
        : model_(&model), cfg_(cfg), hybrid_(hybrid) {
        cfg_.validate();
        const int M = static_cast<int>(metas.size());
        VectorXd z0 = VectorXd::Zero(M);
        RelaxedProblem rp = build_relaxed(model, std::move(metas), z0, VectorXd::Ones(M),
                                          cfg_.rho_r);
        physics_.build(model, rp);
        params_.w_raw.resize(0);  // weights stay at 1 for the baselines
        std::mt19937_64 rng(detail::splitmix64(cfg_.seed ^ 0xfcafcaULL));
        const int n = model.n_buses();
        init_layers(params_.layers, M, 4 * n, 2 * n, rng);
        w_fixed_ = VectorXd::Ones(M);
    }

    LearnableParams& params() { return params_; }
    const LearnableParams& params() const { return params_; }
    const TrainConfig& config() const { return cfg_; }
    bool hybrid() const { return hybrid_; }

    ForwardResult forward(const MeasurementSample& sample) {
        ForwardResult fr;
        fr.ok = true;
        fr.w_hat = w_fixed_;
        fr.trace = net_forward(params_.layers, sample.z);
        const int n = model_->n_buses();
        const VectorXd V = fr.trace.out.head(n);
        const VectorXd theta = fr.trace.out.tail(n);
        const VectorXd x_entries = implied_x_entries(physics_.map, V, theta);
        fr.eps = physics_.residuals(sample.z, x_entries);

        const VectorXd target = state_target(sample.true_state);
        const double acc = (fr.trace.out - target).squaredNorm() / target.size();
        const double hub = huber_loss(fr.eps, w_fixed_, cfg_.delta);
        const double reg = physics_.c_reg.dot(x_entries);
        fr.losses = make_breakdown(acc, hub, reg, cfg_.rho);
        return fr;
    }

    VectorXd backward(const ForwardResult& fr, const MeasurementSample& sample) {
        std::vector<DenseLayer> layer_grads(2);
        for (int l = 0; l < 2; ++l) {
            layer_grads[l].W = Eigen::MatrixXd::Zero(params_.layers[l].W.rows(),
                                                     params_.layers[l].W.cols());
            layer_grads[l].b = VectorXd::Zero(params_.layers[l].b.size());
        }
        const VectorXd target = state_target(sample.true_state);
        VectorXd gout = 2.0 * (fr.trace.out - target) / target.size();

        if (hybrid_) {
            const int n = model_->n_buses();
            const VectorXd V = fr.trace.out.head(n);
            const VectorXd theta = fr.trace.out.tail(n);
            // d(huber)/dx = -rows' * huber'(eps); d(reg)/dx = c_reg
            VectorXd gx = cfg_.rho * physics_.c_reg;
            for (size_t m = 0; m < physics_.rows.size(); ++m) {
                const double ge =
                    cfg_.rho * huber_term_deps(fr.eps[m], w_fixed_[m], cfg_.delta);
                if (ge == 0.0) continue;
                for (Eigen::SparseVector<double>::InnerIterator it(physics_.rows[m]); it; ++it)
                    gx[it.index()] -= ge * it.value();
            }
            VectorXd gV = VectorXd::Zero(n), gTheta = VectorXd::Zero(n);
            implied_x_backward(physics_.map, V, theta, gx, gV, gTheta);
            gout.head(n) += gV;
            gout.tail(n) += gTheta;
        }
        net_backward(params_.layers, fr.trace, gout, layer_grads);
        LearnableParams grads;
        grads.w_raw.resize(0);
        grads.layers = std::move(layer_grads);
        return flatten(grads);
    }

  private:
    const AdmittanceModel* model_;
    TrainConfig cfg_;
    bool hybrid_;
    PhysicsEvaluator physics_;
    LearnableParams params_;
    VectorXd w_fixed_;
};

// ---------------------------------------------------------------------------
// Training loop (Adam over shuffled mini-batches) and evaluation

struct EpochStats {
    int epoch = 0;
    LossBreakdown mean;
};

struct TrainedModel {
    std::string kind;     // opt_layer | fcnn_hybrid | fcnn_mse
    std::string case_id;
    TrainConfig config;
    LearnableParams params;
    std::vector<EpochStats> history;
};

template <class Model>
inline std::vector<EpochStats> run_training(Model& model, const Dataset& ds,
                                            const TrainConfig& cfg) {
    const auto& train_idx = ds.split.train;
    if (train_idx.empty()) throw TrainingError("training split is empty");
    VectorXd flat = flatten(model.params());
    AdamState adam;
    std::vector<EpochStats> history;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order = train_idx;
        std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ (0xe90c4ULL + epoch)));
        std::shuffle(order.begin(), order.end(), rng);

        LossBreakdown sum;
        int n_ok = 0, n_skipped = 0;
        for (size_t at = 0; at < order.size(); at += cfg.batch) {
            const size_t hi = std::min(order.size(), at + cfg.batch);
            VectorXd grad = VectorXd::Zero(flat.size());
            int batch_ok = 0;
            for (size_t k = at; k < hi; ++k) {
                ForwardResult fr;
                try {
                    fr = model.forward(ds.samples[order[k]]);
                } catch (const EstimationError&) {
                    fr.ok = false;
                }
                if (!fr.ok) {
                    ++n_skipped;
                    continue;
                }
                grad += model.backward(fr, ds.samples[order[k]]);
                ++batch_ok;
                ++n_ok;
                sum.acc += fr.losses.acc;
                sum.huber += fr.losses.huber;
                sum.reg += fr.losses.reg;
                sum.hybrid += fr.losses.hybrid;
            }
            if (batch_ok == 0) continue;
            grad /= batch_ok;
            adam_step(adam, flat, grad, cfg);
            unflatten(flat, model.params());
        }
        if (n_skipped > cfg.max_skip_fraction * order.size())
            throw TrainingError("epoch " + std::to_string(epoch) + ": " +
                                std::to_string(n_skipped) + " of " +
                                std::to_string(order.size()) + " samples skipped");
        EpochStats st;
        st.epoch = epoch;
        if (n_ok > 0)
            st.mean = {sum.acc / n_ok, sum.huber / n_ok, sum.reg / n_ok, sum.hybrid / n_ok};
        history.push_back(st);
    }
    return history;
}

template <class Model>
inline LossBreakdown evaluate(Model& model, const Dataset& ds, std::span<const int> indices) {
    LossBreakdown sum;
    int n_ok = 0;
    for (int idx : indices) {
        ForwardResult fr;
        try {
            fr = model.forward(ds.samples[idx]);
        } catch (const EstimationError&) {
            continue;
        }
        if (!fr.ok) continue;
        sum.acc += fr.losses.acc;
        sum.huber += fr.losses.huber;
        sum.reg += fr.losses.reg;
        sum.hybrid += fr.losses.hybrid;
        ++n_ok;
    }
    if (n_ok == 0) throw TrainingError("evaluate: every sample failed");
    return {sum.acc / n_ok, sum.huber / n_ok, sum.reg / n_ok, sum.hybrid / n_ok};
}

inline TrainedModel train_opt_layer(const AdmittanceModel& model, const Dataset& ds,
                                    const TrainConfig& cfg) {
    if (ds.samples.empty()) throw TrainingError("dataset is empty");
    OptLayerModel m(model, ds.samples[0].meta, cfg);
    TrainedModel out;
    out.kind = "opt_layer";
    out.case_id = ds.case_id;
    out.config = cfg;
    out.history = run_training(m, ds, cfg);
    out.params = m.params();
    return out;
}

inline TrainedModel train_fcnn(const AdmittanceModel& model, const Dataset& ds,
                               const TrainConfig& cfg, bool hybrid) {
    if (ds.samples.empty()) throw TrainingError("dataset is empty");
    TrainConfig c = cfg;
    if (!hybrid) c.rho = 0.0;  // pure accuracy objective
    FcnnModel m(model, ds.samples[0].meta, c, hybrid);
    TrainedModel out;
    out.kind = hybrid ? "fcnn_hybrid" : "fcnn_mse";
    out.case_id = ds.case_id;
    out.config = c;
    out.history = run_training(m, ds, c);
    out.params = m.params();
    return out;
}

/// Re-evaluates a trained model on dataset indices. The reported breakdown
/// always uses the model's own rho for the hybrid composition.
inline LossBreakdown evaluate_model(const AdmittanceModel& model, const TrainedModel& tm,
                                    const Dataset& ds, std::span<const int> indices) {
    if (tm.kind == "opt_layer") {
        OptLayerModel m(model, ds.samples[0].meta, tm.config);
        m.params() = tm.params;
        return evaluate(m, ds, indices);
    }
    FcnnModel m(model, ds.samples[0].meta, tm.config, tm.kind == "fcnn_hybrid");
    m.params() = tm.params;
    return evaluate(m, ds, indices);
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"alpha", c.alpha},   {"zeta", c.zeta},     {"batch", c.batch},
            {"epochs", c.epochs}, {"rho", c.rho},       {"delta", c.delta},
            {"eps_p", c.eps_p},   {"beta1", c.beta1},   {"beta2", c.beta2},
            {"seed", c.seed},     {"rho_r", c.rho_r},   {"solver_tol", c.solver_tol},
            {"solver_max_iter", c.solver_max_iter}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.zeta = j.value("zeta", c.zeta);
    c.batch = j.value("batch", c.batch);
    c.epochs = j.value("epochs", c.epochs);
    c.rho = j.value("rho", c.rho);
    c.delta = j.value("delta", c.delta);
    c.eps_p = j.value("eps_p", c.eps_p);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.seed = j.value("seed", c.seed);
    c.rho_r = j.value("rho_r", c.rho_r);
    c.solver_tol = j.value("solver_tol", c.solver_tol);
    c.solver_max_iter = j.value("solver_max_iter", c.solver_max_iter);
    return c;
}

inline nlohmann::json to_json(const TrainedModel& tm) {
    nlohmann::json j;
    j["config"] = to_json(tm.config);
    j["config"]["kind"] = tm.kind;
    j["config"]["case_id"] = tm.case_id;
    j["w_raw"] = std::vector<double>(tm.params.w_raw.begin(), tm.params.w_raw.end());
    j["layers"] = nlohmann::json::array();
    for (const auto& l : tm.params.layers) {
        nlohmann::json jl;
        jl["rows"] = l.W.rows();
        jl["cols"] = l.W.cols();
        jl["weights"] = std::vector<double>(l.W.data(), l.W.data() + l.W.size());
        jl["bias"] = std::vector<double>(l.b.begin(), l.b.end());
        j["layers"].push_back(std::move(jl));
    }
    j["history"] = nlohmann::json::array();
    for (const auto& h : tm.history) {
        j["history"].push_back({{"epoch", h.epoch},
                                {"L_acc", h.mean.acc},
                                {"L_huber", h.mean.huber},
                                {"L_reg", h.mean.reg},
                                {"L_hybrid", h.mean.hybrid}});
    }
    return j;
}

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
    TrainedModel tm;
    tm.config = train_config_from_json(j.at("config"));
    tm.kind = j.at("config").value("kind", "opt_layer");
    tm.case_id = j.at("config").value("case_id", "");
    const auto& w = j.at("w_raw");
    tm.params.w_raw.resize(w.size());
    for (size_t i = 0; i < w.size(); ++i) tm.params.w_raw[i] = w[i].get<double>();
    for (const auto& jl : j.at("layers")) {
        DenseLayer l;
        const auto rows = jl.at("rows").get<Eigen::Index>();
        const auto cols = jl.at("cols").get<Eigen::Index>();
        const auto& wv = jl.at("weights");
        l.W.resize(rows, cols);
        for (Eigen::Index k = 0; k < l.W.size(); ++k) l.W.data()[k] = wv.at(k).get<double>();
        const auto& bv = jl.at("bias");
        l.b.resize(bv.size());
        for (size_t k = 0; k < bv.size(); ++k) l.b[k] = bv.at(k).get<double>();
        tm.params.layers.push_back(std::move(l));
    }
    for (const auto& jh : j.at("history")) {
        EpochStats h;
        h.epoch = jh.at("epoch").get<int>();
        h.mean.acc = jh.at("L_acc").get<double>();
        h.mean.huber = jh.at("L_huber").get<double>();
        h.mean.reg = jh.at("L_reg").get<double>();
        h.mean.hybrid = jh.at("L_hybrid").get<double>();
        tm.history.push_back(h);
    }
    return tm;
}

}  // namespace gridse::learn
