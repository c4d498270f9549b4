#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hawkes/errors.hpp"
#include "hawkes/event_sequence.hpp"
#include "hawkes/gp.hpp"
#include "hawkes/kernels.hpp"
#include "hawkes/optim.hpp"

namespace hawkes {

// ---------------------------------------------------------------------------
// Branching structure: row i carries the probability that event i is a
// background event plus per-parent probabilities over the admissible parents
// (those j < i with t_i - t_j <= t_phi). Rows always sum to one.
// ---------------------------------------------------------------------------

struct BranchingRow {
    double self = 1.0;
    std::vector<std::pair<std::size_t, double>> parents; // (j, p_ij), j ascending
};

struct BranchingMatrix {
    std::vector<BranchingRow> rows;

    [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }

    [[nodiscard]] double row_sum_error() const {
        double err = 0.0;
        for (const auto& row : rows) {
            double s = row.self;
            for (const auto& [j, p] : row.parents) s += p;
            err = std::max(err, std::abs(s - 1.0));
        }
        return err;
    }

    static double max_abs_diff(const BranchingMatrix& a, const BranchingMatrix& b) {
        if (a.size() != b.size()) {
            throw std::invalid_argument("BranchingMatrix::max_abs_diff: size mismatch");
        }
        double d = 0.0;
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            const auto& ra = a.rows[i];
            const auto& rb = b.rows[i];
            if (ra.parents.size() != rb.parents.size()) {
                throw std::invalid_argument("BranchingMatrix::max_abs_diff: structure mismatch");
            }
            d = std::max(d, std::abs(ra.self - rb.self));
            for (std::size_t k = 0; k < ra.parents.size(); ++k) {
                d = std::max(d, std::abs(ra.parents[k].second - rb.parents[k].second));
            }
        }
        return d;
    }

    static BranchingMatrix uniform_init(const EventSequence& events, double t_phi) {
        BranchingMatrix p;
        p.rows.resize(events.size());
        for (std::size_t i = 0; i < events.size(); ++i) {
            auto& row = p.rows[i];
            const double lo = events.times[i] - t_phi;
            const auto first = std::lower_bound(events.times.begin(),
                                                events.times.begin() + static_cast<std::ptrdiff_t>(i), lo);
            for (auto it = first; it != events.times.begin() + static_cast<std::ptrdiff_t>(i); ++it) {
                row.parents.emplace_back(static_cast<std::size_t>(it - events.times.begin()), 0.0);
            }
            const double u = 1.0 / (1.0 + static_cast<double>(row.parents.size()));
            row.self = u;
            for (auto& [j, pv] : row.parents) pv = u;
        }
        return p;
    }
};

inline Eigen::VectorXd self_weights(const BranchingMatrix& p) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) w(static_cast<Eigen::Index>(i)) = p.rows[i].self;
    return w;
}

inline Eigen::VectorXd pair_weights(const BranchingMatrix& p) {
    std::size_t n = 0;
    for (const auto& row : p.rows) n += row.parents.size();
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    Eigen::Index k = 0;
    for (const auto& row : p.rows) {
        for (const auto& [j, pv] : row.parents) w(k++) = pv;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Per-component precomputation shared by the objective, its gradients, and the
// stationarity solve. `w` holds rows w_x = K^{-1} k_{z,x} for each data
// location (event times for the baseline part, pair lags for the excitation
// part); `a_mat` is K^{-1} Psi K^{-1}; `integral_scale` is 1 for the baseline
// and N for the excitation, whose compensator is counted once per event.
// ---------------------------------------------------------------------------

struct ComponentOperators {
    KernelParams params;
    InducingGrid grid;
    double integral_scale = 1.0;
    Eigen::MatrixXd kinv;
    double log_det_k = 0.0;
    Eigen::MatrixXd a_mat;
    double tr_kinv_psi = 0.0;
    Eigen::MatrixXd w;        // n_loc x M
    Eigen::VectorXd base_var; // n_loc
    std::vector<double> locs;

    [[nodiscard]] Eigen::Index dim() const { return kinv.rows(); }
    [[nodiscard]] Eigen::Index n_locs() const { return w.rows(); }

    // Marginal variances at the data locations for diagonal S.
    [[nodiscard]] Eigen::VectorXd variances(const Eigen::VectorXd& s_diag) const {
        Eigen::VectorXd v = base_var + w.array().square().matrix() * s_diag;
        return v.cwiseMax(kVarianceFloor);
    }
};

inline ComponentOperators make_component_operators(std::vector<double> locs,
                                                   const KernelParams& params,
                                                   const InducingGrid& grid,
                                                   double integral_scale) {
    ComponentOperators ops;
    ops.params = params;
    ops.grid = grid;
    ops.integral_scale = integral_scale;
    ops.locs = std::move(locs);

    const SpdSolver solver(gram_matrix(params, grid.points, grid.points, default_jitter(params)));
    ops.kinv = solver.inverse();
    ops.log_det_k = solver.log_det();

    const Eigen::MatrixXd psi = psi_matrix(params, grid);
    const Eigen::MatrixXd b = solver.solve(psi);
    ops.tr_kinv_psi = b.trace();
    ops.a_mat = solver.solve(Eigen::MatrixXd(b.transpose()));

    const auto n = static_cast<Eigen::Index>(ops.locs.size());
    const auto m = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd kzx(m, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        kzx.col(i) = kernel_vector(params, grid.points, ops.locs[static_cast<std::size_t>(i)]);
    }
    ops.w = solver.solve(kzx).transpose();
    ops.base_var.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ops.base_var(i) = params.theta0 - kzx.col(i).dot(ops.w.row(i));
    }
    return ops;
}

// All admissible (child, parent) pairs in the same flattened order the
// branching matrix uses (child ascending, parent ascending within a row).
inline std::vector<std::pair<std::size_t, std::size_t>> admissible_pairs(
    const EventSequence& events, double t_phi) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const double lo = events.times[i] - t_phi;
        const auto first = std::lower_bound(events.times.begin(),
                                            events.times.begin() + static_cast<std::ptrdiff_t>(i), lo);
        for (auto it = first; it != events.times.begin() + static_cast<std::ptrdiff_t>(i); ++it) {
            pairs.emplace_back(i, static_cast<std::size_t>(it - events.times.begin()));
        }
    }
    return pairs;
}

struct EmvPrecomp {
    std::optional<ComponentOperators> mu_ops;
    ComponentOperators phi_ops;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double t_end = 0.0;
    double t_phi = 0.0;
    std::size_t n_events = 0;
};

inline EmvPrecomp make_precomp(const EventSequence& events, double t_phi,
                               const KernelParams& params_f, const KernelParams& params_g,
                               const InducingGrid& grid_f, const InducingGrid& grid_g,
                               bool with_mu = true) {
    events.validate();
    EmvPrecomp pre;
    pre.t_end = events.t_end;
    pre.t_phi = t_phi;
    pre.n_events = events.size();
    if (with_mu) {
        pre.mu_ops = make_component_operators(events.times, params_f, grid_f, 1.0);
    }
    pre.pairs = admissible_pairs(events, t_phi);
    std::vector<double> lags;
    lags.reserve(pre.pairs.size());
    for (const auto& [i, j] : pre.pairs) lags.push_back(events.times[i] - events.times[j]);
    pre.phi_ops = make_component_operators(std::move(lags), params_g, grid_g,
                                           static_cast<double>(events.size()));
    return pre;
}

// ---------------------------------------------------------------------------
// Evidence lower bound of one squared-GP component, its gradients in the
// diagonal covariance, and the damped fixed-point solve for the stationary
// diagonal. The objective is
//   -scale*(theta0 L - Tr(K^{-1}Psi) + Tr(K^{-1}SK^{-1}Psi))
//   + sum_x p_x E[log f^2(x)] - KL(q || prior)
// and is concave in the diagonal of S, so the stationary point is its maximum.
// ---------------------------------------------------------------------------

inline double component_elbo(const ComponentOperators& ops, const Eigen::VectorXd& weights,
                             const Eigen::VectorXd& s_diag) {
    if (weights.size() != ops.n_locs() || s_diag.size() != ops.dim()) {
        throw std::invalid_argument("component_elbo: size mismatch");
    }
    if ((s_diag.array() <= 0.0).any()) {
        throw std::invalid_argument("component_elbo: covariance diagonal must be positive");
    }
    const Eigen::VectorXd var = ops.variances(s_diag);
    double data = 0.0;
    for (Eigen::Index i = 0; i < var.size(); ++i) {
        data += weights(i) * expected_log_square(var(i));
    }
    const double integral =
        ops.integral_scale * (ops.params.theta0 * ops.grid.domain_length - ops.tr_kinv_psi +
                              (s_diag.array() * ops.a_mat.diagonal().array()).sum());
    const double m = static_cast<double>(ops.dim());
    const double kl = 0.5 * ((s_diag.array() * ops.kinv.diagonal().array()).sum() +
                             ops.log_det_k - s_diag.array().log().sum() - m);
    return data - integral - kl;
}

// Testing path: full covariance and an optional nonzero mean (the data term
// then goes through Gauss-Hermite quadrature instead of the closed form).
inline double component_elbo_general(const ComponentOperators& ops,
                                     const Eigen::VectorXd& weights,
                                     const Eigen::MatrixXd& s_full,
                                     const Eigen::VectorXd& mean,
                                     const GaussHermiteRule& rule) {
    if (weights.size() != ops.n_locs() || s_full.rows() != ops.dim() ||
        s_full.cols() != ops.dim() || mean.size() != ops.dim()) {
        throw std::invalid_argument("component_elbo_general: size mismatch");
    }
    const bool zero_mean = mean.isZero(0.0);
    double data = 0.0;
    for (Eigen::Index i = 0; i < ops.n_locs(); ++i) {
        const Eigen::VectorXd wi = ops.w.row(i);
        const double var = std::max(ops.base_var(i) + wi.dot(s_full * wi), kVarianceFloor);
        const double mi = wi.dot(mean);
        data += weights(i) * (zero_mean ? expected_log_square(var)
                                        : detail::expected_log_square_general(mi, var, rule));
    }
    const double integral =
        ops.integral_scale * (ops.params.theta0 * ops.grid.domain_length - ops.tr_kinv_psi +
                              (s_full.array() * ops.a_mat.array()).sum() +
                              mean.dot(ops.a_mat * mean));
    const double m = static_cast<double>(ops.dim());
    const double kl = 0.5 * ((s_full.array() * ops.kinv.array()).sum() + ops.log_det_k -
                             SpdSolver(s_full).log_det() - m + mean.dot(ops.kinv * mean));
    return data - integral - kl;
}

inline Eigen::VectorXd component_grad_diag(const ComponentOperators& ops,
                                           const Eigen::VectorXd& weights,
                                           const Eigen::VectorXd& s_diag) {
    const Eigen::VectorXd var = ops.variances(s_diag);
    const Eigen::VectorXd ratio = weights.array() / var.array();
    const Eigen::VectorXd data = ops.w.array().square().matrix().transpose() * ratio;
    return data - ops.integral_scale * ops.a_mat.diagonal() -
           0.5 * (ops.kinv.diagonal() - s_diag.cwiseInverse());
}

// Full symmetric-matrix gradient (testing path, zero mean): with
// X = -scale*K^{-1}PsiK^{-1} + sum_x (p_x/var_x) w_x w_x^T - (K^{-1}-S^{-1})/2,
// the gradient respecting S's symmetry is 2X - diag(X).
inline Eigen::MatrixXd component_grad_full(const ComponentOperators& ops,
                                           const Eigen::VectorXd& weights,
                                           const Eigen::MatrixXd& s_full) {
    Eigen::VectorXd var(ops.n_locs());
    for (Eigen::Index i = 0; i < ops.n_locs(); ++i) {
        const Eigen::VectorXd wi = ops.w.row(i);
        var(i) = std::max(ops.base_var(i) + wi.dot(s_full * wi), kVarianceFloor);
    }
    const Eigen::VectorXd ratio = weights.array() / var.array();
    const Eigen::MatrixXd data = ops.w.transpose() * ratio.asDiagonal() * ops.w;
    const Eigen::MatrixXd s_inv = SpdSolver(s_full).inverse();
    const Eigen::MatrixXd x = -ops.integral_scale * ops.a_mat + data - 0.5 * (ops.kinv - s_inv);
    return 2.0 * x - x.diagonal().asDiagonal().toDenseMatrix();
}

struct FixedPointConfig {
    double damping = 0.5;
    double tol = 1e-8;
    int max_inner_iters = 500;
};

// Stationarity solve for the diagonal covariance. Phase one runs the damped
// fixed point on the precision diagonal x = 1/s:
//   x_a <- (1-damping) x_a + damping (2 scale A_aa + K^{-1}_aa - 2 d_a(s)),
// d_a(s) = sum_x p_x w_xa^2 / var_x(s). That map is cheap and usually lands
// within a handful of iterations from a warm start, but its contraction rate
// degrades on badly scaled states, so the remaining budget switches to damped
// Newton on the (strictly concave) objective, whose Hessian is available in
// closed form. Throws NoConvergence once the combined budget is spent.
inline Eigen::VectorXd solve_stationary(const ComponentOperators& ops,
                                        const Eigen::VectorXd& weights,
                                        Eigen::VectorXd s_warm,
                                        const FixedPointConfig& cfg = {}) {
    if ((s_warm.array() <= 0.0).any()) {
        throw std::invalid_argument("solve_stationary: warm start must be positive");
    }
    const Eigen::VectorXd fixed =
        2.0 * ops.integral_scale * ops.a_mat.diagonal() + ops.kinv.diagonal();
    const Eigen::VectorXd floor = 1e-10 * fixed;
    const Eigen::MatrixXd w_sq = ops.w.array().square();

    const auto data_weights = [&](const Eigen::VectorXd& s) {
        const Eigen::VectorXd var = ops.variances(s);
        return Eigen::VectorXd(weights.array() / var.array());
    };

    int used = 0;
    Eigen::VectorXd x = s_warm.cwiseInverse();
    const int fp_budget = std::min(cfg.max_inner_iters, 60);
    for (; used < fp_budget; ++used) {
        const Eigen::VectorXd s = x.cwiseInverse();
        const Eigen::VectorXd d = w_sq.transpose() * data_weights(s);
        const Eigen::VectorXd grad = d - 0.5 * (fixed - x);
        if (grad.lpNorm<Eigen::Infinity>() <= cfg.tol) return s;
        x = ((1.0 - cfg.damping) * x + cfg.damping * (fixed - 2.0 * d)).cwiseMax(floor);
    }

    const bool debug = std::getenv("HAWKES_DEBUG_SOLVE") != nullptr;
    Eigen::VectorXd s = x.cwiseInverse();
    double value = component_elbo(ops, weights, s);
    for (; used < cfg.max_inner_iters; ++used) {
        const Eigen::VectorXd ratio = data_weights(s);
        const Eigen::VectorXd d = w_sq.transpose() * ratio;
        const Eigen::VectorXd grad = d - 0.5 * (fixed - s.cwiseInverse());
        if (debug) {
            std::cerr << "solve it=" << used << " grad=" << grad.lpNorm<Eigen::Infinity>()
                      << " value=" << value << " smin=" << s.minCoeff()
                      << " smax=" << s.maxCoeff() << "\n";
        }
        if (grad.lpNorm<Eigen::Infinity>() <= cfg.tol) return s;

        // Negated Hessian of the objective in s; always positive definite.
        Eigen::MatrixXd neg_h =
            w_sq.transpose() * ratio.cwiseQuotient(ops.variances(s)).asDiagonal() * w_sq;
        neg_h.diagonal() += 0.5 * s.array().square().inverse().matrix();
        Eigen::VectorXd dir = neg_h.llt().solve(grad);
        double slope = grad.dot(dir);
        if (!(slope > 0.0)) { // fall back to plain ascent on a failed factorization
            dir = grad;
            slope = grad.squaredNorm();
        }

        double step = 1.0;
        for (Eigen::Index a = 0; a < s.size(); ++a) {
            if (dir(a) < 0.0) step = std::min(step, -0.9 * s(a) / dir(a));
        }

        // Near the optimum the model's predicted gain drops below what the
        // objective can resolve in double precision, so a sufficient-decrease
        // test would only ever accept no-op steps. Take the (tiny) Newton step
        // on trust there; the concave model makes it a contraction.
        if (step * slope <= 1e-12 * (1.0 + std::abs(value))) {
            s += step * dir;
            value = component_elbo(ops, weights, s);
            continue;
        }

        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            const Eigen::VectorXd trial = s + step * dir;
            const double trial_value = component_elbo(ops, weights, trial);
            if (trial_value >= value + 1e-4 * step * slope) {
                s = trial;
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
            if (step * slope <= 1e-12 * (1.0 + std::abs(value))) break;
        }
        if (!accepted) break; // stalled at the arithmetic noise floor
    }

    const Eigen::VectorXd d = w_sq.transpose() * data_weights(s);
    if ((d - 0.5 * (fixed - s.cwiseInverse())).lpNorm<Eigen::Infinity>() <= cfg.tol) return s;
    throw NoConvergence("solve_stationary: stationarity not reached within budget");
}

// Spec'd entry points over the joint precomputation.
inline double elbo_mu(const Eigen::VectorXd& s_diag, const BranchingMatrix& p,
                      const EmvPrecomp& pre) {
    if (!pre.mu_ops) throw std::logic_error("elbo_mu: no baseline component in precomputation");
    return component_elbo(*pre.mu_ops, self_weights(p), s_diag);
}

inline double elbo_phi(const Eigen::VectorXd& s_diag, const BranchingMatrix& p,
                       const EmvPrecomp& pre) {
    return component_elbo(pre.phi_ops, pair_weights(p), s_diag);
}

inline Eigen::VectorXd grad_elbo_mu_diag(const Eigen::VectorXd& s_diag, const BranchingMatrix& p,
                                         const EmvPrecomp& pre) {
    if (!pre.mu_ops) throw std::logic_error("grad_elbo_mu_diag: no baseline component");
    return component_grad_diag(*pre.mu_ops, self_weights(p), s_diag);
}

inline Eigen::VectorXd grad_elbo_phi_diag(const Eigen::VectorXd& s_diag, const BranchingMatrix& p,
                                          const EmvPrecomp& pre) {
    return component_grad_diag(pre.phi_ops, pair_weights(p), s_diag);
}

// ---------------------------------------------------------------------------
// Fitted model: each intensity component is the posterior second moment of a
// squared GP, mu(t) = E[f^2(t)] and phi(tau) = E[g^2(tau)] (zero beyond the
// support window). With the mean pinned at zero these reduce to the posterior
// variances.
// ---------------------------------------------------------------------------

class SquaredGpEstimate {
public:
    SquaredGpEstimate(const KernelParams& params, const InducingGrid& grid,
                      const Eigen::VectorXd& s_diag)
        : params_(params),
          grid_(grid),
          s_diag_(s_diag),
          moments_(make_moments(params, grid, s_diag)),
          full_integral_(moments_.integral_to(grid.domain_length)) {}

    [[nodiscard]] double value_at(double t) const { return moments_.second_moment_at(t); }

    [[nodiscard]] double integral_to(double upper) const {
        if (upper <= 0.0) return 0.0;
        if (upper >= grid_.domain_length) {
            return full_integral_ + (upper > grid_.domain_length
                                         ? moments_.integral_to(upper) - full_integral_
                                         : 0.0);
        }
        return moments_.integral_to(upper);
    }

    [[nodiscard]] double full_integral() const noexcept { return full_integral_; }
    [[nodiscard]] const KernelParams& params() const noexcept { return params_; }
    [[nodiscard]] const InducingGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const Eigen::VectorXd& s_diag() const noexcept { return s_diag_; }

private:
    static PosteriorMoments make_moments(const KernelParams& params, const InducingGrid& grid,
                                         const Eigen::VectorXd& s_diag) {
        VariationalPosterior q;
        q.grid = grid;
        q.mean = Eigen::VectorXd::Zero(s_diag.size());
        q.cov_diag = s_diag;
        return posterior_moments(q, params);
    }

    KernelParams params_;
    InducingGrid grid_;
    Eigen::VectorXd s_diag_;
    PosteriorMoments moments_;
    double full_integral_;
};

struct HawkesModelEstimate {
    std::optional<SquaredGpEstimate> background; // absent on the constant-baseline path
    double constant_mu = 0.0;
    std::optional<SquaredGpEstimate> excitation;
    double t_horizon = 0.0;
    double t_phi = 0.0;

    // Each event's excitation compensator is counted over the full window.
    static constexpr bool full_window_loglik = true;

    [[nodiscard]] double mu_at(double t) const {
        return background ? background->value_at(t) : constant_mu;
    }

    [[nodiscard]] double phi_at(double tau) const {
        if (!(tau >= 0.0) || tau > t_phi || !excitation) return 0.0;
        return excitation->value_at(tau);
    }

    [[nodiscard]] double mu_compensator(double t) const {
        if (t <= 0.0) return 0.0;
        return background ? background->integral_to(t) : constant_mu * t;
    }

    [[nodiscard]] double phi_compensator(double elapsed) const {
        if (!excitation || elapsed <= 0.0) return 0.0;
        return excitation->integral_to(std::min(elapsed, t_phi));
    }

    [[nodiscard]] double phi_window_integral() const {
        return excitation ? excitation->full_integral() : 0.0;
    }
};

// E-step: responsibilities from the current intensity components. Works for
// any model exposing mu_at/phi_at/t_phi.
template <typename Model>
BranchingMatrix update_branching(const Model& model, const EventSequence& events) {
    BranchingMatrix p;
    p.rows.resize(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        auto& row = p.rows[i];
        const double ti = events.times[i];
        const double mu = model.mu_at(ti);
        double denom = mu;
        const double lo = ti - model.t_phi;
        const auto begin = events.times.begin();
        const auto first = std::lower_bound(begin, begin + static_cast<std::ptrdiff_t>(i), lo);
        for (auto it = first; it != begin + static_cast<std::ptrdiff_t>(i); ++it) {
            const double ph = model.phi_at(ti - *it);
            row.parents.emplace_back(static_cast<std::size_t>(it - begin), ph);
            denom += ph;
        }
        if (!(denom > 0.0) || !std::isfinite(denom)) {
            throw DegenerateIntensity("update_branching: vanishing intensity at an event");
        }
        row.self = mu / denom;
        for (auto& [j, pv] : row.parents) pv /= denom;
    }
    return p;
}

// Branching lower bound on the log likelihood (entropy-augmented surrogate):
//   sum_i p_ii (log mu(t_i) - log p_ii)
// + sum_{i,j} p_ij (log phi(t_i - t_j) - log p_ij)
// - int_0^T mu - N * int_0^{t_phi} phi.
template <typename Model>
double q_lower_bound(const Model& model, const EventSequence& events, const BranchingMatrix& p) {
    if (p.size() != events.size()) {
        throw std::invalid_argument("q_lower_bound: branching size mismatch");
    }
    double total = -model.mu_compensator(events.t_end) -
                   static_cast<double>(events.size()) * model.phi_compensator(model.t_phi);
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& row = p.rows[i];
        if (row.self > 0.0) {
            total += row.self * (std::log(model.mu_at(events.times[i])) - std::log(row.self));
        }
        for (const auto& [j, pv] : row.parents) {
            if (pv > 0.0) {
                total += pv * (std::log(model.phi_at(events.times[i] - events.times[j])) -
                               std::log(pv));
            }
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Hyperparameter refresh: coordinate search over (log theta0, log theta1)
// within a box around the current value, re-solving the stationary diagonal
// for every trial and keeping the best objective ever seen. Falls back to the
// incoming state when no trial improves it.
// ---------------------------------------------------------------------------

struct HyperConfig {
    int max_evals = 60;
    double step = 0.3;
    double log_width0 = 6.0; // box half-width around log(theta0)
    double log_width1 = 5.0; // box half-width around log(theta1)
};

struct HyperUpdateResult {
    KernelParams params;
    Eigen::VectorXd s_diag;
    ComponentOperators ops;
    double elbo = -std::numeric_limits<double>::infinity();
};

inline HyperUpdateResult update_hyperparams(const ComponentOperators& current,
                                            const Eigen::VectorXd& weights,
                                            const Eigen::VectorXd& s_warm,
                                            const FixedPointConfig& fp,
                                            const HyperConfig& hc = {}) {
    HyperUpdateResult best;
    best.params = current.params;
    best.ops = current;
    try {
        best.s_diag = solve_stationary(current, weights, s_warm, fp);
        best.elbo = component_elbo(current, weights, best.s_diag);
    } catch (const std::exception&) {
        best.s_diag = s_warm;
        best.elbo = component_elbo(current, weights, s_warm);
    }

    const Eigen::Vector2d center(std::log(current.params.theta0), std::log(current.params.theta1));
    BoxBounds bounds;
    bounds.lower = center - Eigen::Vector2d(hc.log_width0, hc.log_width1);
    bounds.upper = center + Eigen::Vector2d(hc.log_width0, hc.log_width1);

    const auto objective = [&](const Eigen::VectorXd& log_theta) -> double {
        const KernelParams trial{std::exp(log_theta(0)), std::exp(log_theta(1))};
        try {
            ComponentOperators ops = make_component_operators(current.locs, trial, current.grid,
                                                              current.integral_scale);
            const Eigen::VectorXd s = solve_stationary(ops, weights, s_warm, fp);
            const double e = component_elbo(ops, weights, s);
            if (std::isfinite(e) && e > best.elbo) {
                best = HyperUpdateResult{trial, s, std::move(ops), e};
            }
            return -e;
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    NelderMeadConfig nm;
    nm.max_evals = hc.max_evals;
    nm.initial_step = hc.step;
    nelder_mead(objective, center, bounds, nm);
    return best;
}

// ---------------------------------------------------------------------------
// Full fit: alternate the stationary covariance solves with branching updates
// until the responsibilities settle. The constant-baseline variant replaces
// the background GP with mu = sum_i p_ii / T.
// ---------------------------------------------------------------------------

struct FitConfig {
    int m_f = 8;
    int m_g = 6;
    double t_phi = 6.0;
    int max_em_iters = 100;
    double p_tol = 1e-8;
    int hyper_every = 20; // 0 disables the refresh
    FixedPointConfig fixed_point;
    HyperConfig hyper;
    std::optional<KernelParams> theta_f;
    std::optional<KernelParams> theta_g;
};

struct FitDiagnostics {
    std::vector<double> elbo_mu_trace;
    std::vector<double> elbo_phi_trace;
    std::vector<double> branching_delta_trace;
    double max_row_sum_error = 0.0;
    double min_solve_improvement = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

struct FitResult {
    HawkesModelEstimate model;
    BranchingMatrix branching;
    FitDiagnostics diagnostics;
};

inline KernelParams default_theta_f(std::size_t n, double t_end, int m_f) {
    const double theta1 = std::pow(2.0 * static_cast<double>(m_f) / t_end, 2);
    return KernelParams{static_cast<double>(n) / t_end, theta1};
}

inline KernelParams default_theta_g(double t_phi, int m_g) {
    const double theta1 = std::pow(2.0 * static_cast<double>(m_g) / t_phi, 2);
    return KernelParams{1.0, theta1};
}

namespace detail {

inline void check_fit_inputs(const EventSequence& events, const FitConfig& cfg) {
    events.validate();
    if (events.empty()) {
        throw std::invalid_argument("fit: at least one event is required");
    }
    if (!(cfg.t_phi > 0.0)) throw std::invalid_argument("fit: t_phi must be positive");
    if (cfg.m_f < 1 || cfg.m_g < 1) {
        throw std::invalid_argument("fit: inducing point counts must be at least 1");
    }
    if (cfg.max_em_iters < 0) throw std::invalid_argument("fit: negative iteration count");
}

// One stationarity solve with bookkeeping of the objective improvement.
inline Eigen::VectorXd tracked_solve(const ComponentOperators& ops, const Eigen::VectorXd& weights,
                                     const Eigen::VectorXd& s_warm, const FixedPointConfig& fp,
                                     FitDiagnostics& diag, double& elbo_out) {
    const double before = component_elbo(ops, weights, s_warm);
    const Eigen::VectorXd s = solve_stationary(ops, weights, s_warm, fp);
    elbo_out = component_elbo(ops, weights, s);
    diag.min_solve_improvement = std::min(diag.min_solve_improvement, elbo_out - before);
    return s;
}

} // namespace detail

inline FitResult fit(const EventSequence& events, const FitConfig& cfg,
                     FitDiagnostics* progress = nullptr) {
    detail::check_fit_inputs(events, cfg);
    const double t_end = events.t_end;
    const InducingGrid grid_f = InducingGrid::uniform(cfg.m_f, t_end);
    const InducingGrid grid_g = InducingGrid::uniform(cfg.m_g, cfg.t_phi);
    KernelParams theta_f = cfg.theta_f.value_or(default_theta_f(events.size(), t_end, cfg.m_f));
    KernelParams theta_g = cfg.theta_g.value_or(default_theta_g(cfg.t_phi, cfg.m_g));

    EmvPrecomp pre = make_precomp(events, cfg.t_phi, theta_f, theta_g, grid_f, grid_g, true);
    BranchingMatrix p = BranchingMatrix::uniform_init(events, cfg.t_phi);
    Eigen::VectorXd s_f =
        Eigen::VectorXd::Constant(grid_f.size(), theta_f.theta0 + default_jitter(theta_f));
    Eigen::VectorXd s_g =
        Eigen::VectorXd::Constant(grid_g.size(), theta_g.theta0 + default_jitter(theta_g));

    FitDiagnostics local;
    FitDiagnostics& diag = progress ? *progress : local;
    diag = FitDiagnostics{};

    FitResult out;
    out.model.t_horizon = t_end;
    out.model.t_phi = cfg.t_phi;

    for (int iter = 1; iter <= cfg.max_em_iters; ++iter) {
        const Eigen::VectorXd wf = self_weights(p);
        const Eigen::VectorXd wg = pair_weights(p);
        if (cfg.hyper_every > 0 && iter % cfg.hyper_every == 0) {
            auto up_f = update_hyperparams(*pre.mu_ops, wf, s_f, cfg.fixed_point, cfg.hyper);
            theta_f = up_f.params;
            pre.mu_ops = std::move(up_f.ops);
            s_f = up_f.s_diag;
            auto up_g = update_hyperparams(pre.phi_ops, wg, s_g, cfg.fixed_point, cfg.hyper);
            theta_g = up_g.params;
            pre.phi_ops = std::move(up_g.ops);
            s_g = up_g.s_diag;
        }
        double ef = 0.0;
        double eg = 0.0;
        s_f = detail::tracked_solve(*pre.mu_ops, wf, s_f, cfg.fixed_point, diag, ef);
        s_g = detail::tracked_solve(pre.phi_ops, wg, s_g, cfg.fixed_point, diag, eg);
        diag.elbo_mu_trace.push_back(ef);
        diag.elbo_phi_trace.push_back(eg);

        out.model.background.emplace(theta_f, grid_f, s_f);
        out.model.excitation.emplace(theta_g, grid_g, s_g);
        BranchingMatrix p_new = update_branching(out.model, events);
        diag.max_row_sum_error = std::max(diag.max_row_sum_error, p_new.row_sum_error());
        const double delta = BranchingMatrix::max_abs_diff(p, p_new);
        diag.branching_delta_trace.push_back(delta);
        p = std::move(p_new);
        diag.iterations = iter;
        if (delta <= cfg.p_tol) {
            diag.converged = true;
            break;
        }
    }
    if (!out.model.excitation) { // zero-iteration run: assemble from the initial state
        out.model.background.emplace(theta_f, grid_f, s_f);
        out.model.excitation.emplace(theta_g, grid_g, s_g);
    }
    out.branching = std::move(p);
    out.diagnostics = diag;
    return out;
}

inline FitResult fit_const_mu(const EventSequence& events, const FitConfig& cfg,
                              FitDiagnostics* progress = nullptr) {
    detail::check_fit_inputs(events, cfg);
    const double t_end = events.t_end;
    const InducingGrid grid_g = InducingGrid::uniform(cfg.m_g, cfg.t_phi);
    KernelParams theta_g = cfg.theta_g.value_or(default_theta_g(cfg.t_phi, cfg.m_g));

    EmvPrecomp pre = make_precomp(events, cfg.t_phi, KernelParams{1.0, 1.0}, theta_g,
                                  InducingGrid::uniform(1, t_end), grid_g, false);
    BranchingMatrix p = BranchingMatrix::uniform_init(events, cfg.t_phi);
    Eigen::VectorXd s_g =
        Eigen::VectorXd::Constant(grid_g.size(), theta_g.theta0 + default_jitter(theta_g));

    FitDiagnostics local;
    FitDiagnostics& diag = progress ? *progress : local;
    diag = FitDiagnostics{};

    FitResult out;
    out.model.t_horizon = t_end;
    out.model.t_phi = cfg.t_phi;
    out.model.constant_mu = self_weights(p).sum() / t_end;

    for (int iter = 1; iter <= cfg.max_em_iters; ++iter) {
        const Eigen::VectorXd wg = pair_weights(p);
        if (cfg.hyper_every > 0 && iter % cfg.hyper_every == 0) {
            auto up_g = update_hyperparams(pre.phi_ops, wg, s_g, cfg.fixed_point, cfg.hyper);
            theta_g = up_g.params;
            pre.phi_ops = std::move(up_g.ops);
            s_g = up_g.s_diag;
        }
        double eg = 0.0;
        s_g = detail::tracked_solve(pre.phi_ops, wg, s_g, cfg.fixed_point, diag, eg);
        diag.elbo_phi_trace.push_back(eg);

        out.model.excitation.emplace(theta_g, grid_g, s_g);
        out.model.constant_mu = self_weights(p).sum() / t_end;
        BranchingMatrix p_new = update_branching(out.model, events);
        diag.max_row_sum_error = std::max(diag.max_row_sum_error, p_new.row_sum_error());
        const double delta = BranchingMatrix::max_abs_diff(p, p_new);
        diag.branching_delta_trace.push_back(delta);
        p = std::move(p_new);
        diag.iterations = iter;
        if (delta <= cfg.p_tol) {
            diag.converged = true;
            break;
        }
    }
    if (!out.model.excitation) {
        out.model.excitation.emplace(theta_g, grid_g, s_g);
    }
    out.branching = std::move(p);
    out.diagnostics = diag;
    return out;
}

} // namespace hawkes
