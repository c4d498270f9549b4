#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hawkes/emv.hpp"
#include "hawkes/errors.hpp"
#include "hawkes/event_sequence.hpp"
#include "hawkes/optim.hpp"

namespace hawkes {

// ---------------------------------------------------------------------------
// Parametric Hawkes baseline: constant mu with kernel alpha*exp(-beta*tau),
// fitted by maximum likelihood over log-parameters.
// ---------------------------------------------------------------------------

struct ParametricHawkesParams {
    double mu = 0.0;
    double alpha = 0.0;
    double beta = 1.0;
};

struct PhModel {
    ParametricHawkesParams params;
    double t_horizon = 0.0;
    double t_phi = 0.0; // effective kernel support for windowed evaluations
    static constexpr bool full_window_loglik = false;

    static PhModel from_params(const ParametricHawkesParams& p, double t_horizon) {
        PhModel m;
        m.params = p;
        m.t_horizon = t_horizon;
        // beyond this lag the kernel is below 1e-14 of its peak
        m.t_phi = std::min(32.3 / p.beta, 1e6);
        return m;
    }

    [[nodiscard]] double mu_at(double) const { return params.mu; }

    [[nodiscard]] double phi_at(double tau) const {
        if (!(tau >= 0.0) || tau > t_phi) return 0.0;
        return params.alpha * std::exp(-params.beta * tau);
    }

    [[nodiscard]] double mu_compensator(double t) const { return params.mu * std::max(t, 0.0); }

    [[nodiscard]] double phi_compensator(double elapsed) const {
        if (elapsed <= 0.0) return 0.0;
        const double e = std::min(elapsed, t_phi);
        return params.alpha / params.beta * (1.0 - std::exp(-params.beta * e));
    }

    [[nodiscard]] double phi_window_integral() const { return phi_compensator(t_phi); }
};

// Log-likelihood of the exponential-kernel model with its gradient in
// (mu, alpha, beta), using the standard one-pass recursion
//   R_i = exp(-beta dt_i) (1 + R_{i-1}).
inline double ph_loglik_grad(const ParametricHawkesParams& p, const EventSequence& events,
                             Eigen::Vector3d* grad) {
    const double mu = p.mu;
    const double alpha = p.alpha;
    const double beta = p.beta;
    const double t_end = events.t_end;
    double ll = -mu * t_end;
    double d_mu = -t_end;
    double d_alpha = 0.0;
    double d_beta = 0.0;
    double r = 0.0;
    double dr = 0.0; // dR/dbeta
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i > 0) {
            const double dt = events.times[i] - events.times[i - 1];
            const double decay = std::exp(-beta * dt);
            dr = decay * (dr - dt * (1.0 + r));
            r = decay * (1.0 + r);
        }
        const double lam = mu + alpha * r;
        if (!(lam > 0.0)) return -std::numeric_limits<double>::infinity();
        ll += std::log(lam);
        d_mu += 1.0 / lam;
        d_alpha += r / lam;
        d_beta += alpha * dr / lam;
        const double rem = t_end - events.times[i];
        const double tail = std::exp(-beta * rem);
        ll -= alpha / beta * (1.0 - tail);
        d_alpha -= (1.0 - tail) / beta;
        d_beta += alpha / (beta * beta) * (1.0 - tail) - alpha / beta * rem * tail;
    }
    if (grad) *grad = Eigen::Vector3d(d_mu, d_alpha, d_beta);
    return ll;
}

struct PhFitConfig {
    int max_iters = 300;
    double grad_tol = 1e-10;
};

inline ParametricHawkesParams fit_parametric(const EventSequence& events,
                                             const PhFitConfig& cfg = {}) {
    events.validate();
    if (events.size() < 2) {
        throw std::invalid_argument("fit_parametric: at least two events required");
    }
    const double rate = static_cast<double>(events.size()) / events.t_end;

    const auto negll = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const ParametricHawkesParams p{std::exp(x(0)), std::exp(x(1)), std::exp(x(2))};
        Eigen::Vector3d gp;
        const double ll = ph_loglik_grad(p, events, &gp);
        g = -(Eigen::Vector3d(p.mu, p.alpha, p.beta).array() * gp.array()); // chain rule to logs
        return -ll;
    };

    const std::vector<Eigen::Vector3d> starts = {
        {0.7 * rate, 0.5, 1.0}, {0.5 * rate, 0.2, 3.0}, {rate, 0.05, 0.5}};
    BfgsResult best;
    bool have = false;
    BfgsConfig bc;
    bc.max_iters = cfg.max_iters;
    bc.grad_tol = cfg.grad_tol;
    for (const auto& s : starts) {
        const Eigen::Vector3d x0 = s.array().log();
        const BfgsResult res = bfgs_minimize(negll, x0, bc);
        if (!have || res.value < best.value) {
            best = res;
            have = true;
        }
    }
    if (!have || !std::isfinite(best.value) ||
        best.grad.norm() > 1e-6 * std::max(1.0, std::abs(best.value))) {
        throw NoConvergence("fit_parametric: no start reached the gradient tolerance");
    }
    const ParametricHawkesParams p{std::exp(best.x(0)), std::exp(best.x(1)),
                                   std::exp(best.x(2))};
    if (p.alpha / p.beta >= 1.0) {
        throw NoConvergence("fit_parametric: supercritical estimate");
    }
    return p;
}

inline PhModel fit_ph(const EventSequence& events, const PhFitConfig& cfg = {}) {
    return PhModel::from_params(fit_parametric(events, cfg), events.t_end);
}

// ---------------------------------------------------------------------------
// MISD baseline: EM with a piecewise-constant triggering kernel. The M-step
// normalizes each bin height by N*bin_width, i.e. every event contributes its
// full kernel-window compensator, mirroring the EM surrogate's edge handling.
// ---------------------------------------------------------------------------

struct MisdModel {
    double mu = 0.0;
    std::vector<double> heights;
    double t_horizon = 0.0;
    double t_phi = 0.0;
    static constexpr bool full_window_loglik = false;

    [[nodiscard]] std::size_t n_bins() const noexcept { return heights.size(); }
    [[nodiscard]] double bin_width() const { return t_phi / static_cast<double>(heights.size()); }

    [[nodiscard]] double mu_at(double) const { return mu; }

    [[nodiscard]] double phi_at(double tau) const {
        if (!(tau >= 0.0) || tau > t_phi) return 0.0;
        const auto b = std::min(static_cast<std::size_t>(tau / bin_width()), heights.size() - 1);
        return heights[b];
    }

    [[nodiscard]] double mu_compensator(double t) const { return mu * std::max(t, 0.0); }

    [[nodiscard]] double phi_compensator(double elapsed) const {
        if (elapsed <= 0.0) return 0.0;
        const double e = std::min(elapsed, t_phi);
        const double w = bin_width();
        double total = 0.0;
        const auto full = static_cast<std::size_t>(e / w);
        for (std::size_t b = 0; b < full && b < heights.size(); ++b) total += heights[b] * w;
        if (full < heights.size()) total += heights[full] * (e - static_cast<double>(full) * w);
        return total;
    }

    [[nodiscard]] double phi_window_integral() const { return phi_compensator(t_phi); }
};

struct MisdFitResult {
    MisdModel model;
    std::vector<double> q_trace; // EM surrogate after each M-step
    double max_row_sum_error = 0.0;
};

inline MisdFitResult fit_misd(const EventSequence& events, double t_phi, int n_bins, int iters,
                              bool track_q = false) {
    events.validate();
    if (events.empty()) throw std::invalid_argument("fit_misd: at least one event required");
    if (n_bins < 1) throw std::invalid_argument("fit_misd: n_bins must be at least 1");
    if (!(t_phi > 0.0)) throw std::invalid_argument("fit_misd: t_phi must be positive");
    if (iters < 0) throw std::invalid_argument("fit_misd: negative iteration count");

    const double n = static_cast<double>(events.size());
    const double width = t_phi / n_bins;
    MisdModel model;
    model.t_horizon = events.t_end;
    model.t_phi = t_phi;

    BranchingMatrix p = BranchingMatrix::uniform_init(events, t_phi);
    MisdFitResult out;
    const auto m_step = [&] {
        model.mu = self_weights(p).sum() / events.t_end;
        model.heights.assign(static_cast<std::size_t>(n_bins), 0.0);
        for (std::size_t i = 0; i < p.rows.size(); ++i) {
            for (const auto& [j, pv] : p.rows[i].parents) {
                const double tau = events.times[i] - events.times[j];
                const auto b = std::min(static_cast<std::size_t>(tau / width),
                                        model.heights.size() - 1);
                model.heights[b] += pv;
            }
        }
        for (auto& h : model.heights) h /= n * width;
    };

    m_step();
    if (track_q) out.q_trace.push_back(q_lower_bound(model, events, p));
    for (int it = 0; it < iters; ++it) {
        p = update_branching(model, events);
        out.max_row_sum_error = std::max(out.max_row_sum_error, p.row_sum_error());
        m_step();
        if (track_q) out.q_trace.push_back(q_lower_bound(model, events, p));
    }
    out.model = model;
    return out;
}

} // namespace hawkes
