#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "hawkes/kernels.hpp"
#include "hawkes/stats.hpp"

namespace hawkes {

inline constexpr double kVarianceFloor = 1e-12;

// Variational distribution N(m, S) over the inducing values of one GP
// component. Fitting keeps the mean at zero and S diagonal; `full_cov` is a
// testing path for the symmetric-matrix derivatives.
struct VariationalPosterior {
    InducingGrid grid;
    Eigen::VectorXd mean;
    Eigen::VectorXd cov_diag;
    std::optional<Eigen::MatrixXd> full_cov;

    static VariationalPosterior prior_diag(const InducingGrid& grid, const KernelParams& p) {
        VariationalPosterior q;
        q.grid = grid;
        const auto m = static_cast<Eigen::Index>(grid.size());
        q.mean = Eigen::VectorXd::Zero(m);
        q.cov_diag = Eigen::VectorXd::Constant(m, p.theta0 + default_jitter(p));
        return q;
    }

    void validate() const {
        const auto m = static_cast<Eigen::Index>(grid.size());
        if (mean.size() != m || cov_diag.size() != m) {
            throw std::invalid_argument("VariationalPosterior: size mismatch with grid");
        }
        if ((cov_diag.array() <= 0.0).any()) {
            throw std::invalid_argument("VariationalPosterior: cov_diag must be positive");
        }
        if (full_cov && (full_cov->rows() != m || full_cov->cols() != m)) {
            throw std::invalid_argument("VariationalPosterior: full_cov size mismatch");
        }
    }
};

// Marginal moments of q(f) at arbitrary inputs:
//   mean(t)  = k_tz K^{-1} m
//   var(t)   = theta0 - k_tz K^{-1} k_zt + k_tz K^{-1} S K^{-1} k_zt
// The variance is floored so downstream logs stay finite.
class PosteriorMoments {
public:
    PosteriorMoments(const VariationalPosterior& q, const KernelParams& params)
        : params_(params),
          points_(q.grid.points),
          domain_(q.grid.domain_length),
          solver_(gram_matrix(params, q.grid.points, q.grid.points, default_jitter(params))),
          mean_(q.mean),
          kinv_mean_(solver_.solve(q.mean)),
          cov_diag_(q.cov_diag),
          full_cov_(q.full_cov) {}

    [[nodiscard]] double mean_at(double t) const {
        return kernel_vector(params_, points_, t).dot(kinv_mean_);
    }

    [[nodiscard]] double var_at(double t) const {
        const Eigen::VectorXd k = kernel_vector(params_, points_, t);
        const Eigen::VectorXd w = solver_.solve(k);
        double v = params_.theta0 - k.dot(w) + quad_form(w);
        return std::max(v, kVarianceFloor);
    }

    // E[f^2(t)] = mean^2 + var.
    [[nodiscard]] double second_moment_at(double t) const {
        const double m = mean_at(t);
        return m * m + var_at(t);
    }

    // int_0^upper (mean^2 + var) dt via the Psi identity with a partial upper limit.
    [[nodiscard]] double integral_to(double upper) const {
        if (!(upper > 0.0)) return 0.0;
        const Eigen::MatrixXd psi = psi_matrix_partial(params_, points_, upper);
        const Eigen::MatrixXd b = solver_.solve(psi); // K^{-1} Psi
        const Eigen::MatrixXd c =
            solver_.solve(Eigen::MatrixXd(b.transpose())); // K^{-1} Psi K^{-1}
        double total = params_.theta0 * upper - b.trace();
        if (full_cov_) {
            total += (full_cov_->array() * c.array()).sum();
        } else {
            total += (cov_diag_.array() * c.diagonal().array()).sum();
        }
        total += mean_.dot(c * mean_);
        return total;
    }

    [[nodiscard]] const KernelParams& params() const noexcept { return params_; }
    [[nodiscard]] double domain_length() const noexcept { return domain_; }

private:
    [[nodiscard]] double quad_form(const Eigen::VectorXd& w) const {
        if (full_cov_) return w.dot(*full_cov_ * w);
        return (w.array().square() * cov_diag_.array()).sum();
    }

    KernelParams params_;
    std::vector<double> points_;
    double domain_;
    SpdSolver solver_;
    Eigen::VectorXd mean_;
    Eigen::VectorXd kinv_mean_;
    Eigen::VectorXd cov_diag_;
    std::optional<Eigen::MatrixXd> full_cov_;
};

inline PosteriorMoments posterior_moments(const VariationalPosterior& q,
                                          const KernelParams& params) {
    q.validate();
    return PosteriorMoments(q, params);
}

// KL(N(m,S) || N(0,K)) = 1/2 [Tr(K^{-1}S) + log|K| - log|S| - M + m^T K^{-1} m].
inline double kl_to_prior(const VariationalPosterior& q, const Eigen::MatrixXd& k_zz) {
    q.validate();
    const SpdSolver solver(k_zz);
    const auto m = static_cast<Eigen::Index>(q.grid.size());
    double trace_term = 0.0;
    double log_det_s = 0.0;
    if (q.full_cov) {
        trace_term = solver.solve(*q.full_cov).trace();
        log_det_s = SpdSolver(*q.full_cov).log_det();
    } else {
        trace_term = (solver.inverse().diagonal().array() * q.cov_diag.array()).sum();
        log_det_s = q.cov_diag.array().log().sum();
    }
    const double quad = q.mean.dot(solver.solve(q.mean));
    const double kl = 0.5 * (trace_term + solver.log_det() - log_det_s -
                             static_cast<double>(m) + quad);
    return std::max(kl, 0.0);
}

// int_0^L (E^2[f] + Var[f]) dt in closed form:
//   m^T K^{-1} Psi K^{-1} m + theta0 L - Tr(K^{-1} Psi) + Tr(K^{-1} S K^{-1} Psi).
inline double expected_sq_integral(const VariationalPosterior& q, const KernelParams& params,
                                   const Eigen::MatrixXd& psi) {
    q.validate();
    const SpdSolver solver(
        gram_matrix(params, q.grid.points, q.grid.points, default_jitter(params)));
    const Eigen::MatrixXd b = solver.solve(psi);
    const Eigen::MatrixXd c = solver.solve(Eigen::MatrixXd(b.transpose()));
    double total = params.theta0 * q.grid.domain_length - b.trace();
    if (q.full_cov) {
        total += (q.full_cov->array() * c.array()).sum();
    } else {
        total += (q.cov_diag.array() * c.diagonal().array()).sum();
    }
    total += q.mean.dot(c * q.mean);
    return total;
}

// E[log X^2] for X ~ N(0, var): log(var/2) - gamma_E.
inline double expected_log_square(double var) {
    const double v = std::max(var, kVarianceFloor);
    return std::log(0.5 * v) - std::numbers::egamma;
}

namespace detail {

// E[log X^2] for X ~ N(mean, var) by Gauss-Hermite quadrature. Testing path
// only; the zero-mean fitting path uses the closed form above. Nodes are
// consumed in symmetric pairs so the result is exactly even in `mean`.
inline double expected_log_square_general(double mean, double var,
                                          const GaussHermiteRule& rule) {
    const double sigma = std::sqrt(std::max(var, kVarianceFloor));
    const double scale = std::sqrt(2.0) * sigma;
    const auto n = rule.nodes.size();
    double acc = 0.0;
    const auto term = [&](Eigen::Index i) {
        const double x = mean + scale * rule.nodes(i);
        const double x2 = std::max(x * x, 1e-300);
        return rule.weights(i) * std::log(x2);
    };
    for (Eigen::Index i = 0, j = n - 1; i < j; ++i, --j) {
        acc += term(i) + term(j);
    }
    if (n % 2 == 1) acc += term(n / 2);
    return acc / std::sqrt(std::numbers::pi);
}

} // namespace detail

} // namespace hawkes
