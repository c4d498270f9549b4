#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hawkes/errors.hpp"

namespace hawkes {

// Squared exponential kernel k(x,y) = theta0 * exp(-theta1/2 * (x-y)^2).
// theta0 is the output variance, theta1 the inverse squared lengthscale.
struct KernelParams {
    double theta0{1.0};
    double theta1{1.0};

    KernelParams() = default;
    KernelParams(double theta0_, double theta1_) : theta0(theta0_), theta1(theta1_) {
        validate();
    }

    void validate() const {
        if (!(theta0 > 0.0) || !(theta1 > 0.0)) {
            throw std::invalid_argument("KernelParams: theta0 and theta1 must be positive");
        }
    }
};

// Inducing point locations on [0, domain_length], strictly increasing.
struct InducingGrid {
    std::vector<double> points;
    double domain_length{0.0};

    InducingGrid() = default;
    InducingGrid(std::vector<double> pts, double length)
        : points(std::move(pts)), domain_length(length) {
        validate();
    }

    // Uniformly spaced grid with both endpoints included (midpoint when m == 1).
    static InducingGrid uniform(std::size_t m, double length) {
        if (m == 0) throw std::invalid_argument("InducingGrid: need at least one point");
        std::vector<double> pts(m);
        if (m == 1) {
            pts[0] = 0.5 * length;
        } else {
            for (std::size_t i = 0; i < m; ++i) {
                pts[i] = length * static_cast<double>(i) / static_cast<double>(m - 1);
            }
        }
        return InducingGrid(std::move(pts), length);
    }

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }

    void validate() const {
        if (points.empty()) throw std::invalid_argument("InducingGrid: empty grid");
        if (domain_length < 0.0) throw std::invalid_argument("InducingGrid: negative domain");
        double prev = -1.0;
        for (double z : points) {
            if (z < 0.0 || z > domain_length) {
                throw std::invalid_argument("InducingGrid: point outside [0, L]");
            }
            if (points.size() > 1 && z <= prev) {
                throw std::invalid_argument("InducingGrid: points must be strictly increasing");
            }
            prev = z;
        }
    }
};

inline double kernel_eval(const KernelParams& p, double x, double y) {
    const double d = x - y;
    return p.theta0 * std::exp(-0.5 * p.theta1 * d * d);
}

// Relative jitter added to Gram diagonals for conditioning.
inline double default_jitter(const KernelParams& p) { return 1e-6 * p.theta0; }

// Cross-kernel matrix; when xs and ys are the same set, jitter goes on the diagonal
// and the result is symmetric positive-definite.
inline Eigen::MatrixXd gram_matrix(const KernelParams& p,
                                   const std::vector<double>& xs,
                                   const std::vector<double>& ys,
                                   double jitter = 0.0) {
    if (xs.empty() || ys.empty()) {
        throw std::invalid_argument("gram_matrix: empty input");
    }
    Eigen::MatrixXd k(xs.size(), ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                kernel_eval(p, xs[i], ys[j]);
        }
    }
    const bool same = (&xs == &ys) || xs == ys;
    if (same && jitter > 0.0) {
        k.diagonal().array() += jitter;
    }
    return k;
}

inline Eigen::VectorXd kernel_vector(const KernelParams& p,
                                     const std::vector<double>& zs,
                                     double t) {
    Eigen::VectorXd k(static_cast<Eigen::Index>(zs.size()));
    for (std::size_t i = 0; i < zs.size(); ++i) {
        k(static_cast<Eigen::Index>(i)) = kernel_eval(p, zs[i], t);
    }
    return k;
}

// Psi(z, z') = int_0^U k(z,s) k(s,z') ds in closed form:
//   (theta0^2/2) sqrt(pi/theta1) exp(-theta1 (z-z')^2 / 4)
//     * [erf(sqrt(theta1) (U - zbar)) + erf(sqrt(theta1) zbar)],  zbar = (z + z')/2.
inline double psi_entry(const KernelParams& p, double z, double zp, double upper) {
    const double sq = std::sqrt(p.theta1);
    const double zbar = 0.5 * (z + zp);
    const double d = z - zp;
    const double front = 0.5 * p.theta0 * p.theta0 *
                         std::sqrt(std::numbers::pi / p.theta1) *
                         std::exp(-0.25 * p.theta1 * d * d);
    return front * (std::erf(sq * (upper - zbar)) + std::erf(sq * zbar));
}

// Psi over [0, upper] for all grid pairs; symmetric and entrywise positive for upper > 0.
inline Eigen::MatrixXd psi_matrix_partial(const KernelParams& p,
                                          const std::vector<double>& zs,
                                          double upper) {
    const auto m = static_cast<Eigen::Index>(zs.size());
    Eigen::MatrixXd psi(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = psi_entry(p, zs[static_cast<std::size_t>(i)],
                                       zs[static_cast<std::size_t>(j)], upper);
            psi(i, j) = v;
            psi(j, i) = v;
        }
    }
    return psi;
}

inline Eigen::MatrixXd psi_matrix(const KernelParams& p, const InducingGrid& grid) {
    return psi_matrix_partial(p, grid.points, grid.domain_length);
}

// Cholesky factorization of an SPD matrix, kept for repeated solves,
// log-determinants and explicit inverses.
class SpdSolver {
public:
    explicit SpdSolver(const Eigen::MatrixXd& a) : llt_(a), dim_(a.rows()) {
        if (llt_.info() != Eigen::Success) {
            throw NotPositiveDefinite("SpdSolver: Cholesky factorization failed");
        }
    }

    [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
        return llt_.solve(b);
    }
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        return llt_.solve(b);
    }

    [[nodiscard]] double log_det() const {
        return 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }

    [[nodiscard]] Eigen::MatrixXd inverse() const {
        return llt_.solve(Eigen::MatrixXd::Identity(dim_, dim_));
    }

    [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::Index dim_;
};

inline Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return SpdSolver(a).solve(b);
}

} // namespace hawkes
