#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "hawkes/errors.hpp"

namespace hawkes {

// Levinson recursion for symmetric positive-definite Toeplitz systems.
// Optional fast path for K_zz on uniform inducing grids; the dense Cholesky
// route stays the default at the M used here.
inline Eigen::VectorXd toeplitz_solve(const Eigen::VectorXd& first_row,
                                      const Eigen::VectorXd& rhs) {
    const Eigen::Index n = first_row.size();
    if (rhs.size() != n) {
        throw std::invalid_argument("toeplitz_solve: size mismatch");
    }
    const double r0 = first_row(0);
    if (!(r0 > 0.0)) {
        throw NotPositiveDefinite("toeplitz_solve: nonpositive diagonal");
    }
    Eigen::VectorXd x(n);
    x(0) = rhs(0) / r0;
    if (n == 1) return x;

    // Normalized so the diagonal is 1.
    const Eigen::VectorXd r = first_row.segment(1, n - 1) / r0;
    const Eigen::VectorXd b = rhs / r0;

    Eigen::VectorXd y(n - 1);
    y(0) = -r(0);
    x(0) = b(0);
    double beta = 1.0;
    double alpha = -r(0);

    for (Eigen::Index k = 1; k < n; ++k) {
        beta = (1.0 - alpha * alpha) * beta;
        if (!(beta > 0.0)) {
            throw NotPositiveDefinite("toeplitz_solve: lost positive definiteness");
        }
        double dot = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) dot += r(i) * x(k - 1 - i);
        const double mu = (b(k) - dot) / beta;
        for (Eigen::Index i = 0; i < k; ++i) x(i) += mu * y(k - 1 - i);
        x(k) = mu;

        if (k < n - 1) {
            double rdot = 0.0;
            for (Eigen::Index i = 0; i < k; ++i) rdot += r(i) * y(k - 1 - i);
            alpha = -(r(k) + rdot) / beta;
            for (Eigen::Index i = 0, j = k - 1; i < j; ++i, --j) {
                const double yi = y(i) + alpha * y(j);
                y(j) += alpha * y(i);
                y(i) = yi;
            }
            if ((k & 1) != 0) y(k / 2) += alpha * y(k / 2);
            y(k) = alpha;
        }
    }
    return x;
}

inline Eigen::MatrixXd toeplitz_solve(const Eigen::VectorXd& first_row,
                                      const Eigen::MatrixXd& rhs) {
    Eigen::MatrixXd x(rhs.rows(), rhs.cols());
    for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
        x.col(c) = toeplitz_solve(first_row, Eigen::VectorXd(rhs.col(c)));
    }
    return x;
}

} // namespace hawkes
