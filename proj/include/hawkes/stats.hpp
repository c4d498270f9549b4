#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hawkes {

// One-sample Kolmogorov-Smirnov statistic against the uniform distribution on (0,1).
inline double ks_statistic_uniform(std::vector<double> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("ks_statistic_uniform: empty sample");
    }
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double di = static_cast<double>(i);
        d = std::max(d, std::max((di + 1.0) / n - samples[i], samples[i] - di / n));
    }
    return d;
}

// Exact finite-sample distribution P(D_n < d) via the Marsaglia-Tsang-Wang
// matrix-power algorithm, with their large-deviation shortcut.
inline double ks_cdf(std::size_t n, double d) {
    if (d <= 0.0) return 0.0;
    if (d >= 1.0) return 1.0;
    const double nd = static_cast<double>(n);
    const double s = d * d * nd;
    if (s > 7.24 || (s > 3.76 && n > 99)) {
        return 1.0 - 2.0 * std::exp(-(2.000071 + 0.331 / std::sqrt(nd) + 1.409 / nd) * s);
    }
    const auto k = static_cast<Eigen::Index>(std::ceil(nd * d));
    const double h = static_cast<double>(k) - nd * d;
    const Eigen::Index m = 2 * k - 1;

    Eigen::MatrixXd big_h = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i - j + 1 >= 0) big_h(i, j) = 1.0;
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        big_h(i, 0) -= std::pow(h, static_cast<double>(i + 1));
        big_h(m - 1, i) -= std::pow(h, static_cast<double>(m - i));
    }
    big_h(m - 1, 0) += (2.0 * h - 1.0 > 0.0) ? std::pow(2.0 * h - 1.0, static_cast<double>(m)) : 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i - j + 1 > 0) {
                double fact = 1.0;
                for (Eigen::Index g = 1; g <= i - j + 1; ++g) fact *= static_cast<double>(g);
                big_h(i, j) /= fact;
            }
        }
    }

    // H^n by binary exponentiation with exponent tracking to dodge overflow.
    int exponent = 0;
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd base = big_h;
    std::size_t power = n;
    const auto rescale = [m](Eigen::MatrixXd& a, int& e) {
        if (a(m / 2, m / 2) > 1e140) {
            a *= 1e-140;
            e += 140;
        }
    };
    int base_exp = 0;
    while (power > 0) {
        if (power & 1U) {
            q = q * base;
            exponent += base_exp;
            rescale(q, exponent);
        }
        power >>= 1U;
        if (power > 0) {
            base = base * base;
            base_exp *= 2;
            rescale(base, base_exp);
        }
    }

    double t = q(k - 1, k - 1);
    for (std::size_t i = 1; i <= n; ++i) {
        t *= static_cast<double>(i) / nd;
        if (t < 1e-140) {
            t *= 1e140;
            exponent -= 140;
        }
    }
    return t * std::pow(10.0, exponent);
}

inline double ks_pvalue(std::size_t n, double d) {
    return std::clamp(1.0 - ks_cdf(n, d), 0.0, 1.0);
}

// Physicists' Gauss-Hermite rule (weight exp(-x^2)) from the Golub-Welsch
// eigen decomposition of the Jacobi matrix.
struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    explicit GaussHermiteRule(int order) {
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
        for (int i = 1; i < order; ++i) {
            const double off = std::sqrt(0.5 * static_cast<double>(i));
            jacobi(i, i - 1) = off;
            jacobi(i - 1, i) = off;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
        nodes = es.eigenvalues();
        weights.resize(order);
        const double sqrt_pi = std::sqrt(std::acos(-1.0));
        for (int i = 0; i < order; ++i) {
            const double v0 = es.eigenvectors()(0, i);
            weights(i) = sqrt_pi * v0 * v0;
        }
        // The rule is mathematically symmetric about zero; enforce it exactly
        // so integrals of even functions are bitwise even in any shift.
        for (int i = 0, j = order - 1; i < j; ++i, --j) {
            const double x = 0.5 * (nodes(j) - nodes(i));
            nodes(j) = x;
            nodes(i) = -x;
            const double w = 0.5 * (weights(i) + weights(j));
            weights(i) = w;
            weights(j) = w;
        }
        if (order % 2 == 1) nodes(order / 2) = 0.0;
    }
};

} // namespace hawkes
