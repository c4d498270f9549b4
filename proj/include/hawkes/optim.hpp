#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace hawkes {

struct BoxBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    [[nodiscard]] Eigen::VectorXd clamp(const Eigen::VectorXd& x) const {
        return x.cwiseMax(lower).cwiseMin(upper);
    }
};

struct NelderMeadConfig {
    int max_evals = 120;
    double initial_step = 0.25;
    double f_tol = 1e-8;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int evals = 0;
};

// Derivative-free minimization; every trial point is clamped into the box
// before evaluation so the returned point always satisfies the bounds.
template <typename F>
NelderMeadResult nelder_mead(F&& objective, const Eigen::VectorXd& x0, const BoxBounds& bounds,
                             const NelderMeadConfig& cfg = {}) {
    const auto dim = x0.size();
    NelderMeadResult result;
    const auto eval = [&](const Eigen::VectorXd& x) {
        ++result.evals;
        return objective(x);
    };

    std::vector<std::pair<double, Eigen::VectorXd>> simplex;
    simplex.reserve(static_cast<std::size_t>(dim) + 1);
    Eigen::VectorXd base = bounds.clamp(x0);
    simplex.emplace_back(eval(base), base);
    for (Eigen::Index i = 0; i < dim; ++i) {
        Eigen::VectorXd v = base;
        v(i) += cfg.initial_step;
        v = bounds.clamp(v);
        if ((v - base).norm() < 1e-12) v(i) = base(i) - cfg.initial_step;
        v = bounds.clamp(v);
        simplex.emplace_back(eval(v), v);
    }
    const auto order = [&] {
        std::sort(simplex.begin(), simplex.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    };
    order();

    while (result.evals < cfg.max_evals) {
        const auto& best = simplex.front();
        const auto& worst = simplex.back();
        if (std::abs(worst.first - best.first) <=
            cfg.f_tol * (1.0 + std::abs(best.first))) {
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i].second;
        centroid /= static_cast<double>(dim);

        const Eigen::VectorXd xr = bounds.clamp(centroid + (centroid - worst.second));
        const double fr = eval(xr);
        if (fr < best.first) {
            const Eigen::VectorXd xe = bounds.clamp(centroid + 2.0 * (centroid - worst.second));
            const double fe = eval(xe);
            simplex.back() = (fe < fr) ? std::make_pair(fe, xe) : std::make_pair(fr, xr);
        } else if (fr < simplex[simplex.size() - 2].first) {
            simplex.back() = {fr, xr};
        } else {
            const Eigen::VectorXd xc = bounds.clamp(centroid + 0.5 * (worst.second - centroid));
            const double fc = eval(xc);
            if (fc < worst.first) {
                simplex.back() = {fc, xc};
            } else {
                for (std::size_t i = 1; i < simplex.size(); ++i) {
                    simplex[i].second =
                        bounds.clamp(best.second + 0.5 * (simplex[i].second - best.second));
                    simplex[i].first = eval(simplex[i].second);
                }
            }
        }
        order();
    }
    result.x = simplex.front().second;
    result.value = simplex.front().first;
    return result;
}

struct BfgsConfig {
    int max_iters = 200;
    double grad_tol = 1e-8;
};

struct BfgsResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;
    int iters = 0;
    bool converged = false;
};

// Quasi-Newton minimization with an Armijo backtracking line search.
// `f` evaluates the objective and writes its gradient into the second argument.
template <typename F>
BfgsResult bfgs_minimize(F&& f, const Eigen::VectorXd& x0, const BfgsConfig& cfg = {}) {
    const auto dim = x0.size();
    BfgsResult res;
    res.x = x0;
    res.grad.resize(dim);
    res.value = f(res.x, res.grad);
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(dim, dim);

    for (res.iters = 0; res.iters < cfg.max_iters; ++res.iters) {
        if (res.grad.norm() <= cfg.grad_tol * std::max(1.0, std::abs(res.value))) {
            res.converged = true;
            return res;
        }
        Eigen::VectorXd dir = -(h_inv * res.grad);
        double slope = res.grad.dot(dir);
        if (!(slope < 0.0)) { // reset on a non-descent direction
            h_inv.setIdentity();
            dir = -res.grad;
            slope = res.grad.dot(dir);
        }
        double step = 1.0;
        Eigen::VectorXd x_new;
        Eigen::VectorXd g_new(dim);
        double f_new = res.value;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = res.x + step * dir;
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.converged = res.grad.norm() <=
                            1e-6 * std::max(1.0, std::abs(res.value));
            return res;
        }
        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = g_new - res.grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
            const Eigen::MatrixXd left = eye - rho * s * y.transpose();
            h_inv = left * h_inv * left.transpose() + rho * s * s.transpose();
        }
        res.x = x_new;
        res.value = f_new;
        res.grad = g_new;
    }
    res.converged = res.grad.norm() <= cfg.grad_tol * std::max(1.0, std::abs(res.value));
    return res;
}

} // namespace hawkes
