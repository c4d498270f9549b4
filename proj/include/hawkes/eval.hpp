#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "hawkes/errors.hpp"
#include "hawkes/event_sequence.hpp"
#include "hawkes/quadrature.hpp"
#include "hawkes/simulate.hpp"
#include "hawkes/stats.hpp"

namespace hawkes {

// Shared evaluator interface: intensity components, their analytic
// compensators, the observation window, and the kernel support. The
// `full_window_loglik` flag states whether the likelihood charges each event
// the full kernel-window compensator (the EM surrogate's edge convention) or
// the exact end-truncated one.
template <typename M>
concept IntensityModel = requires(const M& m, double t) {
    { m.mu_at(t) } -> std::convertible_to<double>;
    { m.phi_at(t) } -> std::convertible_to<double>;
    { m.mu_compensator(t) } -> std::convertible_to<double>;
    { m.phi_compensator(t) } -> std::convertible_to<double>;
    { m.t_horizon } -> std::convertible_to<double>;
    { m.t_phi } -> std::convertible_to<double>;
    { M::full_window_loglik } -> std::convertible_to<bool>;
};

template <IntensityModel M>
double intensity_at(const M& model, const EventSequence& events, std::size_t upto, double t) {
    double lambda = model.mu_at(t);
    const double lo = t - model.t_phi;
    const auto begin = events.times.begin();
    const auto end = begin + static_cast<std::ptrdiff_t>(upto);
    for (auto it = std::lower_bound(begin, end, lo); it != end; ++it) {
        if (*it < t) lambda += model.phi_at(t - *it);
    }
    return lambda;
}

// Log likelihood: sum_i log lambda(t_i) minus the compensator.
template <IntensityModel M>
double loglik(const M& model, const EventSequence& events) {
    events.validate();
    double total = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const double lam = intensity_at(model, events, i, events.times[i]);
        if (!(lam > 0.0)) {
            throw DegenerateIntensity("loglik: vanishing intensity at an observed event");
        }
        total += std::log(lam);
    }
    total -= model.mu_compensator(events.t_end);
    if constexpr (M::full_window_loglik) {
        total -= static_cast<double>(events.size()) * model.phi_compensator(model.t_phi);
    } else {
        for (const double t : events.times) total -= model.phi_compensator(events.t_end - t);
    }
    return total;
}

// Integrated squared error between two curves.
template <typename F, typename G>
double est_err(const F& estimate, const G& truth, double a, double b) {
    if (!(a < b)) throw std::invalid_argument("est_err: empty domain");
    return integrate([&](double t) {
        const double d = estimate(t) - truth(t);
        return d * d;
    }, a, b, 1e-6, 256);
}

struct RescaledSequence {
    std::vector<double> tau;
    std::vector<double> z;
};

// Time-rescaling transform: tau_i = Lambda(t_i) - Lambda(t_{i-1}) with
// Lambda(t) = mu_compensator(t) + sum_{t_j < t} phi_compensator(t - t_j),
// then z_i = 1 - exp(-tau_i).
template <IntensityModel M>
RescaledSequence rescale(const M& model, const EventSequence& events) {
    events.validate();
    RescaledSequence out;
    out.tau.reserve(events.size());
    out.z.reserve(events.size());
    const double full = model.phi_compensator(model.t_phi);
    double prev = 0.0;
    std::size_t expired = 0; // events older than the kernel window
    for (std::size_t i = 0; i < events.size(); ++i) {
        const double ti = events.times[i];
        while (expired < i && ti - events.times[expired] > model.t_phi) ++expired;
        double lam_int = model.mu_compensator(ti) + static_cast<double>(expired) * full;
        for (std::size_t j = expired; j < i; ++j) {
            lam_int += model.phi_compensator(ti - events.times[j]);
        }
        const double tau = lam_int - prev;
        prev = lam_int;
        out.tau.push_back(tau);
        double z = -std::expm1(-tau);
        z = std::clamp(z, std::numeric_limits<double>::min(),
                       std::nextafter(1.0, 0.0));
        out.z.push_back(z);
    }
    return out;
}

struct NextEventPrediction {
    double mean = 0.0;
    double std_error = 0.0;
};

namespace detail {

template <IntensityModel M>
GroundTruth as_ground_truth(const M& model) {
    GroundTruth gt;
    gt.mu_fn = [&model](double t) { return model.mu_at(t); };
    gt.phi_fn = [&model](double tau) { return model.phi_at(tau); };
    gt.t_end = std::max(model.t_horizon, 1.0);
    gt.t_phi = model.t_phi;
    return gt;
}

} // namespace detail

// Monte Carlo estimate of the expected next event time after the history's
// last event, sampling arrivals by thinning under the model's conditional
// intensity. The cap is a loop guard only; with any nonvanishing baseline it
// is effectively never reached.
template <IntensityModel M>
NextEventPrediction predict_next(const M& model, const EventSequence& history, int n_mc,
                                 std::uint64_t seed) {
    if (history.empty()) throw std::invalid_argument("predict_next: empty history");
    if (n_mc < 1) throw std::invalid_argument("predict_next: n_mc must be positive");
    const ThinningSampler sampler(detail::as_ground_truth(model), false);
    const double start = history.times.back();
    const double cap = start + 1e5 * std::max(1.0, model.t_phi);
    std::mt19937_64 rng(seed);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int k = 0; k < n_mc; ++k) {
        const double t = sampler.sample_next(history.times, start, rng, cap);
        sum += t;
        sum_sq += t * t;
    }
    NextEventPrediction out;
    out.mean = sum / n_mc;
    const double var = std::max(sum_sq / n_mc - out.mean * out.mean, 0.0);
    out.std_error = std::sqrt(var / n_mc);
    return out;
}

struct PredictionReport {
    std::vector<double> predictions;
    std::vector<bool> hits;
    double pre_acc = 0.0;
    double epsilon = 0.0;
    int n_mc = 0;
};

// Sequential one-step-ahead prediction over the tail of a sequence: after the
// warmup prefix, each event time is predicted from the preceding true events,
// scored as a hit when within epsilon, and then the true time is folded into
// the history before the next prediction.
template <IntensityModel M>
PredictionReport pre_acc(const M& model, const EventSequence& events, double epsilon,
                         double warmup_frac, int n_mc, std::uint64_t seed) {
    events.validate();
    if (!(warmup_frac > 0.0) || !(warmup_frac < 1.0)) {
        throw std::invalid_argument("pre_acc: warmup_frac must lie in (0,1)");
    }
    if (!(epsilon >= 0.0)) throw std::invalid_argument("pre_acc: negative epsilon");
    if (n_mc < 1) throw std::invalid_argument("pre_acc: n_mc must be positive");
    const auto n = events.size();
    const auto warm = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(warmup_frac * static_cast<double>(n))));
    PredictionReport report;
    report.epsilon = epsilon;
    report.n_mc = n_mc;
    if (warm >= n) return report;

    const ThinningSampler sampler(detail::as_ground_truth(model), false);
    const double cap_scale = 1e5 * std::max(1.0, model.t_phi);
    std::mt19937_64 rng(seed);
    std::vector<double> history(events.times.begin(),
                                events.times.begin() + static_cast<std::ptrdiff_t>(warm));
    std::size_t hit_count = 0;
    for (std::size_t i = warm; i < n; ++i) {
        const double start = history.back();
        double sum = 0.0;
        for (int k = 0; k < n_mc; ++k) {
            sum += sampler.sample_next(history, start, rng, start + cap_scale);
        }
        const double pred = sum / n_mc;
        const bool hit = std::abs(pred - events.times[i]) <= epsilon;
        report.predictions.push_back(pred);
        report.hits.push_back(hit);
        if (hit) ++hit_count;
        history.push_back(events.times[i]);
    }
    report.pre_acc = report.hits.empty()
                         ? 0.0
                         : static_cast<double>(hit_count) / static_cast<double>(report.hits.size());
    return report;
}

// Rows for a Q-Q plot of the rescaled z values against the uniform law:
// (theoretical quantile (i - 1/2)/n, i-th order statistic of z).
struct QqRow {
    double theoretical = 0.0;
    double empirical = 0.0;
};

inline std::vector<QqRow> qq_rows(const RescaledSequence& rescaled) {
    std::vector<double> z = rescaled.z;
    std::sort(z.begin(), z.end());
    std::vector<QqRow> rows(z.size());
    const double n = static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        rows[i] = {(static_cast<double>(i) + 0.5) / n, z[i]};
    }
    return rows;
}

} // namespace hawkes
