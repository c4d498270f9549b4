#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hawkes/errors.hpp"
#include "hawkes/event_sequence.hpp"
#include "hawkes/quadrature.hpp"

namespace hawkes {

// A generative model: background intensity on [0, t_end] and triggering
// kernel supported on [0, t_phi].
struct GroundTruth {
    std::function<double(double)> mu_fn;
    std::function<double(double)> phi_fn;
    double t_end = 100.0;
    double t_phi = 6.0;
    std::string label;
};

// The four benchmark scenarios (T = 100, T_phi = 6).
inline GroundTruth synthetic_case(int id) {
    GroundTruth gt;
    gt.t_end = 100.0;
    gt.t_phi = 6.0;
    switch (id) {
    case 1:
        gt.mu_fn = [](double) { return 1.0; };
        gt.phi_fn = [](double tau) { return std::exp(-2.0 * tau); };
        gt.label = "case1";
        break;
    case 2:
        gt.mu_fn = [](double t) { return t <= 50.0 ? 1.0 : 2.0; };
        gt.phi_fn = [](double tau) { return std::exp(-2.0 * tau); };
        gt.label = "case2";
        break;
    case 3:
        gt.mu_fn = [](double) { return 1.0; };
        gt.phi_fn = [](double tau) {
            return tau <= std::numbers::pi ? 0.25 * std::sin(tau) : 0.0;
        };
        gt.label = "case3";
        break;
    case 4:
        gt.mu_fn = [](double t) { return std::sin(2.0 * std::numbers::pi * t / 100.0) + 1.0; };
        gt.phi_fn = [](double tau) {
            return 0.3 * (std::sin(2.0 * std::numbers::pi * tau / 3.0) + 1.0) *
                   std::exp(-0.7 * tau);
        };
        gt.label = "case4";
        break;
    default:
        throw std::invalid_argument("synthetic_case: id must be 1..4");
    }
    return gt;
}

// Ogata thinning sampler. The proposal bound over a lookahead window is a
// sampled local maximum of mu plus, for each active past event, a precomputed
// decreasing envelope of phi evaluated at the elapsed time. Both pieces carry
// a safety pad; if the bound is still violated at a candidate, the candidate
// is accepted outright (the acceptance ratio caps at one) and the lookahead
// is halved so later windows are tighter.
class ThinningSampler {
public:
    explicit ThinningSampler(GroundTruth gt, bool check_subcritical = true)
        : gt_(std::move(gt)) {
        if (!(gt_.t_end > 0.0) || !(gt_.t_phi > 0.0)) {
            throw std::invalid_argument("ThinningSampler: window lengths must be positive");
        }
        if (check_subcritical) {
            const double branching = integrate(gt_.phi_fn, 0.0, gt_.t_phi, 1e-8, 64);
            if (branching >= 1.0) {
                throw SupercriticalModel("ThinningSampler: triggering kernel mass " +
                                         std::to_string(branching) + " >= 1");
            }
        }
        build_envelope();
    }

    [[nodiscard]] const GroundTruth& truth() const noexcept { return gt_; }

    [[nodiscard]] EventSequence sample(std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        EventSequence out;
        out.t_end = gt_.t_end;
        std::size_t active_begin = 0; // first past event still within t_phi
        double lookahead = 0.5 * gt_.t_phi;
        double t = 0.0;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        while (t < gt_.t_end) {
            while (active_begin < out.times.size() &&
                   t - out.times[active_begin] > gt_.t_phi) {
                ++active_begin;
            }
            const double bound = window_bound(out.times, active_begin, t, lookahead);
            if (!(bound > 0.0)) {
                t += lookahead;
                continue;
            }
            const double gap = -std::log(1.0 - unif(rng)) / bound;
            if (gap > lookahead) {
                t += lookahead;
                continue;
            }
            t += gap;
            if (t >= gt_.t_end) break;
            const double lambda = intensity(out.times, active_begin, t);
            if (lambda > bound) lookahead = std::max(0.5 * lookahead, 1e-3 * gt_.t_phi);
            if (unif(rng) * bound <= lambda) {
                out.times.push_back(t);
            }
        }
        return out;
    }

    // First event strictly after t_start given a frozen history; returns
    // `horizon_cap` if nothing arrives before it.
    [[nodiscard]] double sample_next(const std::vector<double>& history, double t_start,
                                     std::mt19937_64& rng, double horizon_cap) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double t = t_start;
        std::size_t active_begin = 0;
        double lookahead = 0.5 * gt_.t_phi;
        while (t < horizon_cap) {
            while (active_begin < history.size() && t - history[active_begin] > gt_.t_phi) {
                ++active_begin;
            }
            const double bound = window_bound(history, active_begin, t, lookahead);
            if (!(bound > 0.0)) {
                t += lookahead;
                continue;
            }
            const double gap = -std::log(1.0 - unif(rng)) / bound;
            if (gap > lookahead) {
                t += lookahead;
                continue;
            }
            t += gap;
            if (t >= horizon_cap) break;
            const double lambda = intensity(history, active_begin, t);
            if (lambda > bound) lookahead = std::max(0.5 * lookahead, 1e-3 * gt_.t_phi);
            if (unif(rng) * bound <= lambda) return t;
        }
        return horizon_cap;
    }

private:
    static constexpr int kEnvelopeSize = 4096;
    static constexpr double kPad = 1.05;
    static constexpr int kMuSamples = 33;

    void build_envelope() {
        phi_env_.resize(kEnvelopeSize);
        const double step = gt_.t_phi / (kEnvelopeSize - 1);
        double running = 0.0;
        for (int i = kEnvelopeSize - 1; i >= 0; --i) {
            running = std::max(running, gt_.phi_fn(i * step));
            phi_env_[static_cast<std::size_t>(i)] = running * kPad;
        }
    }

    [[nodiscard]] double phi_remaining_max(double elapsed) const {
        if (elapsed >= gt_.t_phi) return 0.0;
        if (elapsed <= 0.0) return phi_env_.front();
        const double pos = elapsed / gt_.t_phi * (kEnvelopeSize - 1);
        return phi_env_[static_cast<std::size_t>(pos)];
    }

    [[nodiscard]] double mu_local_max(double a, double b) const {
        double best = 0.0;
        for (int i = 0; i < kMuSamples; ++i) {
            const double t = a + (b - a) * i / (kMuSamples - 1);
            best = std::max(best, gt_.mu_fn(std::min(t, gt_.t_end)));
        }
        return best * kPad;
    }

    [[nodiscard]] double window_bound(const std::vector<double>& past, std::size_t active_begin,
                                      double t, double lookahead) const {
        double b = mu_local_max(t, t + lookahead);
        for (std::size_t k = active_begin; k < past.size(); ++k) {
            b += phi_remaining_max(t - past[k]);
        }
        return b;
    }

    [[nodiscard]] double intensity(const std::vector<double>& past, std::size_t active_begin,
                                   double t) const {
        double lambda = gt_.mu_fn(t);
        for (std::size_t k = active_begin; k < past.size(); ++k) {
            const double tau = t - past[k];
            if (tau >= 0.0 && tau <= gt_.t_phi) lambda += gt_.phi_fn(tau);
        }
        return lambda;
    }

    GroundTruth gt_;
    std::vector<double> phi_env_;
};

inline EventSequence thinning_sample(const GroundTruth& gt, std::uint64_t seed) {
    return ThinningSampler(gt).sample(seed);
}

} // namespace hawkes
