#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "hawkes/baselines.hpp"
#include "hawkes/simulate.hpp"

using namespace hawkes;
using Catch::Approx;

namespace {

EventSequence case_one_events(std::uint64_t seed, double t_end = 100.0) {
    GroundTruth gt = synthetic_case(1);
    gt.t_end = t_end;
    return thinning_sample(gt, seed);
}

} // namespace

TEST_CASE("exponential kernel model evaluators", "[baselines]") {
    const PhModel m = PhModel::from_params({0.5, 0.8, 2.0}, 100.0);
    CHECK(m.t_phi == Approx(32.3 / 2.0));
    CHECK(m.mu_at(3.0) == 0.5);
    CHECK(m.phi_at(1.0) == Approx(0.8 * std::exp(-2.0)));
    CHECK(m.phi_at(-0.1) == 0.0);
    CHECK(m.phi_at(m.t_phi + 1.0) == 0.0);
    CHECK(m.mu_compensator(10.0) == Approx(5.0));
    CHECK(m.phi_compensator(1.0) == Approx(0.4 * (1.0 - std::exp(-2.0))));
    CHECK(m.phi_window_integral() == Approx(0.4).epsilon(1e-10));
}

TEST_CASE("exponential likelihood gradient matches finite differences", "[baselines]") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    EventSequence events;
    events.t_end = 20.0;
    {
        double t = 0.0;
        while (true) {
            t += 0.2 + 1.2 * u01(rng);
            if (t >= 20.0) break;
            events.times.push_back(t);
        }
    }
    REQUIRE(events.size() >= 10);

    for (int trial = 0; trial < 6; ++trial) {
        const ParametricHawkesParams p{0.3 + u01(rng), 0.2 + 0.6 * u01(rng),
                                       0.5 + 2.0 * u01(rng)};
        Eigen::Vector3d grad;
        const double base = ph_loglik_grad(p, events, &grad);
        CHECK(std::isfinite(base));
        const auto value = [&](const ParametricHawkesParams& q) {
            return ph_loglik_grad(q, events, nullptr);
        };
        const double eps = 1e-6;
        ParametricHawkesParams hi = p;
        ParametricHawkesParams lo = p;
        hi.mu += eps;
        lo.mu -= eps;
        const double d_mu = (value(hi) - value(lo)) / (2.0 * eps);
        hi = lo = p;
        hi.alpha += eps;
        lo.alpha -= eps;
        const double d_alpha = (value(hi) - value(lo)) / (2.0 * eps);
        hi = lo = p;
        hi.beta += eps;
        lo.beta -= eps;
        const double d_beta = (value(hi) - value(lo)) / (2.0 * eps);
        CHECK(std::abs(grad(0) - d_mu) <= 1e-5 * std::max(1.0, std::abs(grad(0))));
        CHECK(std::abs(grad(1) - d_alpha) <= 1e-5 * std::max(1.0, std::abs(grad(1))));
        CHECK(std::abs(grad(2) - d_beta) <= 1e-5 * std::max(1.0, std::abs(grad(2))));
    }
}

TEST_CASE("parametric fit degenerates gracefully on poisson data", "[baselines]") {
    GroundTruth gt;
    gt.mu_fn = [](double) { return 1.0; };
    gt.phi_fn = [](double) { return 0.0; };
    gt.t_end = 100.0;
    gt.t_phi = 6.0;
    const EventSequence events = thinning_sample(gt, 31);
    const double rate = static_cast<double>(events.size()) / events.t_end;

    const ParametricHawkesParams p = fit_parametric(events);
    CHECK(p.alpha / p.beta < 0.15);
    CHECK(p.mu == Approx(rate).epsilon(0.2));
    CHECK(p.alpha >= 0.0);
}

TEST_CASE("parametric fit beats the generating parameters in sample", "[baselines]") {
    const EventSequence events = case_one_events(77);
    const ParametricHawkesParams fitted = fit_parametric(events);
    const double at_fit = ph_loglik_grad(fitted, events, nullptr);
    const double at_truth = ph_loglik_grad({1.0, 1.0, 2.0}, events, nullptr);
    CHECK(at_fit >= at_truth - 1e-6);
    CHECK(fitted.alpha / fitted.beta < 1.0);
}

TEST_CASE("parametric fit recovers the constant baseline over seeds", "[baselines]") {
    double acc = 0.0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
        const auto events = case_one_events(500 + static_cast<std::uint64_t>(s));
        acc += fit_parametric(events).mu;
    }
    const double mean_mu = acc / seeds;
    CHECK(mean_mu > 0.8);
    CHECK(mean_mu < 1.2);
}

TEST_CASE("parametric fit input validation", "[baselines]") {
    EventSequence tiny;
    tiny.t_end = 10.0;
    tiny.times = {1.0};
    CHECK_THROWS_AS(fit_parametric(tiny), std::invalid_argument);
}

TEST_CASE("histogram kernel evaluators", "[baselines]") {
    MisdModel m;
    m.mu = 0.4;
    m.heights = {1.0, 0.5, 0.25};
    m.t_horizon = 50.0;
    m.t_phi = 6.0;
    CHECK(m.bin_width() == Approx(2.0));
    CHECK(m.phi_at(0.0) == 1.0);
    CHECK(m.phi_at(1.99) == 1.0);
    CHECK(m.phi_at(2.0) == 0.5);
    CHECK(m.phi_at(5.0) == 0.25);
    CHECK(m.phi_at(6.0) == 0.25); // boundary lag stays in the last bin
    CHECK(m.phi_at(6.01) == 0.0);
    CHECK(m.phi_compensator(3.0) == Approx(2.0 + 0.5));
    CHECK(m.phi_compensator(100.0) == Approx(3.5));
    CHECK(m.phi_window_integral() == Approx(3.5));
    CHECK(m.mu_compensator(10.0) == Approx(4.0));
}

TEST_CASE("misd single event collapses to a pure background rate", "[baselines]") {
    EventSequence events;
    events.t_end = 25.0;
    events.times = {4.0};
    const auto out = fit_misd(events, 6.0, 5, 10, true);
    CHECK(out.model.mu == Approx(1.0 / 25.0));
    for (double h : out.model.heights) CHECK(h == 0.0);
    CHECK(out.max_row_sum_error <= 1e-12);
    REQUIRE(out.q_trace.size() == 11);
}

TEST_CASE("misd surrogate is monotone across em iterations", "[baselines]") {
    const EventSequence events = case_one_events(301, 40.0);
    REQUIRE(events.size() > 30);
    const auto out = fit_misd(events, 6.0, 10, 25, true);
    REQUIRE(out.q_trace.size() == 26);
    for (std::size_t k = 1; k < out.q_trace.size(); ++k) {
        CHECK(out.q_trace[k] >= out.q_trace[k - 1] - 1e-9);
    }
    CHECK(out.max_row_sum_error <= 1e-12);
    CHECK(out.model.mu > 0.0);
}

TEST_CASE("misd reproduces the decaying kernel shape", "[baselines]") {
    std::vector<double> mean_heights(10, 0.0);
    const int seeds = 4;
    for (int s = 0; s < seeds; ++s) {
        const auto events = case_one_events(900 + static_cast<std::uint64_t>(s));
        const auto out = fit_misd(events, 6.0, 10, 30);
        for (std::size_t b = 0; b < 10; ++b) mean_heights[b] += out.model.heights[b] / seeds;
    }
    for (std::size_t b = 0; b + 1 < 5; ++b) {
        CHECK(mean_heights[b] > mean_heights[b + 1]);
    }
    // The first bin tracks the early exponential mass (average of e^{-2 tau}).
    CHECK(mean_heights[0] > 0.3);
    CHECK(mean_heights[0] < 1.2);
}

TEST_CASE("misd input validation", "[baselines]") {
    EventSequence events;
    events.t_end = 10.0;
    events.times = {1.0, 2.0};
    CHECK_THROWS_AS(fit_misd(events, 0.0, 5, 3), std::invalid_argument);
    CHECK_THROWS_AS(fit_misd(events, 6.0, 0, 3), std::invalid_argument);
    CHECK_THROWS_AS(fit_misd(events, 6.0, 5, -1), std::invalid_argument);
    EventSequence empty;
    empty.t_end = 10.0;
    CHECK_THROWS_AS(fit_misd(empty, 6.0, 5, 3), std::invalid_argument);
}
