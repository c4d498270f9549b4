#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hawkes/baselines.hpp"
#include "hawkes/emv.hpp"
#include "hawkes/eval.hpp"
#include "hawkes/simulate.hpp"

using namespace hawkes;
using Catch::Approx;

namespace {

// Homogeneous Poisson process as the simplest conforming model.
struct PoissonModel {
    double c = 1.0;
    double t_horizon = 10.0;
    double t_phi = 1.0;
    static constexpr bool full_window_loglik = false;

    [[nodiscard]] double mu_at(double) const { return c; }
    [[nodiscard]] double phi_at(double) const { return 0.0; }
    [[nodiscard]] double mu_compensator(double t) const { return c * std::max(t, 0.0); }
    [[nodiscard]] double phi_compensator(double) const { return 0.0; }
};

EventSequence make_events(std::initializer_list<double> ts, double t_end) {
    EventSequence seq;
    seq.times = ts;
    seq.t_end = t_end;
    return seq;
}

EventSequence random_events(std::mt19937_64& rng, std::size_t n, double t_end) {
    std::uniform_real_distribution<double> u(0.0, t_end);
    std::vector<double> ts(n);
    for (auto& t : ts) t = u(rng);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    EventSequence seq;
    seq.times = std::move(ts);
    seq.t_end = t_end;
    return seq;
}

HawkesModelEstimate random_emv_model(std::mt19937_64& rng, double t_end, double t_phi) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const KernelParams pf{0.3 + 1.2 * u01(rng), std::pow(8.0 / t_end, 2) * (0.5 + u01(rng))};
    const KernelParams pg{0.2 + 0.8 * u01(rng), std::pow(8.0 / t_phi, 2) * (0.5 + u01(rng))};
    Eigen::VectorXd s_f(4);
    Eigen::VectorXd s_g(4);
    for (int i = 0; i < 4; ++i) {
        s_f(i) = pf.theta0 * (0.1 + 1.2 * u01(rng));
        s_g(i) = pg.theta0 * (0.1 + 1.2 * u01(rng));
    }
    HawkesModelEstimate model;
    model.background.emplace(pf, InducingGrid::uniform(4, t_end), s_f);
    model.excitation.emplace(pg, InducingGrid::uniform(4, t_phi), s_g);
    model.t_horizon = t_end;
    model.t_phi = t_phi;
    return model;
}

// Quadrature reference for the compensator under each model's own edge
// convention: the full kernel window per event, or truncated at the horizon.
template <typename M>
double quadrature_compensator(const M& model, const EventSequence& events) {
    double total = integrate([&](double t) { return model.mu_at(t); }, 0.0, events.t_end,
                             1e-9, 128);
    for (const double t : events.times) {
        const double window =
            M::full_window_loglik ? model.t_phi : std::min(model.t_phi, events.t_end - t);
        total += integrate([&](double tau) { return model.phi_at(tau); }, 0.0, window,
                           1e-9, 128);
    }
    return total;
}

template <typename M>
double analytic_compensator(const M& model, const EventSequence& events) {
    double total = model.mu_compensator(events.t_end);
    if constexpr (M::full_window_loglik) {
        total += static_cast<double>(events.size()) * model.phi_compensator(model.t_phi);
    } else {
        for (const double t : events.times) total += model.phi_compensator(events.t_end - t);
    }
    return total;
}

} // namespace

TEST_CASE("poisson log likelihood is analytic", "[eval]") {
    const PoissonModel model{1.7, 12.0, 1.0};
    const EventSequence events = make_events({1.0, 3.5, 7.2, 11.9}, 12.0);
    CHECK(loglik(model, events) ==
          Approx(4.0 * std::log(1.7) - 1.7 * 12.0).margin(1e-12));

    const PoissonModel dead{0.0, 12.0, 1.0};
    CHECK_THROWS_AS(loglik(dead, events), DegenerateIntensity);
}

TEST_CASE("conditional intensity accumulates windowed kernel terms", "[eval]") {
    const PhModel m = PhModel::from_params({0.5, 1.0, 1.0}, 20.0);
    const EventSequence events = make_events({1.0, 2.0, 10.0}, 20.0);
    CHECK(intensity_at(m, events, 0, 1.0) == Approx(0.5));
    CHECK(intensity_at(m, events, 1, 2.0) == Approx(0.5 + std::exp(-1.0)));
    CHECK(intensity_at(m, events, 2, 2.5) ==
          Approx(0.5 + std::exp(-1.5) + std::exp(-0.5)));
    // Far beyond the support both parents have expired.
    CHECK(intensity_at(m, events, 2, 2.0 + m.t_phi + 1.0) == Approx(0.5));
}

TEST_CASE("analytic compensators match quadrature across model families", "[eval]") {
    std::mt19937_64 rng(119);
    const double t_end = 15.0;
    const auto events = random_events(rng, 30, t_end);

    for (int trial = 0; trial < 8; ++trial) {
        const auto emv = random_emv_model(rng, t_end, 3.0);
        const double a = analytic_compensator(emv, events);
        const double q = quadrature_compensator(emv, events);
        CHECK(a == Approx(q).epsilon(1e-5));
    }
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const auto ph = PhModel::from_params(
            {0.3 + u01(rng), 0.2 + 0.5 * u01(rng), 0.5 + 2.0 * u01(rng)}, t_end);
        CHECK(analytic_compensator(ph, events) ==
              Approx(quadrature_compensator(ph, events)).epsilon(1e-5));
    }
    for (int trial = 0; trial < 6; ++trial) {
        MisdModel misd;
        misd.mu = 0.2 + u01(rng);
        misd.heights = {0.5 * u01(rng), 0.3 * u01(rng), 0.2 * u01(rng), 0.1 * u01(rng)};
        misd.t_horizon = t_end;
        misd.t_phi = 3.0;
        CHECK(analytic_compensator(misd, events) ==
              Approx(quadrature_compensator(misd, events)).epsilon(1e-5));
    }
}

TEST_CASE("log likelihood agrees with its from-scratch recomputation", "[eval]") {
    std::mt19937_64 rng(131);
    const double t_end = 15.0;
    const auto events = random_events(rng, 25, t_end);
    const auto model = random_emv_model(rng, t_end, 3.0);

    double ref = -analytic_compensator(model, events);
    for (std::size_t i = 0; i < events.size(); ++i) {
        double lam = model.mu_at(events.times[i]);
        for (std::size_t j = 0; j < i; ++j) {
            const double tau = events.times[i] - events.times[j];
            if (tau <= model.t_phi) lam += model.phi_at(tau);
        }
        ref += std::log(lam);
    }
    CHECK(loglik(model, events) == Approx(ref).margin(1e-9));
}

TEST_CASE("estimation error integrates squared deviations", "[eval]") {
    const auto f = [](double t) { return std::sin(t) + 2.0; };
    const auto g = [](double t) { return std::sin(t) + 1.0; };
    CHECK(est_err(f, f, 0.0, 6.0) == Approx(0.0).margin(1e-10));
    CHECK(est_err(f, g, 0.0, 6.0) == Approx(6.0).epsilon(1e-8));
    CHECK(est_err(g, f, 0.0, 6.0) == Approx(est_err(f, g, 0.0, 6.0)).epsilon(1e-10));
    CHECK_THROWS_AS(est_err(f, g, 2.0, 2.0), std::invalid_argument);
}

TEST_CASE("rescaling a poisson stream returns its raw gaps", "[eval]") {
    const PoissonModel model{1.0, 10.0, 1.0};
    const EventSequence events = make_events({0.5, 1.25, 3.0, 7.75}, 10.0);
    const auto rs = rescale(model, events);
    REQUIRE(rs.tau.size() == 4);
    CHECK(rs.tau[0] == Approx(0.5));
    CHECK(rs.tau[1] == Approx(0.75));
    CHECK(rs.tau[2] == Approx(1.75));
    CHECK(rs.tau[3] == Approx(4.75));
    for (std::size_t i = 0; i < rs.z.size(); ++i) {
        CHECK(rs.z[i] == Approx(1.0 - std::exp(-rs.tau[i])));
        CHECK(rs.z[i] > 0.0);
        CHECK(rs.z[i] < 1.0);
    }
}

TEST_CASE("rescaling a hawkes model uses windowed compensators", "[eval]") {
    const PhModel m = PhModel::from_params({0.5, 0.6, 1.5}, 20.0);
    const EventSequence events = make_events({1.0, 2.0, 15.0}, 20.0);
    const auto rs = rescale(m, events);
    REQUIRE(rs.tau.size() == 3);
    CHECK(rs.tau[0] == Approx(0.5 * 1.0));
    CHECK(rs.tau[1] == Approx(0.5 * 1.0 + m.phi_compensator(1.0)));
    // The last gap accumulates both earlier events' kernel mass.
    CHECK(rs.tau[2] == Approx(0.5 * 13.0 + m.phi_compensator(14.0) + m.phi_compensator(13.0) -
                              m.phi_compensator(1.0)));

    // Total rescaled mass telescopes to the compensator at the last event.
    const double sum = rs.tau[0] + rs.tau[1] + rs.tau[2];
    CHECK(sum == Approx(m.mu_compensator(15.0) + m.phi_compensator(14.0) +
                        m.phi_compensator(13.0)));
}

TEST_CASE("well specified rescaling passes a uniformity test", "[eval]") {
    GroundTruth gt;
    gt.mu_fn = [](double) { return 1.0; };
    gt.phi_fn = [](double) { return 0.0; };
    gt.t_end = 200.0;
    gt.t_phi = 1.0;
    const EventSequence events = thinning_sample(gt, 2718);
    REQUIRE(events.size() > 120);
    const PoissonModel model{1.0, 200.0, 1.0};
    const auto rs = rescale(model, events);
    const double d = ks_statistic_uniform(rs.z);
    CHECK(ks_pvalue(rs.z.size(), d) > 0.01);

    // A misspecified rate inflates the statistic.
    const PoissonModel wrong{3.0, 200.0, 1.0};
    const auto rs_wrong = rescale(wrong, events);
    CHECK(ks_pvalue(rs_wrong.z.size(), ks_statistic_uniform(rs_wrong.z)) < 0.01);
}

TEST_CASE("next event prediction matches the exponential waiting time", "[eval]") {
    const PoissonModel model{2.0, 10.0, 1.0};
    const EventSequence history = make_events({0.7, 2.0}, 10.0);
    const auto pred = predict_next(model, history, 500, 42);
    CHECK(pred.std_error > 0.0);
    CHECK(pred.mean == Approx(2.5).margin(4.0 * pred.std_error));

    const auto again = predict_next(model, history, 500, 42);
    CHECK(pred.mean == again.mean);
    CHECK(pred.std_error == again.std_error);

    const auto more = predict_next(model, history, 2000, 43);
    CHECK(more.std_error < pred.std_error);
    const double ratio = pred.std_error / more.std_error;
    CHECK(ratio > 1.3);
    CHECK(ratio < 3.2);

    CHECK_THROWS_AS(predict_next(model, EventSequence{}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(predict_next(model, history, 0, 1), std::invalid_argument);
}

TEST_CASE("prediction accuracy saturates at extreme tolerance bands", "[eval]") {
    const PoissonModel model{2.0, 10.0, 1.0};
    EventSequence events;
    events.t_end = 10.0;
    for (int i = 1; i <= 10; ++i) events.times.push_back(0.9 * i);

    const auto generous = pre_acc(model, events, 1e9, 0.2, 50, 7);
    REQUIRE(generous.predictions.size() == 8);
    CHECK(generous.pre_acc == 1.0);
    for (bool h : generous.hits) CHECK(h);

    const auto strict = pre_acc(model, events, 0.0, 0.2, 50, 7);
    CHECK(strict.pre_acc == 0.0);

    const auto rerun = pre_acc(model, events, 1e9, 0.2, 50, 7);
    CHECK(rerun.predictions == generous.predictions);

    CHECK_THROWS_AS(pre_acc(model, events, -1.0, 0.2, 50, 7), std::invalid_argument);
    CHECK_THROWS_AS(pre_acc(model, events, 1.0, 0.0, 50, 7), std::invalid_argument);
    CHECK_THROWS_AS(pre_acc(model, events, 1.0, 1.0, 50, 7), std::invalid_argument);
    CHECK_THROWS_AS(pre_acc(model, events, 1.0, 0.2, 0, 7), std::invalid_argument);
}

TEST_CASE("qq rows pair uniform quantiles with sorted values", "[eval]") {
    RescaledSequence rs;
    rs.z = {0.9, 0.1, 0.5, 0.3};
    const auto rows = qq_rows(rs);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].theoretical == Approx(0.125));
    CHECK(rows[1].theoretical == Approx(0.375));
    CHECK(rows[3].theoretical == Approx(0.875));
    CHECK(rows[0].empirical == 0.1);
    CHECK(rows[1].empirical == 0.3);
    CHECK(rows[2].empirical == 0.5);
    CHECK(rows[3].empirical == 0.9);
}
