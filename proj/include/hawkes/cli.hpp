#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "hawkes/baselines.hpp"
#include "hawkes/emv.hpp"
#include "hawkes/eval.hpp"
#include "hawkes/model_io.hpp"
#include "hawkes/simulate.hpp"

namespace hawkes {

// Exit codes: 0 success, 2 user/input error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 2;
inline constexpr int kExitNumericalError = 3;

template <typename Fn>
int guarded_run(Fn&& fn, std::ostream& err) {
    try {
        fn();
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumericalError;
    }
}

// Worker cap for multi-seed fan-out; HAWKES_EMV_THREADS overrides the
// hardware count when set to a positive integer.
inline std::size_t worker_count(std::size_t jobs) {
    std::size_t cap = std::thread::hardware_concurrency();
    if (cap == 0) cap = 1;
    if (const char* env = std::getenv("HAWKES_EMV_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end && *end == '\0' && parsed > 0) cap = static_cast<std::size_t>(parsed);
    }
    return std::min(cap, std::max<std::size_t>(jobs, 1));
}

template <typename Fn>
void parallel_for(std::size_t jobs, Fn&& fn) {
    const std::size_t workers = worker_count(jobs);
    if (workers <= 1) {
        for (std::size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace detail {

template <typename M>
GroundTruth model_ground_truth(std::shared_ptr<const AnyModel> holder, const M& m,
                               double t_end_override) {
    GroundTruth gt;
    gt.mu_fn = [holder, &m](double t) { return m.mu_at(t); };
    gt.phi_fn = [holder, &m](double tau) { return m.phi_at(tau); };
    gt.t_end = t_end_override > 0.0 ? t_end_override : m.t_horizon;
    gt.t_phi = m.t_phi;
    gt.label = "model";
    return gt;
}

} // namespace detail

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
    int case_id = 0;                 // 1..4, or 0 when spec_file is given
    std::filesystem::path spec_file; // fitted-model JSON used as the generator
    int seeds = 1;
    std::uint64_t base_seed = 1;
    double t_end_override = 0.0;
    std::filesystem::path out_dir = ".";
};

inline int run_simulate(const SimulateOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded_run([&] {
        if (opt.seeds < 0) throw std::invalid_argument("simulate: negative seed count");
        GroundTruth gt;
        json source;
        if (opt.case_id != 0) {
            gt = synthetic_case(opt.case_id);
            if (opt.t_end_override > 0.0) gt.t_end = opt.t_end_override;
            source["case"] = opt.case_id;
        } else if (!opt.spec_file.empty()) {
            auto holder = std::make_shared<const AnyModel>(load_model(opt.spec_file));
            gt = std::visit(
                [&](const auto& m) {
                    return detail::model_ground_truth(holder, m, opt.t_end_override);
                },
                *holder);
            source["spec"] = opt.spec_file.string();
        } else {
            throw std::invalid_argument("simulate: provide --case or --spec");
        }

        std::filesystem::create_directories(opt.out_dir);
        const ThinningSampler sampler(gt);
        std::vector<std::string> files(static_cast<std::size_t>(opt.seeds));
        parallel_for(static_cast<std::size_t>(opt.seeds), [&](std::size_t k) {
            const std::uint64_t seed = opt.base_seed + k;
            const EventSequence seq = sampler.sample(seed);
            const std::string name = "events_" + std::to_string(seed) + ".csv";
            write_events(opt.out_dir / name, seq);
            files[k] = name;
        });

        json manifest;
        manifest["format"] = "hawkes-sim-manifest/v1";
        manifest["source"] = source;
        manifest["t_end"] = gt.t_end;
        manifest["t_phi"] = gt.t_phi;
        manifest["base_seed"] = opt.base_seed;
        manifest["seeds"] = opt.seeds;
        manifest["files"] = files;
        write_json_file(opt.out_dir / "manifest.json", manifest);
        log << "simulate: wrote " << opt.seeds << " sequence(s) to " << opt.out_dir.string()
            << "\n";
    }, err);
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOptions {
    std::filesystem::path data;
    std::string method = "emv"; // emv | emv-const | ph | misd
    int m_f = 8;
    int m_g = 6;
    int iters = 100;
    double t_phi = 6.0;
    double t_end = 100.0;
    int bins = 10;
    int hyper_every = 20;
    int resolution = 500;
    std::filesystem::path out_dir = ".";
};

namespace detail {

template <typename M>
void write_fit_artifacts(const std::filesystem::path& out_dir, const M& model,
                         const FitOptions& opt) {
    save_model(out_dir / "model.json", AnyModel(model));
    write_curve(out_dir / "mu_curve.csv", "t", "mu",
                [&](double t) { return model.mu_at(t); }, 0.0, opt.t_end, opt.resolution);
    write_curve(out_dir / "phi_curve.csv", "tau", "phi",
                [&](double tau) { return model.phi_at(tau); }, 0.0, opt.t_phi, opt.resolution);
}

inline void log_elbo_trace(std::ostream& log, const FitDiagnostics& diag) {
    for (std::size_t i = 0; i < diag.elbo_phi_trace.size(); ++i) {
        log << "iter " << (i + 1);
        if (i < diag.elbo_mu_trace.size()) log << " elbo_mu " << diag.elbo_mu_trace[i];
        log << " elbo_phi " << diag.elbo_phi_trace[i] << "\n";
    }
}

} // namespace detail

inline int run_fit(const FitOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded_run([&] {
        const EventSequence events = read_events(opt.data, opt.t_end);
        if (events.empty()) throw std::invalid_argument("fit: no events in " + opt.data.string());
        std::filesystem::create_directories(opt.out_dir);

        if (opt.method == "emv" || opt.method == "emv-const") {
            FitConfig cfg;
            cfg.m_f = opt.m_f;
            cfg.m_g = opt.m_g;
            cfg.t_phi = opt.t_phi;
            cfg.max_em_iters = opt.iters;
            cfg.hyper_every = opt.hyper_every;
            FitDiagnostics progress;
            FitResult result;
            try {
                result = opt.method == "emv" ? fit(events, cfg, &progress)
                                             : fit_const_mu(events, cfg, &progress);
            } catch (const std::exception& e) {
                json partial;
                partial["error"] = e.what();
                partial["iterations"] = progress.iterations;
                partial["elbo_mu_trace"] = progress.elbo_mu_trace;
                partial["elbo_phi_trace"] = progress.elbo_phi_trace;
                write_json_file(opt.out_dir / "partial_state.json", partial);
                throw;
            }
            detail::log_elbo_trace(log, result.diagnostics);
            detail::write_fit_artifacts(opt.out_dir, result.model, opt);
            write_elbo_trace(opt.out_dir / "elbo_trace.csv", result.diagnostics);
            json diag;
            diag["iterations"] = result.diagnostics.iterations;
            diag["converged"] = result.diagnostics.converged;
            diag["max_row_sum_error"] = result.diagnostics.max_row_sum_error;
            diag["min_solve_improvement"] = result.diagnostics.min_solve_improvement;
            write_json_file(opt.out_dir / "diagnostics.json", diag);
        } else if (opt.method == "ph") {
            const PhModel model = fit_ph(events);
            detail::write_fit_artifacts(opt.out_dir, model, opt);
            json diag;
            diag["loglik"] = loglik(model, events);
            write_json_file(opt.out_dir / "diagnostics.json", diag);
        } else if (opt.method == "misd") {
            const MisdFitResult res = fit_misd(events, opt.t_phi, opt.bins, opt.iters, true);
            detail::write_fit_artifacts(opt.out_dir, res.model, opt);
            json diag;
            diag["q_trace"] = res.q_trace;
            diag["max_row_sum_error"] = res.max_row_sum_error;
            write_json_file(opt.out_dir / "diagnostics.json", diag);
        } else {
            throw std::invalid_argument("fit: unknown method '" + opt.method + "'");
        }
        log << "fit: wrote model to " << (opt.out_dir / "model.json").string() << "\n";
    }, err);
}

// ---------------------------------------------------------------------------
// evaluate / predict / qq
// ---------------------------------------------------------------------------

struct EvaluateOptions {
    std::filesystem::path model;
    std::filesystem::path data;
    std::vector<std::string> metrics{"loglik"};
    int case_id = 0; // ground truth for est_err
    double epsilon = 0.0;
    double warmup_frac = 0.17;
    int n_mc = 500;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = ".";
};

inline int run_evaluate(const EvaluateOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded_run([&] {
        const AnyModel any = load_model(opt.model);
        std::filesystem::create_directories(opt.out_dir);
        std::visit([&](const auto& model) {
            const EventSequence events = read_events(opt.data, model.t_horizon);
            events.validate(); // exit 2 when data falls outside the model window
            json metrics;
            for (const std::string& name : opt.metrics) {
                if (name == "loglik") {
                    metrics["loglik"] = loglik(model, events);
                } else if (name == "est_err") {
                    if (opt.case_id < 1 || opt.case_id > 4) {
                        throw std::invalid_argument(
                            "evaluate: est_err needs --case to define the ground truth");
                    }
                    const GroundTruth gt = synthetic_case(opt.case_id);
                    metrics["est_err_mu"] = est_err([&](double t) { return model.mu_at(t); },
                                                    gt.mu_fn, 0.0, gt.t_end);
                    metrics["est_err_phi"] = est_err([&](double t) { return model.phi_at(t); },
                                                     gt.phi_fn, 0.0, gt.t_phi);
                } else if (name == "qq") {
                    const RescaledSequence rs = rescale(model, events);
                    std::ofstream qq(opt.out_dir / "qq.csv");
                    if (!qq) throw std::runtime_error("evaluate: cannot write qq.csv");
                    qq << "theoretical,empirical\n";
                    for (const QqRow& row : qq_rows(rs)) {
                        qq << format_double(row.theoretical) << ","
                           << format_double(row.empirical) << "\n";
                    }
                    const double d = ks_statistic_uniform(rs.z);
                    metrics["ks_statistic"] = d;
                    metrics["ks_pvalue"] = ks_pvalue(rs.z.size(), d);
                } else if (name == "pre_acc") {
                    if (!(opt.epsilon > 0.0)) {
                        throw std::invalid_argument("evaluate: pre_acc needs --epsilon > 0");
                    }
                    const PredictionReport rep = pre_acc(model, events, opt.epsilon,
                                                         opt.warmup_frac, opt.n_mc, opt.seed);
                    metrics["pre_acc"] = rep.pre_acc;
                    metrics["n_predictions"] = rep.predictions.size();
                } else {
                    throw std::invalid_argument("evaluate: unknown metric '" + name + "'");
                }
            }
            json report;
            report["model"] = opt.model.string();
            report["data"] = opt.data.string();
            report["metrics"] = metrics;
            write_json_file(opt.out_dir / "report.json", report);
            log << "evaluate: wrote " << (opt.out_dir / "report.json").string() << "\n";
        }, any);
    }, err);
}

struct PredictOptions {
    std::filesystem::path model;
    std::filesystem::path data;
    int n_mc = 500;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = ".";
};

inline int run_predict(const PredictOptions& opt, std::ostream& log, std::ostream& err) {
    return guarded_run([&] {
        const AnyModel any = load_model(opt.model);
        std::filesystem::create_directories(opt.out_dir);
        std::visit([&](const auto& model) {
            const EventSequence history = read_events(opt.data, model.t_horizon);
            history.validate();
            const NextEventPrediction p = predict_next(model, history, opt.n_mc, opt.seed);
            json out;
            out["mean"] = p.mean;
            out["std_error"] = p.std_error;
            out["n_mc"] = opt.n_mc;
            write_json_file(opt.out_dir / "prediction.json", out);
            log << "predict: next event at " << p.mean << " (se " << p.std_error << ")\n";
        }, any);
    }, err);
}

struct QqOptions {
    std::filesystem::path model;
    std::filesystem::path data;
    std::filesystem::path out_dir = ".";
};

inline int run_qq(const QqOptions& opt, std::ostream& log, std::ostream& err) {
    EvaluateOptions ev;
    ev.model = opt.model;
    ev.data = opt.data;
    ev.metrics = {"qq"};
    ev.out_dir = opt.out_dir;
    return run_evaluate(ev, log, err);
}

} // namespace hawkes
