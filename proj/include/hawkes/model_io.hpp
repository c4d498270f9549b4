#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hawkes/baselines.hpp"
#include "hawkes/emv.hpp"
#include "hawkes/event_sequence.hpp"

namespace hawkes {

using json = nlohmann::json;
using AnyModel = std::variant<HawkesModelEstimate, PhModel, MisdModel>;

inline constexpr const char* kModelFormatTag = "squared-gp-hawkes/v1";

// Shortest decimal representation that round-trips the exact double.
inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Event CSV: one timestamp per line, optional single header line `t`.
// Timestamps are sorted on load and duplicates are rejected.
// ---------------------------------------------------------------------------

inline EventSequence read_events(const std::filesystem::path& path, double t_end) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_events: cannot open " + path.string());
    EventSequence seq;
    seq.t_end = t_end;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        std::size_t begin = line.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        const std::string token = line.substr(begin);
        if (first && token == "t") {
            first = false;
            continue;
        }
        first = false;
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
            throw std::invalid_argument("read_events: bad timestamp '" + token + "' in " +
                                        path.string());
        }
        seq.times.push_back(value);
    }
    std::sort(seq.times.begin(), seq.times.end());
    for (std::size_t i = 1; i < seq.times.size(); ++i) {
        if (seq.times[i] == seq.times[i - 1]) {
            throw std::invalid_argument("read_events: duplicate timestamp " +
                                        format_double(seq.times[i]) + " in " + path.string());
        }
    }
    return seq;
}

inline void write_events(const std::filesystem::path& path, const EventSequence& events) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_events: cannot open " + path.string());
    out << "t\n";
    for (const double t : events.times) out << format_double(t) << "\n";
    if (!out) throw std::runtime_error("write_events: write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Model JSON. Inducing locations, covariance diagonals, and hyperparameters
// are stored with round-trip precision so the reloaded evaluators reproduce
// the original bit for bit.
// ---------------------------------------------------------------------------

namespace detail {

inline json squared_gp_to_json(const SquaredGpEstimate& part) {
    json j;
    j["theta0"] = part.params().theta0;
    j["theta1"] = part.params().theta1;
    j["domain_length"] = part.grid().domain_length;
    j["z"] = part.grid().points;
    j["s_diag"] = std::vector<double>(part.s_diag().begin(), part.s_diag().end());
    return j;
}

inline SquaredGpEstimate squared_gp_from_json(const json& j) {
    const KernelParams params{j.at("theta0").get<double>(), j.at("theta1").get<double>()};
    InducingGrid grid;
    grid.points = j.at("z").get<std::vector<double>>();
    grid.domain_length = j.at("domain_length").get<double>();
    grid.validate();
    const auto s = j.at("s_diag").get<std::vector<double>>();
    Eigen::VectorXd s_diag(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) s_diag(static_cast<Eigen::Index>(i)) = s[i];
    return SquaredGpEstimate(params, grid, s_diag);
}

} // namespace detail

inline json model_to_json(const HawkesModelEstimate& model) {
    json j;
    j["format"] = kModelFormatTag;
    j["method"] = model.background ? "emv" : "emv-const";
    j["t_horizon"] = model.t_horizon;
    j["t_phi"] = model.t_phi;
    if (model.background) {
        j["background"] = detail::squared_gp_to_json(*model.background);
    } else {
        j["constant_mu"] = model.constant_mu;
    }
    j["excitation"] = detail::squared_gp_to_json(*model.excitation);
    return j;
}

inline json model_to_json(const PhModel& model) {
    json j;
    j["format"] = kModelFormatTag;
    j["method"] = "ph";
    j["t_horizon"] = model.t_horizon;
    j["mu"] = model.params.mu;
    j["alpha"] = model.params.alpha;
    j["beta"] = model.params.beta;
    return j;
}

inline json model_to_json(const MisdModel& model) {
    json j;
    j["format"] = kModelFormatTag;
    j["method"] = "misd";
    j["t_horizon"] = model.t_horizon;
    j["t_phi"] = model.t_phi;
    j["mu"] = model.mu;
    j["heights"] = model.heights;
    return j;
}

inline json model_to_json(const AnyModel& model) {
    return std::visit([](const auto& m) { return model_to_json(m); }, model);
}

inline AnyModel model_from_json(const json& j) {
    if (j.value("format", "") != kModelFormatTag) {
        throw std::invalid_argument("model_from_json: unrecognized format tag");
    }
    const std::string method = j.at("method").get<std::string>();
    if (method == "emv" || method == "emv-const") {
        HawkesModelEstimate model;
        model.t_horizon = j.at("t_horizon").get<double>();
        model.t_phi = j.at("t_phi").get<double>();
        if (method == "emv") {
            model.background = detail::squared_gp_from_json(j.at("background"));
        } else {
            model.constant_mu = j.at("constant_mu").get<double>();
        }
        model.excitation = detail::squared_gp_from_json(j.at("excitation"));
        return model;
    }
    if (method == "ph") {
        const ParametricHawkesParams p{j.at("mu").get<double>(), j.at("alpha").get<double>(),
                                       j.at("beta").get<double>()};
        return PhModel::from_params(p, j.at("t_horizon").get<double>());
    }
    if (method == "misd") {
        MisdModel model;
        model.t_horizon = j.at("t_horizon").get<double>();
        model.t_phi = j.at("t_phi").get<double>();
        model.mu = j.at("mu").get<double>();
        model.heights = j.at("heights").get<std::vector<double>>();
        if (model.heights.empty()) {
            throw std::invalid_argument("model_from_json: histogram without bins");
        }
        return model;
    }
    throw std::invalid_argument("model_from_json: unknown method '" + method + "'");
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_json_file: cannot open " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write_json_file: write failed for " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_json_file: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("read_json_file: " + path.string() + ": " + e.what());
    }
    return j;
}

inline void save_model(const std::filesystem::path& path, const AnyModel& model) {
    write_json_file(path, model_to_json(model));
}

inline AnyModel load_model(const std::filesystem::path& path) {
    return model_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Curve CSVs and traces.
// ---------------------------------------------------------------------------

template <typename F>
void write_curve(const std::filesystem::path& path, const std::string& x_name,
                 const std::string& y_name, const F& fn, double a, double b, int resolution) {
    if (resolution < 2) throw std::invalid_argument("write_curve: resolution must be >= 2");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_curve: cannot open " + path.string());
    out << x_name << "," << y_name << "\n";
    for (int i = 0; i < resolution; ++i) {
        const double x = a + (b - a) * i / (resolution - 1);
        out << format_double(x) << "," << format_double(fn(x)) << "\n";
    }
}

inline void write_elbo_trace(const std::filesystem::path& path, const FitDiagnostics& diag) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_elbo_trace: cannot open " + path.string());
    const bool has_mu = !diag.elbo_mu_trace.empty();
    out << (has_mu ? "iter,elbo_mu,elbo_phi\n" : "iter,elbo_phi\n");
    for (std::size_t i = 0; i < diag.elbo_phi_trace.size(); ++i) {
        out << (i + 1);
        if (has_mu) out << "," << format_double(diag.elbo_mu_trace[i]);
        out << "," << format_double(diag.elbo_phi_trace[i]) << "\n";
    }
}

} // namespace hawkes
