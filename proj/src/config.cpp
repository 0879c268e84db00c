#include "kpzlab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kpzlab {

using ordered_json = nlohmann::ordered_json;

namespace {

template <typename T>
T require(const ordered_json& j, const char* field) {
    if (!j.contains(field)) throw ConfigError(std::string("missing field: ") + field);
    try {
        return j.at(field).get<T>();
    } catch (const std::exception&) {
        throw ConfigError(std::string("bad value for field: ") + field);
    }
}

template <typename T>
T optional_field(const ordered_json& j, const char* field, T fallback) {
    if (!j.contains(field)) return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const std::exception&) {
        throw ConfigError(std::string("bad value for field: ") + field);
    }
}

TestFunctionSpec tf_from_json(const ordered_json& j, const char* field) {
    TestFunctionSpec s;
    s.shape = require<std::string>(j, "shape");
    s.center = require<double>(j, "center");
    s.width = require<double>(j, "width");
    s.amplitude = optional_field<double>(j, "amplitude", 1.0);
    if (s.width <= 0) throw ConfigError(std::string(field) + ".width must be > 0");
    return s;
}

ordered_json tf_to_json(const TestFunctionSpec& s) {
    return ordered_json{{"shape", s.shape}, {"center", s.center}, {"width", s.width}, {"amplitude", s.amplitude}};
}

} // namespace

Manifest ExperimentConfig::manifest() const {
    Manifest m;
    m.seed = seed;
    m.grid = grid;
    m.sigma = sigma;
    return m;
}

EnsembleConfig ExperimentConfig::ensemble_config() const {
    EnsembleConfig c;
    c.manifest = manifest();
    c.scheme = noise_scheme_from_string(scheme);
    c.replicas = replicas;
    c.workers = workers;
    c.probe_sites = probe_sites;
    c.lemma_sites = lemma_sites;
    c.increment_sites = increment_sites;
    c.smooth_halfwidth = smooth_halfwidth;
    c.h_route_gpp = h_route_gpp;
    c.phi1 = phi1;
    c.phi2 = phi2;
    c.dump_realization_path = dump_realization;
    return c;
}

void ExperimentConfig::validate() const {
    static const std::set<std::string> kinds = {"ensemble", "verify-tiny", "wasserstein", "flat-limit"};
    if (!kinds.count(kind)) throw ConfigError("kind must be one of ensemble|verify-tiny|wasserstein|flat-limit");
    if (sigma < 0) throw ConfigError("sigma must be >= 0");
    try {
        grid.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    try {
        noise_scheme_from_string(scheme);
    } catch (const std::invalid_argument&) {
        throw ConfigError("scheme must be exponential|clipped_euler|none");
    }
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (smooth_halfwidth < 0) throw ConfigError("smooth_halfwidth must be >= 0");
    if (2 * smooth_halfwidth + 1 > grid.n_sites()) throw ConfigError("smooth_halfwidth too large for lattice");
    if (phi1.has_value() != phi2.has_value()) throw ConfigError("phi1 and phi2 must be given together");
    if (kind == "wasserstein") {
        if (!phi1 || !phi2) throw ConfigError("wasserstein needs phi1 and phi2");
        if (t_list.empty()) throw ConfigError("t_list must not be empty");
        for (double t : t_list) {
            const double steps = t / grid.dt;
            if (std::abs(steps - std::round(steps)) > 1e-9) throw ConfigError("t_list entries must be multiples of grid.dt");
        }
        if (n_pairs < 2 || n_pairs > 4096) throw ConfigError("n_pairs must be in [2, 4096]");
        if (redraws < 2) throw ConfigError("redraws must be >= 2");
    }
    if (kind == "flat-limit") {
        if (sigma_list.empty()) throw ConfigError("sigma_list must not be empty");
        for (double s : sigma_list)
            if (s <= 0) throw ConfigError("sigma_list entries must be > 0");
        if (flat_tolerance <= 0) throw ConfigError("flat_tolerance must be > 0");
    }
    if (kind == "verify-tiny") {
        if (quad_orders.empty()) throw ConfigError("quad_orders must not be empty");
        for (int m : quad_orders)
            if (m < 1 || m > 64) throw ConfigError("quad_orders entries must be in [1, 64]");
        for (const auto& s : schemes)
            if (s != "exponential" && s != "clipped_euler") throw ConfigError("schemes entries must be exponential|clipped_euler");
    }
}

std::string ExperimentConfig::to_json_string(bool include_runtime) const {
    ordered_json j;
    j["kind"] = kind;
    j["seed"] = seed;
    j["sigma"] = sigma;
    j["grid"] = ordered_json{{"dx", grid.dx}, {"dt", grid.dt}, {"half_width", grid.half_width}, {"n_steps", grid.n_steps}};
    j["scheme"] = scheme;
    j["replicas"] = replicas;
    if (include_runtime) {
        j["workers"] = workers;
        j["out_dir"] = out_dir;
    }
    if (!probe_sites.empty()) j["probe_sites"] = probe_sites;
    if (!lemma_sites.empty()) j["lemma_sites"] = lemma_sites;
    if (!increment_sites.empty()) j["increment_sites"] = increment_sites;
    j["smooth_halfwidth"] = smooth_halfwidth;
    if (h_route_gpp) j["h_route_gpp"] = true;
    if (phi1) j["phi1"] = tf_to_json(*phi1);
    if (phi2) j["phi2"] = tf_to_json(*phi2);
    if (include_runtime && !dump_realization.empty()) j["dump_realization"] = dump_realization;
    if (kind == "verify-tiny") {
        j["quad_orders"] = quad_orders;
        j["schemes"] = schemes;
    }
    if (kind == "wasserstein") {
        j["t_list"] = t_list;
        j["n_pairs"] = n_pairs;
        j["redraws"] = redraws;
    }
    if (kind == "flat-limit") {
        j["sigma_list"] = sigma_list;
        j["flat_tolerance"] = flat_tolerance;
    }
    return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    c.kind = optional_field<std::string>(j, "kind", "ensemble");
    c.seed = require<std::uint64_t>(j, "seed");
    c.sigma = require<double>(j, "sigma");
    if (!j.contains("grid")) throw ConfigError("missing field: grid");
    const auto& g = j.at("grid");
    c.grid.dx = require<double>(g, "dx");
    c.grid.dt = require<double>(g, "dt");
    c.grid.half_width = require<int>(g, "half_width");
    c.grid.n_steps = require<int>(g, "n_steps");
    c.scheme = optional_field<std::string>(j, "scheme", "exponential");
    c.replicas = optional_field<std::int64_t>(j, "replicas", 1000);
    c.workers = optional_field<int>(j, "workers", 1);
    c.out_dir = optional_field<std::string>(j, "out_dir", "run");
    c.probe_sites = optional_field<std::vector<int>>(j, "probe_sites", {});
    c.lemma_sites = optional_field<std::vector<int>>(j, "lemma_sites", {});
    c.increment_sites = optional_field<std::vector<int>>(j, "increment_sites", {});
    c.smooth_halfwidth = optional_field<int>(j, "smooth_halfwidth", 2);
    c.h_route_gpp = optional_field<bool>(j, "h_route_gpp", false);
    if (j.contains("phi1")) c.phi1 = tf_from_json(j.at("phi1"), "phi1");
    if (j.contains("phi2")) c.phi2 = tf_from_json(j.at("phi2"), "phi2");
    c.dump_realization = optional_field<std::string>(j, "dump_realization", "");
    c.quad_orders = optional_field<std::vector<int>>(j, "quad_orders", {8, 12, 16, 20});
    c.schemes = optional_field<std::vector<std::string>>(j, "schemes", {"exponential", "clipped_euler"});
    c.t_list = optional_field<std::vector<double>>(j, "t_list", {0.25, 1.0});
    c.n_pairs = optional_field<int>(j, "n_pairs", 2000);
    c.redraws = optional_field<int>(j, "redraws", 20);
    c.sigma_list = optional_field<std::vector<double>>(j, "sigma_list", {0.5, 0.25, 0.1});
    c.flat_tolerance = optional_field<double>(j, "flat_tolerance", 0.05);
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

void ExperimentConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << to_json_string();
}

} // namespace kpzlab
