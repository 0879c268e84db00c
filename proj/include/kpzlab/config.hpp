#ifndef KPZLAB_CONFIG_HPP
#define KPZLAB_CONFIG_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpzlab/ensemble.hpp"

namespace kpzlab {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// One experiment description: the JSON file plus flag overrides. Round-trips
// through serialization losslessly.
struct ExperimentConfig {
    std::string kind = "ensemble";   // ensemble | verify-tiny | wasserstein | flat-limit
    std::uint64_t seed = 1;
    double sigma = 1.0;
    GridSpec grid;
    std::string scheme = "exponential";
    std::int64_t replicas = 1000;
    int workers = 1;
    std::string out_dir = "run";

    std::vector<int> probe_sites;        // empty = module default
    std::vector<int> lemma_sites;
    std::vector<int> increment_sites;
    int smooth_halfwidth = 2;
    bool h_route_gpp = false;
    std::optional<TestFunctionSpec> phi1, phi2;
    std::string dump_realization;

    std::vector<int> quad_orders = {8, 12, 16, 20};          // verify-tiny
    std::vector<std::string> schemes = {"exponential", "clipped_euler"};

    std::vector<double> t_list = {0.25, 1.0};                // wasserstein
    int n_pairs = 2000;
    int redraws = 20;

    std::vector<double> sigma_list = {0.5, 0.25, 0.1};       // flat-limit
    double flat_tolerance = 0.05;

    Manifest manifest() const;
    EnsembleConfig ensemble_config() const;

    // Throws ConfigError naming the offending field.
    void validate() const;

    // include_runtime=false omits execution knobs (workers, out_dir, dump
    // path) so summaries embed only the scientific configuration; output
    // bytes then match across worker counts.
    std::string to_json_string(bool include_runtime = true) const;
    static ExperimentConfig from_json_string(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    void save(const std::string& path) const;
};

} // namespace kpzlab

#endif
