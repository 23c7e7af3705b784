#ifndef QLAB_CONFIG_HPP
#define QLAB_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlab/lab.hpp"

namespace qlab {

// Validation failure with the offending field path; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct DiagnosticsConfig {
    std::optional<double> t1;                 // probe point for the decay table
    double beta_rate = 0.01;
    std::vector<std::int64_t> growth_n_grid = {100, 500, 1000, 2000, 5000};
    std::vector<std::int64_t> decay_n_grid = {1, 10, 50, 200};
    int decay_replications = 500;
    std::optional<double> boundary;           // tail split override
    std::optional<double> g_t, g_t_prime;     // g-table locations
};

struct LabConfig {
    std::string scenario; // iid | inid
    double tau = 0.5;
    double eps = 0.0;
    std::vector<std::int64_t> n_grid;
    int replications = 1;
    std::uint64_t seed = 0;

    std::optional<TrueDensity> truth;  // iid truth
    std::optional<GridPrior> prior1d;

    std::optional<ThetaFamily> family;
    std::optional<CovariateDesign> design;
    std::optional<TrueDensity> noise;  // inid noise
    std::vector<double> beta_star;
    std::pair<double, double> scale_profile{1.0, 0.0};
    std::optional<BoxGridPrior> prior_nd;

    int sup_grid_resolution = 512;
    std::size_t theta_table_cap_mb = 512;
    DiagnosticsConfig diagnostics;

    TauLevel tau_level() const { return TauLevel(tau); }
    IidExperimentSpec iid_spec() const;
    InidExperimentSpec inid_spec() const;
};

// Strict parse: unknown keys are rejected, every range maps to a module
// precondition.
LabConfig parse_config(const nlohmann::json& doc);

// Reads and parses a config file; a manifest produced by the CLI is accepted
// too (its resolved_config is unwrapped).
LabConfig parse_config_file(const std::string& path);

// Loads the raw JSON document (manifest unwrapping included) without parsing.
nlohmann::json load_config_document(const std::string& path);

// Caps for CI-scale runs: n_grid <= 200, replications <= 5, coarser grids.
void apply_smoke_scale(nlohmann::json& doc);

// FNV-1a over the canonical dump; identifies a resolved configuration.
std::uint64_t config_hash(const nlohmann::json& doc);

} // namespace qlab

#endif
