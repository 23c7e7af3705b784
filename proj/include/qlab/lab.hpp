#ifndef QLAB_LAB_HPP
#define QLAB_LAB_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlab/design.hpp"
#include "qlab/divergence.hpp"
#include "qlab/posterior.hpp"
#include "qlab/true_model.hpp"

namespace qlab {

using ordered_json = nlohmann::ordered_json;

struct ExperimentRow {
    std::string scenario;
    std::int64_t n = 0;
    int replication = 0;
    std::uint64_t seed = 0; // derived per-replication stream seed
    double eps = 0.0;
    double tau = 0.0;
    double mass_outside = 0.0;
    double log_r2n = 0.0;
    double log_r1n_outside = 0.0;
    std::int64_t runtime_ms = 0;
};

struct TrendSummary {
    std::vector<std::pair<std::int64_t, double>> medians; // per n
    bool strictly_decreasing = false;
    double final_median = 0.0;
};

TrendSummary trend_of(const std::vector<ExperimentRow>& rows);

struct IidExperimentSpec {
    TrueDensity truth;
    TauLevel tau;
    GridPrior prior;
    double eps = 0.0;
    std::vector<std::int64_t> n_grid;
    int replications = 1;
    std::uint64_t master_seed = 0;
};

class IidExperiment {
public:
    explicit IidExperiment(IidExperimentSpec spec);

    double theta_star() const { return theta_star_; }
    const IidExperimentSpec& spec() const { return spec_; }

    // Replications own derived streams; rows come back in (n, replication)
    // order and are identical for any thread count.
    std::vector<ExperimentRow> run(std::uint64_t master_seed, int threads = 1) const;

private:
    IidExperimentSpec spec_;
    double theta_star_;
};

struct InidExperimentSpec {
    ThetaFamily family;
    CovariateDesign design;
    TrueDensity noise;
    std::vector<double> beta_star; // center function parameters
    std::pair<double, double> scale_profile{1.0, 0.0}; // scale(x) = a + b x[0]
    TauLevel tau;
    BoxGridPrior prior;
    double eps = 0.0;
    std::vector<std::int64_t> n_grid;
    int replications = 1;
    std::uint64_t master_seed = 0;
    int sup_grid_resolution = 512;
    std::size_t theta_table_cap_bytes = 512ull << 20;
};

class InidExperiment {
public:
    explicit InidExperiment(InidExperimentSpec spec);

    const InidExperimentSpec& spec() const { return spec_; }
    const ConditionalTrueDensity& truth() const { return truth_; }
    const InidContext& context() const { return *ctx_; }

    std::vector<ExperimentRow> run(std::uint64_t master_seed, int threads = 1) const;

private:
    InidExperimentSpec spec_;
    ConditionalTrueDensity truth_;
    std::unique_ptr<InidContext> ctx_;
    std::vector<std::uint32_t> x_ids_;        // per observation up to max n
    std::vector<TrueDensity> conditional_;    // per unique x
};

struct AuditEntry {
    std::string id;     // A1..A8
    std::string status; // pass | fail | not-checkable-analytic
    ordered_json evidence;
};

struct AuditReport {
    std::vector<AuditEntry> assumptions;
    std::optional<double> theta_star;
    std::optional<std::vector<double>> beta_star;
    std::optional<double> delta;
    std::optional<double> kappa;
    std::optional<double> alpha_prime;
    std::optional<double> delta1;

    bool all_pass() const;
    // Ids of failed assumptions, in order.
    std::vector<std::string> failures() const;
    ordered_json to_json() const;
};

AuditReport run_assumption_audit(const IidExperiment& experiment);
AuditReport run_assumption_audit(const InidExperiment& experiment);

struct TailSplitReport {
    bool applicable = false;  // first absolute moment finite
    std::string note;
    double theta_star = 0.0;
    double delta1 = 0.0;
    double boundary = 0.0;
    TailAffinityReport tail;
    TrendSummary bounded_run; // consistency inside the bounded piece
    ordered_json to_json() const;
};

// Splits the real line at the 3 E|Y - theta0| / min{tau,1-tau} boundary,
// audits the affinity condition outside it and runs the bounded-piece
// consistency experiment inside it.
TailSplitReport run_tail_split(const IidExperiment& experiment,
                               std::optional<double> boundary_override = std::nullopt);

} // namespace qlab

#endif
