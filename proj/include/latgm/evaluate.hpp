#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latgm/config.hpp"
#include "latgm/io.hpp"
#include "latgm/regression.hpp"
#include "latgm/simulate.hpp"

namespace latgm {

enum class SupportRule { or_rule, and_rule };

struct SupportEstimate {
    EdgeSet edges;
    double threshold = 0.0;
    SupportRule rule = SupportRule::or_rule;
};

// Pair (i, j), i < j, is an edge when |S_ij| > threshold or (and) |S_ji| > threshold.
SupportEstimate support_offdiag(const DenseMatrix& s_hat, double threshold = kTolerances.support_threshold,
                                SupportRule rule = SupportRule::or_rule);

struct PowerFdr {
    double power = 0.0;
    double fdr = 0.0;
};

// Throws UndefinedPowerError when `truth` is empty; fdr is 0 for an empty estimate.
PowerFdr power_fdr(const SupportEstimate& estimate, const EdgeSet& truth);

enum class Estimator { regression, dantzig };

// relative: for the regression estimator lambda is a multiple of lambda_max(X)
// and mu a multiple of mu_scale(X), both per replicate. absolute: used as given.
// The Dantzig estimator always takes grid values as given.
enum class GridScale { relative, absolute };

struct ExperimentConfig {
    GeneratorConfig generator;  // generator.seed is replaced per replicate
    std::size_t n = 30;
    std::vector<double> lambdas;
    std::vector<NuclearWeight> mus;
    std::size_t replicates = 100;
    Estimator estimator = Estimator::regression;
    GridScale grid_scale = GridScale::relative;
    std::uint64_t master_seed = 1;

    // Regression solver.
    int outer_max = 500;
    double outer_rel_tol = 1e-6;
    int cd_max_passes = 100;
    double cd_tol = 1e-8;
    // Dantzig solver.
    int dantzig_max_iters = 20000;
    double dantzig_kkt_tol = 1e-5;
    double dantzig_step_safety = 0.99;

    double support_threshold = kTolerances.support_threshold;
    SupportRule support_rule = SupportRule::or_rule;
    // Half-width of the rank-matching window around h.
    double rank_tol = 0.5;
    // When false the seconds column of records.csv is written as 0 so that the
    // file is reproducible byte for byte.
    bool record_timing = false;

    void validate() const;  // sorts nothing; throws ConfigError

    // Paper-scale defaults: p_full 30, h 3, n 30, 100 replicates, 20 lambdas
    // log-spaced over [0.01, 1], 5 mus log-spaced over [0.05, 1] plus inf.
    static ExperimentConfig defaults();
    // Unknown keys raise ConfigError, except manifest bookkeeping keys.
    static ExperimentConfig from_key_values(const io::KeyValues& kv);
    std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

std::vector<double> log_grid(double lo, double hi, std::size_t count);

struct ExperimentRecord {
    std::size_t replicate = 0;
    double lambda = 0.0;
    NuclearWeight mu;
    double power = 0.0;
    double fdr = 0.0;
    std::size_t rank_XL = 0;
    double seconds = 0.0;
    bool converged = false;
};

struct ExperimentOutput {
    std::vector<ExperimentRecord> records;
    std::vector<std::string> notices;  // skipped replicates
};

// Deterministic in cfg: identical records for any `jobs`.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, unsigned jobs = 1);

struct Aggregate {
    double lambda = 0.0;
    NuclearWeight mu;
    double power = 0.0;
    double fdr = 0.0;
    double rank_XL = 0.0;
    std::size_t count = 0;
};

// Means grouped by (lambda, mu), sorted by (lambda, mu).
std::vector<Aggregate> aggregate(const std::vector<ExperimentRecord>& records);

std::vector<Aggregate> select_rank_matched(const std::vector<Aggregate>& aggregates, double h, double tol = 0.5);

struct ComparisonRow {
    double bin_low = 0.0;
    double bin_high = 0.0;
    std::optional<double> rank_matched_power;
    std::optional<double> baseline_power;
    std::optional<double> difference;  // rank_matched - baseline
};

// Best mean power per FDR bin (width 0.05 over [0, 0.5]) for rank-matched
// finite-mu cells versus mu = inf cells.
std::vector<ComparisonRow> curve_comparison(const std::vector<Aggregate>& aggregates, double h, double tol = 0.5);

std::string records_to_csv(const std::vector<ExperimentRecord>& records, bool with_timing);
std::string aggregates_to_csv(const std::vector<Aggregate>& aggregates);
std::vector<Aggregate> aggregates_from_csv(std::string_view text);  // DimensionError on missing columns
std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);
std::string timings_to_csv(const std::vector<ExperimentRecord>& records);

std::string format_mu(NuclearWeight mu);

}  // namespace latgm
