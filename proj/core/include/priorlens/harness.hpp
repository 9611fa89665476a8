#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "priorlens/conjugate.hpp"
#include "priorlens/model.hpp"

namespace priorlens {

enum class ExperimentKind { Normal, Ridge, Custom };

/// Candidate-hyperparameter grid over an interval with selectable endpoint
/// closure. Always realizes exactly `count` points; an open endpoint is
/// excluded by moving one uniform step inward.
struct GridSpec {
  double low = 0.0;
  double high = 1.0;
  int count = 2;
  bool closed_low = false;
  bool closed_high = true;

  std::vector<double> points() const;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Normal;
  std::size_t n = 0;             // 0 selects the experiment default
  std::size_t replications = 0;  // 0 selects the experiment default
  std::uint64_t seed = 20240801ULL;
  std::map<std::string, GridSpec> grid;
  std::map<std::string, double> fixed_hypers;
  std::string output_path;                 // empty: keep results in memory
  std::set<std::string> criteria_enabled;  // empty: experiment default set
};

/// One (replication, grid point) record, materialized on demand from the
/// flat result storage.
struct ResultRow {
  std::size_t replication = 0;
  double hyper = 0.0;
  std::vector<std::optional<double>> values;  // parallel to table criteria
  std::vector<bool> chosen;
};

struct ChosenStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::map<double, std::size_t> histogram;
};

struct ValueStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ResultTable {
  std::string hyper_label;
  std::vector<std::string> criteria;
  std::vector<double> grid;
  std::size_t n = 0;
  std::size_t replications = 0;  // attempted
  std::size_t failed_replications = 0;

  // Flat row storage: successful replications x grid points, in replication
  // order. A NaN cell marks a criterion not defined at that grid point.
  std::vector<std::uint32_t> rep_of_row;
  std::vector<double> hyper_of_row;
  std::vector<double> cell;        // row-major, width = criteria.size()
  std::vector<std::uint8_t> flag;  // chosen marks, same shape

  // Per successful replication, in order (ridge only).
  std::vector<double> lambda_star;

  std::map<std::string, ChosenStats> chosen_stats;
  // point-label (e.g. "mu=-1") -> criterion -> value statistics
  std::map<std::string, std::map<std::string, ValueStats>> value_stats;
  std::vector<std::string> warnings;

  std::size_t row_count() const { return hyper_of_row.size(); }
  ResultRow row(std::size_t i) const;
  std::size_t criterion_index(const std::string& name) const;
  /// The chosen hyperparameter of one criterion in each successful
  /// replication, in replication order.
  std::vector<double> chosen_of(const std::string& name) const;
};

/// Argmin over (hyper, value) pairs. Ties go to the smallest hyperparameter.
/// The boolean is the divergence flag: set when the argmin sits on either end
/// of the grid. Throws NonFinite on NaN or infinite values.
std::pair<double, bool> grid_minimize(
    const std::vector<std::pair<double, double>>& values);

/// Fraction of successful replications in which two criteria picked the same
/// grid point.
double chosen_agreement_fraction(const ResultTable& table,
                                 const std::string& crit_a,
                                 const std::string& crit_b);

/// Scalar-normal experiment: data from Normal(1,1), conjugate prior family
/// over a mu-grid with lambda and epsilon fixed, flat base prior. Criteria
/// (default all): dCV, dWAIC, WAICR, WAICRS, dDIC, dG, F. The free energy is
/// evaluated only where the candidate prior is proper.
ResultTable run_normal_experiment(const ExperimentConfig& cfg);

/// Ridge experiment: inputs from Normal(ones, I_5), responses from
/// w0 = ones, noise 0.1; shrinkage prior over a lambda-grid. Criteria
/// (default): dCV, dWAIC, WAICR, WAICRS, dDIC, F; dG opt-in. Records the
/// closed-form optimal lambda per replication.
ResultTable run_ridge_experiment(const ExperimentConfig& cfg);

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  std::vector<double> n_values;
  std::vector<double> levels;
};

struct RateReport {
  SlopeFit cv_waic_gap;        // median |CV - WAIC| per n
  SlopeFit gen_gap_std;        // std of the generalization-loss shift
  SlopeFit relation_residual;  // median |n^2 dCV - relation value|
  SlopeFit self_gap_std;       // std of (self-average - empirical) value
  bool degenerate = false;     // probe prior equals the base prior
};

/// Log-log slope checks on the scalar-normal model at a fixed probe
/// hyperparameter. Requires at least three sample sizes.
RateReport run_rate_checks(const std::vector<std::size_t>& n_values,
                           std::size_t replications, std::uint64_t seed,
                           const NormalHyper& probe);

/// results.csv: header row then one line per ResultRow, RFC-4180.
void write_csv(const ResultTable& table, const std::string& path);

/// summary.json: aggregate means/stds, chosen-hyperparameter histograms,
/// and accumulated warnings.
void write_summary_json(const ResultTable& table, const ExperimentConfig& cfg,
                        const std::string& path);

/// Command-line entry point (subcommands: normal, ridge, rates, criteria,
/// check). Returns 0 on success, 2 on configuration errors, 3 on numerical
/// failure.
int cli_main(const std::vector<std::string>& args);

}  // namespace priorlens
