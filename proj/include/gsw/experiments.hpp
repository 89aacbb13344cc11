#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "gsw/inference.hpp"
#include "gsw/measures.hpp"
#include "gsw/ot_exact.hpp"
#include "gsw/smoothing.hpp"

namespace gsw {

/// W_2^2 between N(a, (var_a + sigma^2) I_d) and N(b, (var_b + sigma^2) I_d):
/// |a - b|^2 + d (sqrt(var_a + sigma^2) - sqrt(var_b + sigma^2))^2.
double gaussian_w2_oracle(std::span<const double> mean_a, std::span<const double> mean_b, double var_a,
                          double var_b, double sigma, std::size_t d);

struct OracleSpec {
  enum class Kind { closed_form_gaussian, large_sample_reference };
  Kind kind = Kind::closed_form_gaussian;
  /// Reference sample size; raised to 50 * max(sizes) when smaller.
  std::size_t n_ref = 0;
  /// Independent reference draws; their standard error is the recorded oracle error.
  std::size_t ref_reps = 4;
};

struct RateExperimentConfig {
  LawSpec law_mu;
  LawSpec law_nu;
  KernelSpec kernel;
  CostSpec cost{2.0};
  std::vector<std::size_t> sizes;
  std::size_t replications = 50;
  RateParams rate_params{100.0, 2.0, 1};
  RngSpec seed{};
  OracleSpec oracle;
  std::size_t k = 1;
  unsigned threads = 1;
};

struct RateRow {
  std::size_t n;
  double mean_abs_error;
  double mc_se;
  double predicted_rate;
  std::size_t replications;
};

struct SlopeFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

/// OLS of ln(y) on ln(x).
SlopeFit fit_log_log(std::span<const double> x, std::span<const double> y);

struct CltRow {
  std::size_t replication;
  double t_hat;
  double tau2;
  double standardized;
  bool covered_cost;
  bool covered_dist;
};

struct ExperimentResult {
  std::vector<RateRow> table;
  SlopeFit fit;
  double predicted_slope = 0.0;
  /// Fit of ln(error / ln N) on ln N, reported in the boundary regime.
  std::optional<SlopeFit> log_corrected_fit;
  double oracle_value = 0.0;
  double oracle_error = 0.0;
  bool oracle_flagged = false;

  std::vector<CltRow> clt_rows;
  std::optional<double> coverage;
  std::optional<double> coverage_distance;
  std::optional<double> ks_distance;
  std::optional<double> variance_ratio;
  std::size_t degenerate_replications = 0;
};

/// Ground truth for a rate experiment plus its own error estimate.
std::pair<double, double> experiment_oracle(const LawSpec& law_mu, const LawSpec& law_nu,
                                            const KernelSpec& kernel, const CostSpec& cost,
                                            const OracleSpec& oracle, std::size_t max_size,
                                            RngSpec seed);

ExperimentResult run_rate_experiment(const RateExperimentConfig& config);

struct CltExperimentConfig {
  LawSpec law_mu;
  LawSpec law_nu;
  KernelSpec kernel;
  CostSpec cost{2.0};
  std::size_t m = 1000;
  std::size_t n = 1000;
  std::size_t replications = 100;
  double alpha = 0.05;
  std::size_t k = 2;
  double train_fraction = 0.5;
  InferenceOptions inference;
  OracleSpec oracle;
  RngSpec seed{};
  unsigned threads = 1;
};

ExperimentResult run_clt_experiment(const CltExperimentConfig& config);

/// Kolmogorov distance between the empirical CDF of `values` and Phi.
double ks_distance_to_normal(std::vector<double> values);

struct SigmaSweepConfig {
  LawSpec law_mu;
  LawSpec law_nu;
  CostSpec cost{2.0};
  std::vector<double> sigmas;
  std::size_t m = 500;
  std::size_t n = 500;
  std::size_t k = 2;
  /// Common random numbers: the nu sample and its noise reuse the mu streams.
  bool paired = false;
  double train_fraction = 0.5;
  InferenceOptions inference;
  RngSpec seed{};
  unsigned threads = 1;
};

struct SigmaSweepRow {
  double sigma;
  double t_hat;
  double tau2;  // NaN when p <= 1
  double seed_spread;
  std::optional<double> oracle;
};

std::vector<SigmaSweepRow> run_sigma_sweep(const SigmaSweepConfig& config);

void write_rate_csv(std::ostream& os, const ExperimentResult& result);
void write_clt_csv(std::ostream& os, const ExperimentResult& result);
void write_sweep_csv(std::ostream& os, std::span<const SigmaSweepRow> rows);

}  // namespace gsw
