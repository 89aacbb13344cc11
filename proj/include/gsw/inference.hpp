#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gsw/error.hpp"
#include "gsw/measures.hpp"
#include "gsw/ot_exact.hpp"
#include "gsw/smoothing.hpp"

namespace gsw {

/// (q, p, d) of the three-regime rate function. Requires q > p >= 1.
struct RateParams {
  double q;
  double p;
  std::size_t d;

  void validate() const;
};

/// N^{-(q-p)/(q+d)} for p < q < d+2p, N^{-1/2} ln N at q = d+2p, N^{-1/2} above.
double rho(const RateParams& params, std::size_t n);
/// Decay exponent of rho ignoring the log factor: (q-p)/(q+d) or 1/2.
double rate_exponent(const RateParams& params);
double r_mn(const RateParams& params_mu, const RateParams& params_nu, std::size_t m, std::size_t n);

struct SplitConfig {
  double train_fraction = 0.5;
  RngSpec rng{};
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  [[nodiscard]] double half_width() const noexcept { return 0.5 * (hi - lo); }
};

struct InferenceOptions {
  std::size_t k_eval = 256;
  bool antithetic = true;
  /// Extra noise seeds used to measure the inner Monte Carlo spread of the
  /// cost estimate. The distance interval is refused when T < 2 * spread.
  std::size_t spread_reps = 4;
};

struct InferenceReport {
  double cost_estimate = 0.0;
  double distance_estimate = 0.0;
  double tau2 = 0.0;
  double v_mu = 0.0;
  double v_nu = 0.0;
  Interval ci_cost;
  Interval ci_distance;
  bool distance_interval_valid = true;
  double alpha = 0.05;
  double z = 0.0;
  std::size_t m = 0, n = 0, m1 = 0, m2 = 0, n1 = 0, n2 = 0;
  double lambda_hat = 0.0;
  double seed_spread = 0.0;
  std::uint64_t seed = 0;
};

/// Thrown when the distance interval is refused; carries the cost-side report.
class NullProximityRefusal : public NullProximityError {
 public:
  NullProximityRefusal(const std::string& what, InferenceReport partial)
      : NullProximityError(what), report(std::move(partial)) {}
  InferenceReport report;
};

struct HoldoutVariance {
  double v_mu = 0.0;
  double v_nu = 0.0;
  double tau2 = 0.0;
};

/// Centered (1/N) sample variances of the held-out potential values and
/// tau^2 = n/(m+n) V_mu + m/(m+n) V_nu.
HoldoutVariance holdout_variance(std::span<const double> h_eval, std::span<const double> k_eval,
                                 std::size_t m, std::size_t n);

/// Wald intervals for the cost and (when t_hat > 0) the distance. Fills the
/// interval fields, z and alpha of `report`.
void wald_intervals(InferenceReport& report, double p);

/// Point estimates on the full samples, potentials learned on a training
/// split, variances on the held-out split, Wald intervals. Requires p > 1
/// and a gaussian kernel.
InferenceReport split_sample_inference(const EmpiricalMeasure& mu_m, const EmpiricalMeasure& nu_n,
                                       const KernelSpec& kernel, const CostSpec& cost,
                                       const SmoothingPlan& smoothing, const SplitConfig& split,
                                       double alpha, const InferenceOptions& options = {});

struct TestResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;
  double r_mn = 0.0;
};

/// theta = multiplier * r_mn * ln(2 + min(m, n)).
double test_threshold(const RateParams& params_mu, const RateParams& params_nu, std::size_t m,
                      std::size_t n, double multiplier);
TestResult two_sample_test(const EmpiricalMeasure& mu_m, const EmpiricalMeasure& nu_n,
                           const KernelSpec& kernel, const CostSpec& cost,
                           const SmoothingPlan& smoothing, const RateParams& params_mu,
                           const RateParams& params_nu, double threshold_multiplier);

struct NormalizedPotentials {
  std::vector<double> phi;
  std::vector<double> psi;
  double shift = 0.0;      // estimate of mu h, subtracted from phi and added to psi
  double nu_center = 0.0;  // estimate of nu k after the shift
};

/// Shifts the dual pair of `estimate` so that the smoothed first potential
/// averages to zero over `mu_ref`; reports the nu-centering of the second.
NormalizedPotentials normalize_potentials(const SmoothedCostEstimate& estimate,
                                          const EmpiricalMeasure& mu_ref,
                                          const EmpiricalMeasure& nu_ref, std::size_t k_eval,
                                          RngSpec rng);

}  // namespace gsw
