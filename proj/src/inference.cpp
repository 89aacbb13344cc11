#include "gsw/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gsw/normal.hpp"

namespace gsw {

namespace {
constexpr std::uint64_t kTagSplitMu = 0x73706d;
constexpr std::uint64_t kTagSplitNu = 0x73706e;
constexpr std::uint64_t kTagTrain = 0x7472;
constexpr std::uint64_t kTagEvalH = 0x6568;
constexpr std::uint64_t kTagEvalK = 0x656b;
constexpr std::uint64_t kTagSpread = 0x7370726561;

bool at_boundary(const RateParams& params) {
  const double threshold = static_cast<double>(params.d) + 2.0 * params.p;
  return std::abs(params.q - threshold) <= 1e-12 * threshold;
}
}  // namespace

void RateParams::validate() const {
  if (!(p >= 1.0)) throw InvalidInput("rate parameter p must be >= 1");
  if (d == 0) throw InvalidInput("rate parameter d must be positive");
  if (!(q > p)) throw InvalidInput("moment order q must exceed p");
}

double rate_exponent(const RateParams& params) {
  params.validate();
  const double threshold = static_cast<double>(params.d) + 2.0 * params.p;
  if (at_boundary(params) || params.q > threshold) return 0.5;
  return (params.q - params.p) / (params.q + static_cast<double>(params.d));
}

double rho(const RateParams& params, std::size_t n) {
  params.validate();
  if (n < 2) throw InvalidInput("rate function needs N >= 2");
  const double nn = static_cast<double>(n);
  if (at_boundary(params)) return std::log(nn) / std::sqrt(nn);
  return std::pow(nn, -rate_exponent(params));
}

double r_mn(const RateParams& params_mu, const RateParams& params_nu, std::size_t m, std::size_t n) {
  return rho(params_mu, m) + rho(params_nu, n);
}

HoldoutVariance holdout_variance(std::span<const double> h_eval, std::span<const double> k_eval,
                                 std::size_t m, std::size_t n) {
  auto centered_var = [](std::span<const double> v) {
    if (v.empty()) throw InvalidInput("empty evaluation sample");
    const double len = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / len;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / len;
  };
  HoldoutVariance out;
  out.v_mu = centered_var(h_eval);
  out.v_nu = centered_var(k_eval);
  const double total = static_cast<double>(m + n);
  out.tau2 = (static_cast<double>(n) / total) * out.v_mu + (static_cast<double>(m) / total) * out.v_nu;
  return out;
}

void wald_intervals(InferenceReport& r, double p) {
  if (!(r.alpha > 0.0 && r.alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  r.z = normal_quantile(1.0 - r.alpha / 2.0);
  const double mm = static_cast<double>(r.m);
  const double nn = static_cast<double>(r.n);
  const double half = r.z * std::sqrt((mm + nn) / (mm * nn)) * std::sqrt(r.tau2);
  r.ci_cost = {r.cost_estimate - half, r.cost_estimate + half};
  if (r.distance_estimate > 0.0) {
    const double dhalf = half / (p * std::pow(r.distance_estimate, p - 1.0));
    r.ci_distance = {r.distance_estimate - dhalf, r.distance_estimate + dhalf};
  } else {
    r.ci_distance = {0.0, 0.0};
    r.distance_interval_valid = false;
  }
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, RngSpec spec) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  CounterRng rng(spec);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

std::pair<EmpiricalMeasure, EmpiricalMeasure> split_measure(const EmpiricalMeasure& mu,
                                                            std::size_t n_train, RngSpec spec) {
  const auto perm = permutation(mu.size(), spec);
  const std::span<const std::size_t> all(perm);
  return {mu.select(all.first(n_train)), mu.select(all.subspan(n_train))};
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

InferenceReport split_sample_inference(const EmpiricalMeasure& mu_m, const EmpiricalMeasure& nu_n,
                                       const KernelSpec& kernel, const CostSpec& cost,
                                       const SmoothingPlan& smoothing, const SplitConfig& split,
                                       double alpha, const InferenceOptions& options) {
  if (!(cost.p > 1.0)) throw InvalidInput("inference requires p > 1 (got p = " + std::to_string(cost.p) + ")");
  if (!kernel.is_gaussian()) throw InvalidInput("inference requires the gaussian kernel");
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
    throw InvalidInput("train fraction must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  if (!mu_m.equal_weights() || !nu_n.equal_weights())
    throw InvalidInput("sample splitting requires equal-weight samples");

  InferenceReport r;
  r.alpha = alpha;
  r.m = mu_m.size();
  r.n = nu_n.size();
  r.m1 = static_cast<std::size_t>(std::llround(split.train_fraction * static_cast<double>(r.m)));
  r.n1 = static_cast<std::size_t>(std::llround(split.train_fraction * static_cast<double>(r.n)));
  r.m2 = r.m - std::min(r.m1, r.m);
  r.n2 = r.n - std::min(r.n1, r.n);
  if (r.m1 < 2 || r.m2 < 2 || r.n1 < 2 || r.n2 < 2)
    throw InvalidInput("samples too small to split into parts of size >= 2");
  r.lambda_hat = static_cast<double>(r.m) / static_cast<double>(r.m + r.n);
  r.seed = smoothing.rng.seed;

  // (i) full-sample point estimates
  const auto full = estimate_smoothed_cost(mu_m, nu_n, kernel, cost, smoothing);
  r.cost_estimate = full.value;
  r.distance_estimate = full.distance;

  // (ii) seeded split
  auto [mu_tr, mu_ev] = split_measure(mu_m, r.m1, split.rng.derive(kTagSplitMu));
  auto [nu_tr, nu_ev] = split_measure(nu_n, r.n1, split.rng.derive(kTagSplitNu));

  // (iii) training potentials
  SmoothingPlan train_plan = smoothing;
  train_plan.rng = smoothing.rng.derive(kTagTrain);
  const auto train = estimate_smoothed_cost(mu_tr, nu_tr, kernel, cost, train_plan);

  // (iv) smoothed potentials on the held-out points
  SmoothedPotential h{
      .base = DualFunction{train.solution.psi, train.smoothed_nu, DualFunction::Role::second, cost.p},
      .kernel = kernel,
      .k_eval = options.k_eval,
      .antithetic = options.antithetic,
      .rng = smoothing.rng.derive(kTagEvalH),
      .direct = {}};
  SmoothedPotential k{
      .base = DualFunction{train.solution.phi, train.smoothed_mu, DualFunction::Role::first, cost.p},
      .kernel = kernel,
      .k_eval = options.k_eval,
      .antithetic = options.antithetic,
      .rng = smoothing.rng.derive(kTagEvalK),
      .direct = {}};
  const auto h_vals = eval_smoothed_potential_batch(h, mu_ev.coords());
  const auto k_vals = eval_smoothed_potential_batch(k, nu_ev.coords());

  // (v)-(vi) variances
  const auto hv = holdout_variance(h_vals, k_vals, r.m, r.n);
  r.v_mu = hv.v_mu;
  r.v_nu = hv.v_nu;
  r.tau2 = hv.tau2;

  // inner Monte Carlo spread of the point estimate
  if (options.spread_reps > 0) {
    std::vector<double> values{full.value};
    for (std::size_t s = 0; s < options.spread_reps; ++s) {
      SmoothingPlan alt = smoothing;
      alt.rng = smoothing.rng.derive(kTagSpread + s);
      values.push_back(estimate_smoothed_cost(mu_m, nu_n, kernel, cost, alt).value);
    }
    r.seed_spread = sample_sd(values);
  }

  // (vii) intervals
  wald_intervals(r, cost.p);
  if (!(r.cost_estimate > 0.0) || r.cost_estimate < 2.0 * r.seed_spread) {
    r.distance_interval_valid = false;
    r.ci_distance = {0.0, 0.0};
    throw NullProximityRefusal(
        "distance interval refused: estimate " + std::to_string(r.cost_estimate) +
            " is within twice the inner Monte Carlo spread " + std::to_string(r.seed_spread) +
            "; the delta method does not apply near the null",
        r);
  }
  return r;
}

double test_threshold(const RateParams& params_mu, const RateParams& params_nu, std::size_t m,
                      std::size_t n, double multiplier) {
  if (!(multiplier > 0.0)) throw InvalidInput("threshold multiplier must be positive");
  return multiplier * r_mn(params_mu, params_nu, m, n) *
         std::log(2.0 + static_cast<double>(std::min(m, n)));
}

TestResult two_sample_test(const EmpiricalMeasure& mu_m, const EmpiricalMeasure& nu_n,
                           const KernelSpec& kernel, const CostSpec& cost,
                           const SmoothingPlan& smoothing, const RateParams& params_mu,
                           const RateParams& params_nu, double threshold_multiplier) {
  TestResult out;
  out.r_mn = r_mn(params_mu, params_nu, mu_m.size(), nu_n.size());
  out.threshold = test_threshold(params_mu, params_nu, mu_m.size(), nu_n.size(), threshold_multiplier);
  out.statistic = estimate_smoothed_cost(mu_m, nu_n, kernel, cost, smoothing).value;
  out.reject = out.statistic > out.threshold;
  return out;
}

NormalizedPotentials normalize_potentials(const SmoothedCostEstimate& est,
                                          const EmpiricalMeasure& mu_ref,
                                          const EmpiricalMeasure& nu_ref, std::size_t k_eval,
                                          RngSpec rng) {
  NormalizedPotentials out;
  SmoothedPotential h{
      .base = DualFunction{est.solution.psi, est.smoothed_nu, DualFunction::Role::second, est.p},
      .kernel = est.kernel,
      .k_eval = k_eval,
      .antithetic = true,
      .rng = rng.derive(kTagEvalH),
      .direct = {}};
  const auto hv = eval_smoothed_potential_batch(h, mu_ref.coords());
  double shift = 0.0;
  for (std::size_t i = 0; i < hv.size(); ++i) shift += mu_ref.weight(i) * hv[i];
  out.shift = shift;
  out.phi = est.solution.phi;
  out.psi = est.solution.psi;
  for (double& v : out.phi) v -= shift;
  for (double& v : out.psi) v += shift;

  SmoothedPotential k{
      .base = DualFunction{out.phi, est.smoothed_mu, DualFunction::Role::first, est.p},
      .kernel = est.kernel,
      .k_eval = k_eval,
      .antithetic = true,
      .rng = rng.derive(kTagEvalK),
      .direct = {}};
  const auto kv = eval_smoothed_potential_batch(k, nu_ref.coords());
  for (std::size_t j = 0; j < kv.size(); ++j) out.nu_center += nu_ref.weight(j) * kv[j];
  return out;
}

}  // namespace gsw
