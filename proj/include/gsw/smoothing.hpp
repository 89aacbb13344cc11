#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gsw/measures.hpp"
#include "gsw/ot_exact.hpp"
#include "gsw/rng.hpp"

namespace gsw {

/// Smoothing kernel. `sigma` is the per-coordinate standard deviation:
/// gaussian is N(0, sigma^2 I_d); laplace_product has i.i.d. Laplace
/// coordinates of scale sigma / sqrt(2) and is only meant for rate experiments.
struct KernelSpec {
  enum class Family { gaussian, laplace_product };

  Family family = Family::gaussian;
  double sigma = 1.0;

  void validate() const;
  [[nodiscard]] bool is_gaussian() const noexcept { return family == Family::gaussian; }
  /// One kernel draw into `out`.
  void draw(CounterRng& rng, std::span<double> out) const;
};

std::string format_kernel_family(KernelSpec::Family family);
KernelSpec::Family parse_kernel_family(const std::string& name);

/// Noise-injection discretization of the convolution: k draws per atom.
struct SmoothingPlan {
  std::size_t k = 1;
  RngSpec rng{};
  /// Shared noise: both measures are smoothed from the same stream, so
  /// point i of either measure receives the same k draws.
  bool paired = false;

  void validate() const;
};

/// mu * kernel realized as x_i + z_{i,l}, l < k, each with weight w_i / k.
EmpiricalMeasure smooth_measure(const EmpiricalMeasure& mu, const KernelSpec& kernel,
                                std::size_t k, RngSpec rng);
EmpiricalMeasure smooth_measure(const EmpiricalMeasure& mu, const KernelSpec& kernel,
                                const SmoothingPlan& plan);

struct SmoothedCostEstimate {
  double value = 0.0;     // plug-in smoothed cost
  double distance = 0.0;  // value^(1/p)
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  KernelSpec kernel;
  double p = 2.0;
  TransportSolution solution;
  EmpiricalMeasure smoothed_mu;
  EmpiricalMeasure smoothed_nu;
};

/// Smooths both samples and solves the exact problem between the clouds.
SmoothedCostEstimate estimate_smoothed_cost(const EmpiricalMeasure& mu_m, const EmpiricalMeasure& nu_n,
                                            const KernelSpec& kernel, const CostSpec& cost,
                                            const SmoothingPlan& plan);

/// Monte Carlo evaluation of x -> E f(x + Z), where f is the c-transform of
/// `base` (the potential on the opposite side) and Z follows `kernel`. The
/// k_eval draws are shared by every evaluation point, so the estimate is a
/// fixed function of x for a given rng.
struct SmoothedPotential {
  DualFunction base;
  KernelSpec kernel;
  std::size_t k_eval = 256;
  bool antithetic = true;
  RngSpec rng{};
  /// Replaces the c-transform of `base` when set (tests and diagnostics).
  std::function<double(std::span<const double>)> direct;

  /// Number of integrand evaluations per point (k_eval rounded up to even when antithetic).
  [[nodiscard]] std::size_t evaluations() const noexcept {
    return antithetic ? 2 * ((k_eval + 1) / 2) : k_eval;
  }
};

double eval_smoothed_potential(const SmoothedPotential& pot, std::span<const double> x);
/// Row-major batch; identical values to calling the single-point form per row.
std::vector<double> eval_smoothed_potential_batch(const SmoothedPotential& pot,
                                                  std::span<const double> xs);

/// Finite-measure form of the two-sample dual reduction: the largest of
/// |phi d(mu_m - mu_ref) + psi d(nu_n - nu_ref)| over the two optimal pairs,
/// each extended by c-transforms to a pair feasible on the union supports.
/// Bounds |sol_emp.cost - sol_pop.cost| from above.
double dual_reduction_bound(const TransportSolution& sol_pop, const TransportSolution& sol_emp,
                            const EmpiricalMeasure& mu_m, const EmpiricalMeasure& mu_ref,
                            const EmpiricalMeasure& nu_n, const EmpiricalMeasure& nu_ref,
                            const CostSpec& cost);

}  // namespace gsw
