#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gsw/measures.hpp"

namespace gsw {

/// Power cost c_p(x, y) = |x - y|^p with p >= 1.
struct CostSpec {
  double p;
  explicit CostSpec(double order);
  [[nodiscard]] double operator()(std::span<const double> x, std::span<const double> y) const;
};

struct PlanEntry {
  std::size_t i;
  std::size_t j;
  double mass;
};

/// Optimal coupling plus a c-conjugate dual pair. The plan is stored
/// sparsely (an optimal basic plan has at most m + n - 1 nonzero cells),
/// sorted by (i, j).
struct TransportSolution {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<PlanEntry> plan;
  double cost = 0.0;
  std::vector<double> phi;
  std::vector<double> psi;
  double duality_gap = 0.0;

  /// Row-major m x n matrix.
  [[nodiscard]] std::vector<double> dense_plan() const;
};

/// Sum_i w_i phi_i + sum_j v_j psi_j.
double dual_objective(std::span<const double> phi, std::span<const double> psi,
                      const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

struct SolveOptions {
  /// Use the sorted (monotone) exact solver when d == 1; otherwise the
  /// network simplex on the dense cost matrix is used for every instance.
  bool use_1d_solver = true;
  /// Full O(mn) feasibility certification is skipped above this many cells
  /// on the 1-d path (feasibility there holds by construction of the c-transform).
  std::size_t max_certified_cells = 4'000'000;
  std::size_t max_iterations = 0;  // 0 = unlimited
};

/// Exact discrete optimal transport. Throws InvalidInput on dimension
/// mismatch and SolverError when the result cannot be certified.
TransportSolution solve_ot(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                           const CostSpec& cost, const SolveOptions& options = {});

/// Exhaustive search over all N! assignments (N <= 8, equal sizes and
/// weights). Primal only: phi and psi are left empty.
TransportSolution brute_force_ot(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                 const CostSpec& cost);

/// Discrete potential living on the points of one measure.
struct DualFunction {
  enum class Role { first, second };

  std::vector<double> values;
  EmpiricalMeasure support;
  Role role;
  double p;
};

/// x -> min_{y in support} |x - y|^p - f(y), for each row of `queries`
/// (row-major, support dimension). Same formula for either role.
std::vector<double> c_transform(const DualFunction& f, std::span<const double> queries);

/// Lower-level 1-d c-transform. `support` and `queries` must be sorted
/// ascending, `values` aligned with `support`. Uses the monotonicity of
/// row minimizers of the Monge matrix |x - y|^p - f(y).
void c_transform_sorted_1d(std::span<const double> support, std::span<const double> values,
                           std::span<const double> queries, double p, std::span<double> out);

struct SolutionCheck {
  double max_marginal_error = 0.0;
  double max_feasibility_violation = 0.0;  // max(phi_i + psi_j - c_ij), clipped at 0
  double max_slackness_violation = 0.0;    // on cells with positive mass
  double duality_gap = 0.0;
  double min_mass = 0.0;
};

/// Certificate for `sol` against (mu, nu). O(mn).
SolutionCheck check_solution(const TransportSolution& sol, const EmpiricalMeasure& mu,
                             const EmpiricalMeasure& nu, const CostSpec& cost);

/// Empirical growth constant of a dual pair:
/// |phi(x)| + |psi(y)| <= C (1 + M_p(mu) + M_p(nu) + |x|^p + |y|^p) on the supports,
/// minimized over the equivalent pairs (phi - shift, psi + shift).
struct EnvelopeDiagnostic {
  double constant = 0.0;
  double shift = 0.0;
  double moment_mu = 0.0;
  double moment_nu = 0.0;
  double sanity_bound = 0.0;
  bool flagged = false;
};

EnvelopeDiagnostic envelope_check(const TransportSolution& sol, const EmpiricalMeasure& mu,
                                  const EmpiricalMeasure& nu, const CostSpec& cost,
                                  double sanity_bound = 1e6);

}  // namespace gsw
