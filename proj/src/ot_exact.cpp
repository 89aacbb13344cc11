#include "gsw/ot_exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gsw/error.hpp"
#include "gsw/simd/kernels.hpp"
#include "network_simplex.hpp"

namespace gsw {

CostSpec::CostSpec(double order) : p(order) {
  if (!(order >= 1.0) || !std::isfinite(order)) throw InvalidInput("transport order p must be >= 1");
}

double CostSpec::operator()(std::span<const double> x, std::span<const double> y) const {
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    sq += diff * diff;
  }
  return simd::power_from_sq(sq, p);
}

std::vector<double> TransportSolution::dense_plan() const {
  std::vector<double> out(m * n, 0.0);
  for (const auto& e : plan) out[e.i * n + e.j] += e.mass;
  return out;
}

double dual_objective(std::span<const double> phi, std::span<const double> psi,
                      const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) acc += mu.weight(i) * phi[i];
  for (std::size_t j = 0; j < nu.size(); ++j) acc += nu.weight(j) * psi[j];
  return acc;
}

namespace {

double tolerance_for(double cost) { return 1e-9 * (1.0 + std::abs(cost)); }

std::vector<std::size_t> sorted_order_1d(const EmpiricalMeasure& mu) {
  std::vector<std::size_t> order(mu.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto c = mu.coords();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return c[a] < c[b]; });
  return order;
}

inline double cost_1d(double x, double y, double p) {
  const double diff = x - y;
  return simd::power_from_sq(diff * diff, p);
}

double plan_cost(const std::vector<PlanEntry>& plan, const EmpiricalMeasure& mu,
                 const EmpiricalMeasure& nu, const CostSpec& cost) {
  double acc = 0.0;
  for (const auto& e : plan) acc += e.mass * cost(mu.point(e.i), nu.point(e.j));
  return acc;
}

void certify(const TransportSolution& sol, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
             const CostSpec& cost, bool full_feasibility) {
  const double tol = tolerance_for(sol.cost);
  std::vector<double> row(sol.m, 0.0), col(sol.n, 0.0);
  for (const auto& e : sol.plan) {
    if (e.mass < 0.0) throw SolverError("negative mass in transport plan");
    row[e.i] += e.mass;
    col[e.j] += e.mass;
    const double slack = cost(mu.point(e.i), nu.point(e.j)) - sol.phi[e.i] - sol.psi[e.j];
    if (std::abs(slack) > tol)
      throw SolverError("complementary slackness violated by " + std::to_string(slack));
  }
  for (std::size_t i = 0; i < sol.m; ++i)
    if (std::abs(row[i] - mu.weight(i)) > 1e-12) throw SolverError("source marginal mismatch");
  for (std::size_t j = 0; j < sol.n; ++j)
    if (std::abs(col[j] - nu.weight(j)) > 1e-12) throw SolverError("target marginal mismatch");
  if (sol.duality_gap > tol)
    throw SolverError("duality gap " + std::to_string(sol.duality_gap) + " above tolerance");
  if (full_feasibility) {
    const auto check = check_solution(sol, mu, nu, cost);
    if (check.max_feasibility_violation > tol)
      throw SolverError("dual feasibility violated by " +
                        std::to_string(check.max_feasibility_violation));
  }
}

// Monotone 1-d transport: the north-west corner rule on sorted supports is
// optimal for every convex cost of x - y. Duals come from the staircase basis.
TransportSolution solve_sorted_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  const std::size_t m = mu.size();
  const std::size_t n = nu.size();
  const auto ox = sorted_order_1d(mu);
  const auto oy = sorted_order_1d(nu);
  const auto xc = mu.coords();
  const auto yc = nu.coords();

  TransportSolution sol;
  sol.m = m;
  sol.n = n;
  sol.phi.assign(m, 0.0);
  sol.psi.assign(n, 0.0);
  sol.plan.reserve(m + n - 1);

  std::size_t i = 0, j = 0;
  double a = mu.weight(ox[0]);
  double b = nu.weight(oy[0]);
  sol.phi[ox[0]] = 0.0;
  sol.psi[oy[0]] = cost_1d(xc[ox[0]], yc[oy[0]], p);
  for (;;) {
    double mass;
    if (i + 1 == m)
      mass = b;
    else if (j + 1 == n)
      mass = a;
    else
      mass = std::min(a, b);
    if (mass > 0.0) sol.plan.push_back({ox[i], oy[j], mass});
    a -= mass;
    b -= mass;
    if (i + 1 == m && j + 1 == n) break;
    const bool advance_source = (j + 1 == n) || (i + 1 < m && a <= b);
    if (advance_source) {
      ++i;
      a = mu.weight(ox[i]);
      sol.phi[ox[i]] = cost_1d(xc[ox[i]], yc[oy[j]], p) - sol.psi[oy[j]];
    } else {
      ++j;
      b = nu.weight(oy[j]);
      sol.psi[oy[j]] = cost_1d(xc[ox[i]], yc[oy[j]], p) - sol.phi[ox[i]];
    }
  }

  // One conjugation round: psi <- phi^c, then phi <- psi^c.
  std::vector<double> xs(m), ys(n), fx(m), fy(n), tmp_y(n), tmp_x(m);
  for (std::size_t k = 0; k < m; ++k) {
    xs[k] = xc[ox[k]];
    fx[k] = sol.phi[ox[k]];
  }
  for (std::size_t k = 0; k < n; ++k) ys[k] = yc[oy[k]];
  c_transform_sorted_1d(xs, fx, ys, p, tmp_y);
  for (std::size_t k = 0; k < n; ++k) {
    sol.psi[oy[k]] = tmp_y[k];
    fy[k] = tmp_y[k];
  }
  c_transform_sorted_1d(ys, fy, xs, p, tmp_x);
  for (std::size_t k = 0; k < m; ++k) sol.phi[ox[k]] = tmp_x[k];

  std::sort(sol.plan.begin(), sol.plan.end(), [](const PlanEntry& l, const PlanEntry& r) {
    return l.i != r.i ? l.i < r.i : l.j < r.j;
  });
  return sol;
}

TransportSolution solve_network_simplex(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                        const CostSpec& cost, const SolveOptions& options) {
  const std::size_t m = mu.size();
  const std::size_t n = nu.size();
  const std::size_t d = mu.dim();
  const auto& kernels = simd::active_kernels();

  std::vector<double> matrix(m * n);
  for (std::size_t i = 0; i < m; ++i)
    kernels.power_cost_row(mu.point(i), nu.coords(), d, cost.p,
                           std::span<double>(matrix.data() + i * n, n));

  detail::NetworkSimplex simplex(mu.weights(), nu.weights(), matrix);
  const auto status = simplex.run(options.max_iterations);
  if (status == detail::NetworkSimplex::Status::iteration_limit)
    throw SolverError("network simplex hit the iteration limit");
  if (status == detail::NetworkSimplex::Status::infeasible)
    throw SolverError("network simplex ended with flow on artificial arcs");

  TransportSolution sol;
  sol.m = m;
  sol.n = n;
  for (std::size_t arc : simplex.tree_arcs()) {
    const double f = simplex.flow(arc);
    if (f > 0.0) sol.plan.push_back({arc / n, arc % n, f});
  }
  sol.phi.resize(m);
  sol.psi.resize(n);
  for (std::size_t i = 0; i < m; ++i) sol.phi[i] = -simplex.potential(i);
  for (std::size_t j = 0; j < n; ++j) sol.psi[j] = simplex.potential(m + j);

  // Conjugation round on the dense matrix.
  std::vector<double> colmin(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = matrix.data() + i * n;
    const double f = sol.phi[i];
    for (std::size_t j = 0; j < n; ++j) colmin[j] = std::min(colmin[j], row[j] - f);
  }
  sol.psi = std::move(colmin);
  for (std::size_t i = 0; i < m; ++i)
    sol.phi[i] = kernels.min_minus(std::span<const double>(matrix.data() + i * n, n), sol.psi).value;
  return sol;
}

}  // namespace

TransportSolution solve_ot(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                           const CostSpec& cost, const SolveOptions& options) {
  if (mu.dim() != nu.dim())
    throw InvalidInput("dimension mismatch: " + std::to_string(mu.dim()) + " vs " +
                       std::to_string(nu.dim()));
  const bool one_d = mu.dim() == 1 && options.use_1d_solver;
  TransportSolution sol =
      one_d ? solve_sorted_1d(mu, nu, cost.p) : solve_network_simplex(mu, nu, cost, options);
  sol.cost = plan_cost(sol.plan, mu, nu, cost);
  sol.duality_gap = std::abs(dual_objective(sol.phi, sol.psi, mu, nu) - sol.cost);
  const bool full = !one_d || mu.size() * nu.size() <= options.max_certified_cells;
  certify(sol, mu, nu, cost, full);
  return sol;
}

TransportSolution brute_force_ot(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                 const CostSpec& cost) {
  if (mu.dim() != nu.dim()) throw InvalidInput("dimension mismatch");
  const std::size_t n = mu.size();
  if (nu.size() != n) throw InvalidInput("brute force requires equal sample sizes");
  if (n > 8) throw InvalidInput("brute force limited to N <= 8");
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(mu.weight(i) - w) > 1e-15 || std::abs(nu.weight(i) - w) > 1e-15)
      throw InvalidInput("brute force requires equal weights");

  std::vector<double> matrix(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) matrix[i * n + j] = cost(mu.point(i), nu.point(j));

  std::vector<std::size_t> perm(n), best;
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += matrix[i * n + perm[i]];
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  TransportSolution sol;
  sol.m = sol.n = n;
  for (std::size_t i = 0; i < n; ++i) sol.plan.push_back({i, best[i], w});
  sol.cost = best_cost * w;
  return sol;
}

void c_transform_sorted_1d(std::span<const double> support, std::span<const double> values,
                           std::span<const double> queries, double p, std::span<double> out) {
  const std::size_t q = queries.size();
  if (q == 0) return;
  if (support.empty()) throw InvalidInput("c-transform of an empty support");
  // Leftmost row minimizers of a Monge matrix are nondecreasing, so each
  // query range inherits a bracket from its midpoint.
  struct Frame {
    std::size_t qlo, qhi, slo, shi;
  };
  std::vector<Frame> stack;
  stack.push_back({0, q, 0, support.size() - 1});
  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();
    if (fr.qlo >= fr.qhi) continue;
    const std::size_t mid = fr.qlo + (fr.qhi - fr.qlo) / 2;
    const double x = queries[mid];
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = fr.slo;
    for (std::size_t s = fr.slo; s <= fr.shi; ++s) {
      const double v = cost_1d(x, support[s], p) - values[s];
      if (v < best) {
        best = v;
        arg = s;
      }
    }
    out[mid] = best;
    stack.push_back({fr.qlo, mid, fr.slo, arg});
    stack.push_back({mid + 1, fr.qhi, arg, fr.shi});
  }
}

std::vector<double> c_transform(const DualFunction& f, std::span<const double> queries) {
  const std::size_t d = f.support.dim();
  const std::size_t s = f.support.size();
  if (s == 0) throw InvalidInput("c-transform of an empty support");
  if (f.values.size() != s) throw InvalidInput("potential size does not match its support");
  if (queries.size() % d != 0) throw InvalidInput("query dimension mismatch");
  const std::size_t nq = queries.size() / d;
  std::vector<double> out(nq);

  if (d == 1) {
    // Sort support and queries, sweep, scatter back.
    std::vector<std::size_t> so(s), qo(nq);
    std::iota(so.begin(), so.end(), std::size_t{0});
    std::iota(qo.begin(), qo.end(), std::size_t{0});
    const auto sc = f.support.coords();
    std::stable_sort(so.begin(), so.end(), [&](auto a, auto b) { return sc[a] < sc[b]; });
    std::stable_sort(qo.begin(), qo.end(), [&](auto a, auto b) { return queries[a] < queries[b]; });
    std::vector<double> ys(s), fv(s), xs(nq), res(nq);
    for (std::size_t k = 0; k < s; ++k) {
      ys[k] = sc[so[k]];
      fv[k] = f.values[so[k]];
    }
    for (std::size_t k = 0; k < nq; ++k) xs[k] = queries[qo[k]];
    c_transform_sorted_1d(ys, fv, xs, f.p, res);
    for (std::size_t k = 0; k < nq; ++k) out[qo[k]] = res[k];
    return out;
  }

  const auto& kernels = simd::active_kernels();
  std::vector<double> row(s);
  for (std::size_t k = 0; k < nq; ++k) {
    kernels.power_cost_row(queries.subspan(k * d, d), f.support.coords(), d, f.p, row);
    out[k] = kernels.min_minus(row, f.values).value;
  }
  return out;
}

SolutionCheck check_solution(const TransportSolution& sol, const EmpiricalMeasure& mu,
                             const EmpiricalMeasure& nu, const CostSpec& cost) {
  SolutionCheck check;
  std::vector<double> row(sol.m, 0.0), col(sol.n, 0.0);
  check.min_mass = std::numeric_limits<double>::infinity();
  for (const auto& e : sol.plan) {
    row[e.i] += e.mass;
    col[e.j] += e.mass;
    check.min_mass = std::min(check.min_mass, e.mass);
    if (e.mass > 0.0 && !sol.phi.empty()) {
      const double slack = cost(mu.point(e.i), nu.point(e.j)) - sol.phi[e.i] - sol.psi[e.j];
      check.max_slackness_violation = std::max(check.max_slackness_violation, std::abs(slack));
    }
  }
  for (std::size_t i = 0; i < sol.m; ++i)
    check.max_marginal_error = std::max(check.max_marginal_error, std::abs(row[i] - mu.weight(i)));
  for (std::size_t j = 0; j < sol.n; ++j)
    check.max_marginal_error = std::max(check.max_marginal_error, std::abs(col[j] - nu.weight(j)));
  if (sol.phi.empty()) return check;

  const auto& kernels = simd::active_kernels();
  std::vector<double> c(sol.n);
  for (std::size_t i = 0; i < sol.m; ++i) {
    kernels.power_cost_row(mu.point(i), nu.coords(), mu.dim(), cost.p, c);
    for (std::size_t j = 0; j < sol.n; ++j)
      check.max_feasibility_violation =
          std::max(check.max_feasibility_violation, sol.phi[i] + sol.psi[j] - c[j]);
  }
  check.duality_gap = std::abs(dual_objective(sol.phi, sol.psi, mu, nu) - sol.cost);
  return check;
}

EnvelopeDiagnostic envelope_check(const TransportSolution& sol, const EmpiricalMeasure& mu,
                                  const EmpiricalMeasure& nu, const CostSpec& cost,
                                  double sanity_bound) {
  EnvelopeDiagnostic diag;
  diag.sanity_bound = sanity_bound;
  diag.moment_mu = moment(mu, MomentOrder(cost.p));
  diag.moment_nu = moment(nu, MomentOrder(cost.p));
  const double base = 1.0 + diag.moment_mu + diag.moment_nu;
  auto norm_p = [&](std::span<const double> x) {
    double sq = 0.0;
    for (double c : x) sq += c * c;
    return simd::power_from_sq(sq, cost.p);
  };
  std::vector<double> xp(mu.size()), yp(nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) xp[i] = norm_p(mu.point(i));
  for (std::size_t j = 0; j < nu.size(); ++j) yp[j] = norm_p(nu.point(j));
  auto ratio_at = [&](double t) {
    double worst = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double a = std::abs(sol.phi[i] - t);
      const double denom_i = base + xp[i];
      for (std::size_t j = 0; j < nu.size(); ++j)
        worst = std::max(worst, (a + std::abs(sol.psi[j] + t)) / (denom_i + yp[j]));
    }
    return worst;
  };
  // The ratio is convex in the shift t and nondecreasing outside [lo, hi].
  const auto [phi_lo, phi_hi] = std::minmax_element(sol.phi.begin(), sol.phi.end());
  const auto [psi_lo, psi_hi] = std::minmax_element(sol.psi.begin(), sol.psi.end());
  double lo = std::min(*phi_lo, -*psi_hi);
  double hi = std::max(*phi_hi, -*psi_lo);
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double t1 = hi - golden * (hi - lo), t2 = lo + golden * (hi - lo);
  double f1 = ratio_at(t1), f2 = ratio_at(t2);
  for (int it = 0; it < 80 && hi - lo > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    if (f1 <= f2) {
      hi = t2;
      t2 = t1;
      f2 = f1;
      t1 = hi - golden * (hi - lo);
      f1 = ratio_at(t1);
    } else {
      lo = t1;
      t1 = t2;
      f1 = f2;
      t2 = lo + golden * (hi - lo);
      f2 = ratio_at(t2);
    }
  }
  diag.shift = f1 <= f2 ? t1 : t2;
  const double worst = std::min(f1, f2);
  diag.constant = worst;
  diag.flagged = !(worst <= sanity_bound);
  return diag;
}

}  // namespace gsw
