#include "gsw/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gsw/error.hpp"

namespace gsw {

namespace {
constexpr std::uint64_t kTagNoiseMu = 0x6d75;  // "mu"
constexpr std::uint64_t kTagNoiseNu = 0x6e75;  // "nu"
constexpr std::uint64_t kTagShared = 0x7368;
}  // namespace

void KernelSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("kernel bandwidth sigma must be positive");
}

void KernelSpec::draw(CounterRng& rng, std::span<double> out) const {
  switch (family) {
    case Family::gaussian:
      for (double& z : out) z = sigma * rng.normal();
      break;
    case Family::laplace_product:
      for (double& z : out) z = sigma * std::numbers::sqrt2 * 0.5 * rng.laplace();
      break;
  }
}

std::string format_kernel_family(KernelSpec::Family family) {
  return family == KernelSpec::Family::gaussian ? "gaussian" : "laplace-product";
}

KernelSpec::Family parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelSpec::Family::gaussian;
  if (name == "laplace-product" || name == "laplace") return KernelSpec::Family::laplace_product;
  throw InvalidInput("unknown kernel family '" + name + "'");
}

void SmoothingPlan::validate() const {
  if (k == 0) throw InvalidInput("noise draws per point k must be >= 1");
}

EmpiricalMeasure smooth_measure(const EmpiricalMeasure& mu, const KernelSpec& kernel, std::size_t k,
                                RngSpec spec) {
  kernel.validate();
  if (k == 0) throw InvalidInput("noise draws per point k must be >= 1");
  const std::size_t d = mu.dim();
  const std::size_t n = mu.size();
  CounterRng rng(spec);
  std::vector<double> coords(n * k * d);
  std::vector<double> weights(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = mu.point(i);
    for (std::size_t l = 0; l < k; ++l) {
      std::span<double> out(coords.data() + (i * k + l) * d, d);
      kernel.draw(rng, out);
      for (std::size_t c = 0; c < d; ++c) out[c] += x[c];
      weights[i * k + l] = mu.weight(i) / static_cast<double>(k);
    }
  }
  if (mu.equal_weights()) return EmpiricalMeasure::uniform(d, std::move(coords));
  // Renormalize away the rounding of w_i / k.
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  return EmpiricalMeasure(d, std::move(coords), std::move(weights));
}

EmpiricalMeasure smooth_measure(const EmpiricalMeasure& mu, const KernelSpec& kernel,
                                const SmoothingPlan& plan) {
  plan.validate();
  return smooth_measure(mu, kernel, plan.k, plan.rng);
}

SmoothedCostEstimate estimate_smoothed_cost(const EmpiricalMeasure& mu_m, const EmpiricalMeasure& nu_n,
                                            const KernelSpec& kernel, const CostSpec& cost,
                                            const SmoothingPlan& plan) {
  if (mu_m.dim() != nu_n.dim()) throw InvalidInput("dimension mismatch between samples");
  plan.validate();
  const RngSpec rng_mu = plan.paired ? plan.rng.derive(kTagShared) : plan.rng.derive(kTagNoiseMu);
  const RngSpec rng_nu = plan.paired ? plan.rng.derive(kTagShared) : plan.rng.derive(kTagNoiseNu);
  EmpiricalMeasure smu = smooth_measure(mu_m, kernel, plan.k, rng_mu);
  EmpiricalMeasure snu = smooth_measure(nu_n, kernel, plan.k, rng_nu);
  TransportSolution sol = solve_ot(smu, snu, cost);
  const double value = std::max(sol.cost, 0.0);
  return SmoothedCostEstimate{
      .value = value,
      .distance = std::pow(value, 1.0 / cost.p),
      .m = mu_m.size(),
      .n = nu_n.size(),
      .k = plan.k,
      .kernel = kernel,
      .p = cost.p,
      .solution = std::move(sol),
      .smoothed_mu = std::move(smu),
      .smoothed_nu = std::move(snu),
  };
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> kernel_draws(const SmoothedPotential& pot, std::size_t d) {
  CounterRng rng(pot.rng);
  const std::size_t evals = pot.evaluations();
  std::vector<double> z(evals * d);
  if (pot.antithetic) {
    for (std::size_t l = 0; l < evals / 2; ++l) {
      std::span<double> plus(z.data() + 2 * l * d, d);
      pot.kernel.draw(rng, plus);
      for (std::size_t c = 0; c < d; ++c) z[(2 * l + 1) * d + c] = -plus[c];
    }
  } else {
    for (std::size_t l = 0; l < evals; ++l) pot.kernel.draw(rng, std::span<double>(z.data() + l * d, d));
  }
  return z;
}

}  // namespace

std::vector<double> eval_smoothed_potential_batch(const SmoothedPotential& pot,
                                                  std::span<const double> xs) {
  pot.kernel.validate();
  if (pot.k_eval == 0) throw InvalidInput("k_eval must be >= 1");
  const std::size_t d = pot.base.support.dim();
  if (xs.size() % d != 0) throw InvalidInput("query dimension mismatch");
  const std::size_t nq = xs.size() / d;
  const std::size_t evals = pot.evaluations();
  const auto z = kernel_draws(pot, d);
  std::vector<double> acc(nq, 0.0);

  if (pot.direct) {
    std::vector<double> shifted(d);
    for (std::size_t q = 0; q < nq; ++q) {
      for (std::size_t l = 0; l < evals; ++l) {
        for (std::size_t c = 0; c < d; ++c) shifted[c] = xs[q * d + c] + z[l * d + c];
        acc[q] += pot.direct(shifted);
      }
    }
  } else if (d == 1) {
    const auto& sup = pot.base.support;
    const std::size_t s = sup.size();
    if (pot.base.values.size() != s) throw InvalidInput("potential size does not match its support");
    std::vector<std::size_t> so(s), qo(nq);
    std::iota(so.begin(), so.end(), std::size_t{0});
    std::iota(qo.begin(), qo.end(), std::size_t{0});
    const auto sc = sup.coords();
    std::stable_sort(so.begin(), so.end(), [&](auto a, auto b) { return sc[a] < sc[b]; });
    std::stable_sort(qo.begin(), qo.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::vector<double> ys(s), fv(s), sorted_x(nq), shifted(nq), vals(nq), sorted_acc(nq, 0.0);
    for (std::size_t k = 0; k < s; ++k) {
      ys[k] = sc[so[k]];
      fv[k] = pot.base.values[so[k]];
    }
    for (std::size_t k = 0; k < nq; ++k) sorted_x[k] = xs[qo[k]];
    for (std::size_t l = 0; l < evals; ++l) {
      for (std::size_t k = 0; k < nq; ++k) shifted[k] = sorted_x[k] + z[l];
      c_transform_sorted_1d(ys, fv, shifted, pot.base.p, vals);
      for (std::size_t k = 0; k < nq; ++k) sorted_acc[k] += vals[k];
    }
    for (std::size_t k = 0; k < nq; ++k) acc[qo[k]] = sorted_acc[k];
  } else {
    std::vector<double> shifted(nq * d);
    for (std::size_t l = 0; l < evals; ++l) {
      for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t c = 0; c < d; ++c) shifted[q * d + c] = xs[q * d + c] + z[l * d + c];
      const auto vals = c_transform(pot.base, shifted);
      for (std::size_t q = 0; q < nq; ++q) acc[q] += vals[q];
    }
  }
  const double inv = 1.0 / static_cast<double>(evals);
  for (double& a : acc) a *= inv;
  return acc;
}

double eval_smoothed_potential(const SmoothedPotential& pot, std::span<const double> x) {
  return eval_smoothed_potential_batch(pot, x).front();
}

// ---------------------------------------------------------------------------

namespace {

EmpiricalMeasure concat_support(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  std::vector<double> coords(a.coords().begin(), a.coords().end());
  coords.insert(coords.end(), b.coords().begin(), b.coords().end());
  return EmpiricalMeasure::uniform(a.dim(), std::move(coords));
}

// Extends an optimal pair (phi on src, psi on tgt) to a pair feasible on
// ux x uy that still agrees with the optimal values on the original supports.
std::pair<std::vector<double>, std::vector<double>> extend_pair(const TransportSolution& sol,
                                                                const EmpiricalMeasure& tgt,
                                                                const EmpiricalMeasure& ux,
                                                                const EmpiricalMeasure& uy,
                                                                double p) {
  DualFunction psi{sol.psi, tgt, DualFunction::Role::second, p};
  auto phi_ext = c_transform(psi, ux.coords());
  DualFunction phi{phi_ext, ux, DualFunction::Role::first, p};
  auto psi_ext = c_transform(phi, uy.coords());
  return {std::move(phi_ext), std::move(psi_ext)};
}

double signed_increment(std::span<const double> f, const EmpiricalMeasure& tilde,
                        const EmpiricalMeasure& ref) {
  double acc = 0.0;
  for (std::size_t i = 0; i < tilde.size(); ++i) acc += tilde.weight(i) * f[i];
  for (std::size_t i = 0; i < ref.size(); ++i) acc -= ref.weight(i) * f[tilde.size() + i];
  return acc;
}

}  // namespace

double dual_reduction_bound(const TransportSolution& sol_pop, const TransportSolution& sol_emp,
                            const EmpiricalMeasure& mu_m, const EmpiricalMeasure& mu_ref,
                            const EmpiricalMeasure& nu_n, const EmpiricalMeasure& nu_ref,
                            const CostSpec& cost) {
  const std::size_t d = mu_m.dim();
  if (mu_ref.dim() != d || nu_n.dim() != d || nu_ref.dim() != d)
    throw InvalidInput("dimension mismatch between the four measures");
  if (sol_emp.phi.size() != mu_m.size() || sol_emp.psi.size() != nu_n.size() ||
      sol_pop.phi.size() != mu_ref.size() || sol_pop.psi.size() != nu_ref.size())
    throw InvalidInput("dual potentials do not match the measures");
  const auto ux = concat_support(mu_m, mu_ref);
  const auto uy = concat_support(nu_n, nu_ref);
  double bound = 0.0;
  for (const auto* pair : {&sol_emp, &sol_pop}) {
    const auto& tgt = pair == &sol_emp ? nu_n : nu_ref;
    const auto [phi, psi] = extend_pair(*pair, tgt, ux, uy, cost.p);
    const double v = signed_increment(phi, mu_m, mu_ref) + signed_increment(psi, nu_n, nu_ref);
    bound = std::max(bound, std::abs(v));
  }
  return bound;
}

}  // namespace gsw
