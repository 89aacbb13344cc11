#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gsw/error.hpp"
#include "gsw/measures.hpp"
#include "gsw/ot_exact.hpp"
#include "gsw/rng.hpp"
#include "network_simplex.hpp"

using namespace gsw;

namespace {

double power_dist(std::span<const double> x, std::span<const double> y, double p) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::pow(std::sqrt(s), p);
}

EmpiricalMeasure random_uniform(std::size_t n, std::size_t d, CounterRng& rng, double scale = 1.0) {
  std::vector<double> c(n * d);
  for (auto& v : c) v = scale * rng.normal();
  return EmpiricalMeasure::uniform(d, std::move(c));
}

EmpiricalMeasure random_weighted(std::size_t n, std::size_t d, CounterRng& rng) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : rows[i]) v = rng.normal();
    w[i] = 0.05 + rng.uniform();
  }
  return empirical_from_rows(rows, w);
}

// Independent 1-d oracle: integral over t of |F^-1(t) - G^-1(t)|^p.
double quantile_coupling_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  auto sorted = [](const EmpiricalMeasure& m) {
    std::vector<std::pair<double, double>> v;
    for (std::size_t i = 0; i < m.size(); ++i) v.emplace_back(m.point(i)[0], m.weight(i));
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto a = sorted(mu), b = sorted(nu);
  std::vector<double> breaks{0.0, 1.0};
  double acc = 0.0;
  for (const auto& e : a) breaks.push_back(acc += e.second);
  acc = 0.0;
  for (const auto& e : b) breaks.push_back(acc += e.second);
  std::sort(breaks.begin(), breaks.end());
  auto quantile = [](const std::vector<std::pair<double, double>>& v, double t) {
    double c = 0.0;
    for (const auto& e : v) {
      c += e.second;
      if (t < c) return e.first;
    }
    return v.back().first;
  };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double len = breaks[k + 1] - breaks[k];
    if (len <= 0.0) continue;
    const double mid = 0.5 * (breaks[k] + breaks[k + 1]);
    total += len * std::pow(std::abs(quantile(a, mid) - quantile(b, mid)), p);
  }
  return total;
}

void require_certified(const TransportSolution& sol, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       double p) {
  const auto chk = check_solution(sol, mu, nu, CostSpec{p});
  const double tol = 1e-9 * (1.0 + sol.cost);
  CHECK(chk.max_marginal_error <= 1e-12);
  CHECK(chk.max_feasibility_violation <= tol);
  CHECK(chk.max_slackness_violation <= tol);
  CHECK(std::abs(chk.duality_gap) <= tol);
  CHECK(chk.min_mass >= 0.0);
}

}  // namespace

TEST_CASE("solve_ot examples") {
  SUBCASE("single pair") {
    const auto sol = solve_ot(EmpiricalMeasure::uniform(2, {0, 0}), EmpiricalMeasure::uniform(2, {3, 4}), CostSpec{2});
    CHECK(sol.cost == doctest::Approx(25.0).epsilon(1e-15));
    REQUIRE(sol.plan.size() == 1);
    CHECK(sol.plan[0].mass == 1.0);
    CHECK(sol.phi[0] + sol.psi[0] == doctest::Approx(25.0).epsilon(1e-14));
  }
  SUBCASE("identical measures") {
    const auto mu = EmpiricalMeasure::uniform(2, {0, 1, 5, 2, -3, 4, 1, 1});
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      for (bool one_d : {true, false}) {
        const auto sol = solve_ot(mu, mu, CostSpec{p}, SolveOptions{one_d});
        CHECK(sol.cost == 0.0);
        const auto dense = sol.dense_plan();
        for (std::size_t i = 0; i < 4; ++i) CHECK(dense[i * 4 + i] == doctest::Approx(0.25));
      }
    }
  }
  SUBCASE("monotone matching in one dimension") {
    const auto mu = EmpiricalMeasure::uniform(1, {0, 1, 2});
    const auto nu = EmpiricalMeasure::uniform(1, {0.5, 1.5, 3});
    CHECK(brute_force_ot(mu, nu, CostSpec{2}).cost == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(solve_ot(mu, nu, CostSpec{2}).cost == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(solve_ot(mu, nu, CostSpec{2}, SolveOptions{false}).cost == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("brute force examples and limits") {
  const auto x = EmpiricalMeasure::uniform(2, {1, 2});
  const auto y = EmpiricalMeasure::uniform(2, {4, 6});
  CHECK(brute_force_ot(x, y, CostSpec{3}).cost == doctest::Approx(125.0).epsilon(1e-14));
  const auto mu = EmpiricalMeasure::uniform(1, {0, 3, 1, 7});
  CHECK(brute_force_ot(mu, mu, CostSpec{1.5}).cost == 0.0);
  CHECK_THROWS_AS(brute_force_ot(EmpiricalMeasure::uniform(1, std::vector<double>(9, 0.0)),
                                 EmpiricalMeasure::uniform(1, std::vector<double>(9, 1.0)), CostSpec{2}),
                  InvalidInput);
  CHECK_THROWS_AS(brute_force_ot(EmpiricalMeasure::uniform(1, {0, 1}), EmpiricalMeasure::uniform(1, {0, 1, 2}),
                                 CostSpec{2}),
                  InvalidInput);
  CHECK_THROWS_AS(brute_force_ot(EmpiricalMeasure(1, {0, 1}, {0.25, 0.75}), EmpiricalMeasure::uniform(1, {0, 1}),
                                 CostSpec{2}),
                  InvalidInput);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(CostSpec{0.5}, InvalidInput);
  CHECK_THROWS_AS(solve_ot(EmpiricalMeasure::uniform(1, {0}), EmpiricalMeasure::uniform(2, {0, 0}), CostSpec{2}),
                  InvalidInput);
}

TEST_CASE("oracle equivalence on small equal-weight instances") {
  CounterRng rng(RngSpec{101, 0});
  for (int t = 0; t < 120; ++t) {
    const std::size_t n = 1 + rng.below(7);
    const std::size_t d = 1 + rng.below(3);
    const double p = std::array<double, 4>{1.0, 1.5, 2.0, 3.0}[rng.below(4)];
    const auto mu = random_uniform(n, d, rng);
    const auto nu = random_uniform(n, d, rng);
    const double oracle = brute_force_ot(mu, nu, CostSpec{p}).cost;
    REQUIRE(std::abs(solve_ot(mu, nu, CostSpec{p}).cost - oracle) <= 1e-10);
    REQUIRE(std::abs(solve_ot(mu, nu, CostSpec{p}, SolveOptions{false}).cost - oracle) <= 1e-10);
  }
}

TEST_CASE("weighted instances against replicated-atom brute force") {
  // weights in multiples of 1/8 so each side expands to 8 equal atoms
  CounterRng rng(RngSpec{102, 0});
  for (int t = 0; t < 40; ++t) {
    const std::size_t d = 1 + rng.below(3);
    const double p = std::array<double, 3>{1.0, 2.0, 2.5}[rng.below(3)];
    auto make = [&](std::size_t k) {
      std::vector<int> counts(k, 1);
      for (std::size_t r = k; r < 8; ++r) ++counts[rng.below(k)];
      std::vector<double> coords, expanded, w;
      for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> pt(d);
        for (auto& v : pt) v = rng.normal();
        coords.insert(coords.end(), pt.begin(), pt.end());
        w.push_back(counts[i] / 8.0);
        for (int c = 0; c < counts[i]; ++c) expanded.insert(expanded.end(), pt.begin(), pt.end());
      }
      return std::pair{EmpiricalMeasure(d, coords, w), EmpiricalMeasure::uniform(d, expanded)};
    };
    const auto [mu, mu8] = make(2 + rng.below(4));
    const auto [nu, nu8] = make(2 + rng.below(5));
    const double oracle = brute_force_ot(mu8, nu8, CostSpec{p}).cost;
    const auto sol = solve_ot(mu, nu, CostSpec{p}, SolveOptions{false});
    CHECK(sol.cost == doctest::Approx(oracle).epsilon(1e-10));
    require_certified(sol, mu, nu, p);
  }
}

TEST_CASE("one-dimensional path against the quantile coupling and the simplex") {
  CounterRng rng(RngSpec{103, 0});
  for (int t = 0; t < 40; ++t) {
    const double p = std::array<double, 4>{1.0, 1.5, 2.0, 3.0}[rng.below(4)];
    const auto mu = random_weighted(1 + rng.below(40), 1, rng);
    const auto nu = random_weighted(1 + rng.below(40), 1, rng);
    const auto fast = solve_ot(mu, nu, CostSpec{p});
    const auto simplex = solve_ot(mu, nu, CostSpec{p}, SolveOptions{false});
    const double oracle = quantile_coupling_1d(mu, nu, p);
    CHECK(fast.cost == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(simplex.cost == doctest::Approx(oracle).epsilon(1e-10));
    require_certified(fast, mu, nu, p);
    require_certified(simplex, mu, nu, p);
  }
}

TEST_CASE("degenerate inputs: duplicates and zero-distance edges") {
  const auto mu = EmpiricalMeasure::uniform(2, {0, 0, 0, 0, 1, 1, 1, 1, 2, 2});
  const auto nu = EmpiricalMeasure(2, {0, 0, 1, 1, 1, 1}, {0.4, 0.3, 0.3});
  for (double p : {1.0, 2.0}) {
    const auto sol = solve_ot(mu, nu, CostSpec{p});
    require_certified(sol, mu, nu, p);
    // one fifth of the mass must travel from (2,2) to (1,1)
    CHECK(sol.cost == doctest::Approx(0.2 * std::pow(std::sqrt(2.0), p)).epsilon(1e-12));
  }
}

TEST_CASE("symmetry, scaling and triangle inequality") {
  CounterRng rng(RngSpec{104, 0});
  for (int t = 0; t < 30; ++t) {
    const std::size_t d = 1 + rng.below(3);
    const double p = std::array<double, 4>{1.0, 1.5, 2.0, 3.0}[rng.below(4)];
    const auto a = random_weighted(3 + rng.below(20), d, rng);
    const auto b = random_weighted(3 + rng.below(20), d, rng);
    const auto c = random_weighted(3 + rng.below(20), d, rng);
    const CostSpec cost{p};
    const double ab = solve_ot(a, b, cost).cost;
    CHECK(std::abs(ab - solve_ot(b, a, cost).cost) <= 1e-10);
    const double lambda = 0.5 + 2.0 * rng.uniform();
    CHECK(solve_ot(a.scaled(lambda), b.scaled(lambda), cost).cost ==
          doctest::Approx(std::pow(lambda, p) * ab).epsilon(1e-9));
    const double w_ab = std::pow(ab, 1.0 / p);
    const double w_bc = std::pow(solve_ot(b, c, cost).cost, 1.0 / p);
    const double w_ac = std::pow(solve_ot(a, c, cost).cost, 1.0 / p);
    CHECK(w_ac <= w_ab + w_bc + 1e-9);
  }
}

TEST_CASE("c_transform examples") {
  const DualFunction single{{0.0}, EmpiricalMeasure::uniform(2, {1.0, -1.0}), DualFunction::Role::second, 2.0};
  const std::vector<double> q{4.0, 3.0, 1.0, -1.0};
  const auto v = c_transform(single, q);
  CHECK(v[0] == 25.0);
  CHECK(v[1] == 0.0);

  const DualFunction two{{0.0, -1.0}, EmpiricalMeasure::uniform(1, {0.0, 2.0}), DualFunction::Role::second, 2.0};
  const std::vector<double> x{1.0};
  CHECK(c_transform(two, x)[0] == 1.0);
  CHECK_THROWS_AS(c_transform(single, std::vector<double>{1.0, 2.0, 3.0}), InvalidInput);
}

TEST_CASE("c_transform feasibility and agreement with enumeration") {
  CounterRng rng(RngSpec{105, 0});
  for (std::size_t d : {1u, 2u}) {
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      const auto support = random_uniform(20, d, rng);
      std::vector<double> psi(20);
      for (auto& v : psi) v = 2.0 * rng.normal();
      std::vector<double> queries(100 * d);
      for (auto& v : queries) v = 2.0 * rng.normal();
      const DualFunction f{psi, support, DualFunction::Role::second, p};
      const auto phi = c_transform(f, queries);
      for (std::size_t i = 0; i < 100; ++i) {
        std::span<const double> x(queries.data() + i * d, d);
        double best = INFINITY;
        for (std::size_t j = 0; j < 20; ++j) {
          const double c = power_dist(x, support.point(j), p);
          REQUIRE(phi[i] + psi[j] <= c + 1e-12 * (1.0 + std::abs(c)));
          best = std::min(best, c - psi[j]);
        }
        REQUIRE(phi[i] == doctest::Approx(best).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("sorted one-dimensional c-transform matches enumeration") {
  CounterRng rng(RngSpec{106, 0});
  for (double p : {1.0, 1.3, 2.0, 4.0}) {
    std::vector<double> support(57), values(57), queries(211), out(211);
    for (auto& v : support) v = 3.0 * rng.normal();
    for (auto& v : values) v = rng.normal();
    for (auto& v : queries) v = 4.0 * rng.normal();
    std::sort(support.begin(), support.end());
    std::sort(queries.begin(), queries.end());
    c_transform_sorted_1d(support, values, queries, p, out);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      double best = INFINITY;
      for (std::size_t j = 0; j < support.size(); ++j)
        best = std::min(best, std::pow(std::abs(queries[i] - support[j]), p) - values[j]);
      REQUIRE(out[i] == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("returned pair is stable under a further conjugation round") {
  CounterRng rng(RngSpec{107, 0});
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 1 + rng.below(3);
    const double p = std::array<double, 3>{1.0, 2.0, 3.0}[rng.below(3)];
    const auto mu = random_weighted(5 + rng.below(30), d, rng);
    const auto nu = random_weighted(5 + rng.below(30), d, rng);
    const auto sol = solve_ot(mu, nu, CostSpec{p});
    const auto psi2 = c_transform(DualFunction{sol.phi, mu, DualFunction::Role::first, p}, nu.coords());
    const auto phi2 = c_transform(DualFunction{psi2, nu, DualFunction::Role::second, p}, mu.coords());
    double dphi = 0.0, dpsi = 0.0;
    for (std::size_t i = 0; i < phi2.size(); ++i) dphi = std::max(dphi, std::abs(phi2[i] - sol.phi[i]));
    for (std::size_t j = 0; j < psi2.size(); ++j) dpsi = std::max(dpsi, std::abs(psi2[j] - sol.psi[j]));
    CHECK(dphi <= 1e-10);
    CHECK(dpsi <= 1e-10);
    CHECK(std::abs(dual_objective(phi2, psi2, mu, nu) - dual_objective(sol.phi, sol.psi, mu, nu)) <= 1e-10);
  }
}

TEST_CASE("dual objective invariant under opposite shifts") {
  CounterRng rng(RngSpec{108, 0});
  const auto mu = random_weighted(17, 2, rng);
  const auto nu = random_weighted(23, 2, rng);
  const auto sol = solve_ot(mu, nu, CostSpec{2});
  const double base = dual_objective(sol.phi, sol.psi, mu, nu);
  for (double t : {-3.0, 0.125, 1e3}) {
    auto phi = sol.phi;
    auto psi = sol.psi;
    for (auto& v : phi) v -= t;
    for (auto& v : psi) v += t;
    CHECK(std::abs(dual_objective(phi, psi, mu, nu) - base) <= 1e-12 * (1.0 + std::abs(t)));
  }
}

TEST_CASE("solutions are deterministic") {
  CounterRng rng(RngSpec{109, 0});
  const auto mu = random_weighted(40, 2, rng);
  const auto nu = random_weighted(35, 2, rng);
  const auto a = solve_ot(mu, nu, CostSpec{1.5});
  const auto b = solve_ot(mu, nu, CostSpec{1.5});
  CHECK(a.cost == b.cost);
  CHECK(a.phi == b.phi);
  CHECK(a.psi == b.psi);
  REQUIRE(a.plan.size() == b.plan.size());
  for (std::size_t k = 0; k < a.plan.size(); ++k) {
    CHECK(a.plan[k].i == b.plan[k].i);
    CHECK(a.plan[k].mass == b.plan[k].mass);
  }
}

TEST_CASE("network simplex core on a hand-checked instance") {
  // supplies (0.5, 0.5), demands (0.25, 0.75); cheapest feasible plan costs 0.25*1 + 0.25*2 + 0.5*1
  const std::vector<double> supply{0.5, 0.5}, demand{0.25, 0.75}, cost{1.0, 2.0, 3.0, 1.0};
  detail::NetworkSimplex ns(supply, demand, cost);
  REQUIRE(ns.run(1000) == detail::NetworkSimplex::Status::optimal);
  CHECK(ns.flow(0) == doctest::Approx(0.25));
  CHECK(ns.flow(1) == doctest::Approx(0.25));
  CHECK(ns.flow(2) == doctest::Approx(0.0));
  CHECK(ns.flow(3) == doctest::Approx(0.5));
  for (std::size_t a : ns.tree_arcs()) {
    const std::size_t i = a / 2, j = a % 2;
    CHECK(cost[a] + ns.potential(i) - ns.potential(2 + j) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("envelope diagnostic") {
  SUBCASE("point masses at the origin") {
    const auto d0 = EmpiricalMeasure::uniform(1, {0.0});
    const auto sol = solve_ot(d0, d0, CostSpec{2});
    const auto env = envelope_check(sol, d0, d0, CostSpec{2});
    CHECK(std::isfinite(env.constant));
    CHECK(env.constant >= 0.0);
    CHECK_FALSE(env.flagged);
  }
  SUBCASE("stable across seeds for separated gaussian samples") {
    double lo = INFINITY, hi = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto mu = sample(LawSpec::gaussian({0.0, 0.0}, 1.0), 100, RngSpec{110, s});
      const auto nu = sample(LawSpec::gaussian({2.0, 0.0}, 1.0), 100, RngSpec{111, s});
      const auto sol = solve_ot(mu, nu, CostSpec{2});
      const auto env = envelope_check(sol, mu, nu, CostSpec{2});
      REQUIRE(std::isfinite(env.constant));
      lo = std::min(lo, env.constant);
      hi = std::max(hi, env.constant);
    }
    CHECK(hi <= 2.0 * lo);
  }
  SUBCASE("inequality holds after rescaling with recomputed moments") {
    const auto mu = sample(LawSpec::gaussian({0.0}, 1.0), 60, RngSpec{112, 0});
    const auto nu = sample(LawSpec::gaussian({1.5}, 2.0), 70, RngSpec{112, 1});
    for (double lambda : {1.0, 2.0}) {
      const auto a = mu.scaled(lambda), b = nu.scaled(lambda);
      const auto sol = solve_ot(a, b, CostSpec{2});
      const auto env = envelope_check(sol, a, b, CostSpec{2});
      const double ma = moment(a, MomentOrder{2}), mb = moment(b, MomentOrder{2});
      CHECK(env.moment_mu == doctest::Approx(ma));
      CHECK(env.moment_nu == doctest::Approx(mb));
      for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
          const double x2 = a.point(i)[0] * a.point(i)[0], y2 = b.point(j)[0] * b.point(j)[0];
          REQUIRE(std::abs(sol.phi[i] - env.shift) + std::abs(sol.psi[j] + env.shift) <=
                  env.constant * (1.0 + ma + mb + x2 + y2) * (1.0 + 1e-12));
        }
    }
  }
  SUBCASE("sanity bound flags without throwing") {
    const auto mu = EmpiricalMeasure::uniform(1, {0.0, 100.0});
    const auto nu = EmpiricalMeasure::uniform(1, {-100.0, 0.5});
    const auto sol = solve_ot(mu, nu, CostSpec{2});
    const auto env = envelope_check(sol, mu, nu, CostSpec{2}, 1e-6);
    CHECK(env.flagged);
  }
}
