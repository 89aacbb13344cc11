#include <doctest.h>

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gsw/error.hpp"
#include "gsw/experiments.hpp"
#include "gsw/normal.hpp"

using namespace gsw;

namespace {

// W2^2 between N(a, sa^2) and N(b, sb^2) by integrating the quantile coupling
// (F^-1(t) - G^-1(t))^2 over t, written in the normal-score variable z.
double quantile_coupling_w2(double a, double sa, double b, double sb) {
  const double lo = -12.0, hi = 12.0;
  const int steps = 200000;
  const double h = (hi - lo) / steps;
  double acc = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double z = lo + i * h;
    const double t = 0.5 * std::erfc(-z / std::sqrt(2.0));
    const boost::math::normal_distribution<double> fa(a, sa), fb(b, sb);
    double diff;
    if (t <= 0.0 || t >= 1.0)
      diff = (a - b) + (sa - sb) * z;
    else
      diff = boost::math::quantile(fa, t) - boost::math::quantile(fb, t);
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * diff * diff * std::exp(-0.5 * z * z);
  }
  return acc * h / 3.0 / std::sqrt(2.0 * M_PI);
}

RateExperimentConfig gaussian_rate_config() {
  RateExperimentConfig c;
  c.law_mu = LawSpec::gaussian({0.0}, 1.0);
  c.law_nu = LawSpec::gaussian({1.0}, 1.0);
  c.kernel = KernelSpec{KernelSpec::Family::gaussian, 1.0};
  c.sizes = {100, 200, 400, 800, 1600};
  c.replications = 50;
  c.seed = RngSpec{51, 0};
  return c;
}

}  // namespace

TEST_CASE("gaussian W2 oracle") {
  const std::vector<double> a{0.5, -1.0}, b{1.5, 1.0};
  CHECK(gaussian_w2_oracle(a, a, 2.0, 2.0, 0.7, 2) == 0.0);
  CHECK(gaussian_w2_oracle(a, b, 2.0, 2.0, 0.7, 2) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(gaussian_w2_oracle(std::vector<double>{0.0}, std::vector<double>{2.0}, 1.0, 4.0, 0.0, 1) == 5.0);
  CHECK(std::abs(quantile_coupling_w2(0.0, 1.0, 2.0, 2.0) - 5.0) < 1e-6);
  const double s = 0.8;
  CHECK(std::abs(gaussian_w2_oracle(std::vector<double>{0.0}, std::vector<double>{2.0}, 1.0, 4.0, s, 1) -
                 quantile_coupling_w2(0.0, std::sqrt(1.0 + s * s), 2.0, std::sqrt(4.0 + s * s))) < 1e-6);
  CHECK_THROWS_AS(gaussian_w2_oracle(a, b, -1.0, 2.0, 0.0, 2), InvalidInput);
  CHECK_THROWS_AS(gaussian_w2_oracle(a, b, 1.0, 2.0, 0.0, 3), InvalidInput);
}

TEST_CASE("log-log fit") {
  const std::vector<double> x{10, 20, 40, 80};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.7));
  const auto fit = fit_log_log(x, y);
  CHECK(fit.slope == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(fit.slope_se == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_log_log(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InvalidInput);
  CHECK_THROWS_AS(fit_log_log(std::vector<double>{1, 2, 3}, std::vector<double>{1, 0, 2}), InvalidInput);
}

TEST_CASE("Kolmogorov distance to the standard normal") {
  const boost::math::normal_distribution<double> ref;
  std::vector<double> v;
  const int n = 200;
  for (int i = 1; i <= n; ++i) v.push_back(boost::math::quantile(ref, (i - 0.5) / n));
  CHECK(ks_distance_to_normal(v) == doctest::Approx(0.5 / n).epsilon(1e-9));
  v.push_back(std::nan(""));
  CHECK(ks_distance_to_normal(v) == doctest::Approx(0.5 / n).epsilon(1e-9));
  CHECK(ks_distance_to_normal(std::vector<double>(10, 100.0)) == doctest::Approx(1.0));
}

TEST_CASE("rate experiment on the gaussian design") {
  auto cfg = gaussian_rate_config();
  const auto res = run_rate_experiment(cfg);
  REQUIRE(res.table.size() == 5);
  CHECK(res.oracle_value == 1.0);
  CHECK(res.oracle_error == 0.0);
  CHECK(res.predicted_slope == -0.5);
  CHECK(std::isfinite(res.fit.slope));
  CHECK(std::isfinite(res.fit.slope_se));
  CHECK(std::abs(res.fit.slope + 0.5) < 0.15);
  CHECK_FALSE(res.log_corrected_fit.has_value());
  for (const auto& row : res.table) {
    CHECK(row.replications == 50);
    CHECK(row.predicted_rate == rho(cfg.rate_params, row.n));
    CHECK(row.mc_se > 0.0);
  }

  SUBCASE("reproducible and independent of the thread count") {
    cfg.threads = 4;
    const auto again = run_rate_experiment(cfg);
    for (std::size_t s = 0; s < 5; ++s) CHECK(again.table[s].mean_abs_error == res.table[s].mean_abs_error);
    CHECK(again.fit.slope == res.fit.slope);
  }
  SUBCASE("doubling replications keeps the slope within its standard error") {
    cfg.replications = 100;
    const auto doubled = run_rate_experiment(cfg);
    CHECK(std::abs(doubled.fit.slope - res.fit.slope) <= res.fit.slope_se);
  }
}

TEST_CASE("rate experiment configuration errors") {
  auto cfg = gaussian_rate_config();
  cfg.sizes = {100, 200, 400};
  CHECK_THROWS_AS(run_rate_experiment(cfg), InvalidInput);
  cfg.sizes = {100, 400, 200, 800};
  CHECK_THROWS_AS(run_rate_experiment(cfg), InvalidInput);
  cfg = gaussian_rate_config();
  cfg.replications = 19;
  CHECK_THROWS_AS(run_rate_experiment(cfg), InvalidInput);
  cfg = gaussian_rate_config();
  cfg.law_nu = LawSpec::pareto_radial(1, 3.0);
  CHECK_THROWS_AS(run_rate_experiment(cfg), InvalidInput);
}

TEST_CASE("boundary regime reports both fits") {
  auto cfg = gaussian_rate_config();
  cfg.sizes = {50, 100, 200, 400};
  cfg.replications = 20;
  cfg.rate_params = RateParams{5.0, 2.0, 1};
  const auto res = run_rate_experiment(cfg);
  REQUIRE(res.log_corrected_fit.has_value());
  CHECK(res.log_corrected_fit->slope < res.fit.slope);
}

TEST_CASE("large-sample reference oracle on a translated heavy-tailed law") {
  // W_p between a law and its translate by s is |s| for every p >= 1
  const auto law = LawSpec::pareto_radial(1, 3.5);
  OracleSpec oracle{OracleSpec::Kind::large_sample_reference, 0, 4};
  const auto [value, err] = experiment_oracle(law, law.shifted({1.0}), KernelSpec{KernelSpec::Family::gaussian, 1.0},
                                              CostSpec{1.0}, oracle, 400, RngSpec{52, 0});
  CHECK(err > 0.0);
  CHECK(std::abs(value - 1.0) < 0.03);
}

TEST_CASE("CLT experiment mechanics") {
  CltExperimentConfig cfg;
  cfg.law_mu = LawSpec::gaussian({0.0}, 1.0);
  cfg.law_nu = LawSpec::gaussian({2.0}, 1.0);
  cfg.kernel = KernelSpec{KernelSpec::Family::gaussian, 0.5};
  cfg.m = cfg.n = 300;
  cfg.replications = 40;
  cfg.inference.k_eval = 32;
  cfg.seed = RngSpec{53, 0};
  const auto res = run_clt_experiment(cfg);
  REQUIRE(res.clt_rows.size() == 40);
  CHECK(res.oracle_value == gaussian_w2_oracle(std::vector<double>{0.0}, std::vector<double>{2.0}, 1.0, 1.0, 0.5, 1));
  REQUIRE(res.coverage.has_value());
  CHECK(*res.coverage >= 0.0);
  CHECK(*res.coverage <= 1.0);
  CHECK(*res.ks_distance > 0.0);
  CHECK(*res.variance_ratio > 0.0);
  CHECK(res.degenerate_replications == 0);
  const double scale = std::sqrt(300.0 * 300.0 / 600.0);
  for (const auto& row : res.clt_rows)
    CHECK(row.standardized == doctest::Approx(scale * (row.t_hat - res.oracle_value) / std::sqrt(row.tau2)));

  cfg.threads = 3;
  const auto again = run_clt_experiment(cfg);
  for (std::size_t r = 0; r < 40; ++r) CHECK(again.clt_rows[r].t_hat == res.clt_rows[r].t_hat);
  CHECK(*again.coverage == *res.coverage);

  cfg.cost = CostSpec{1.0};
  CHECK_THROWS_AS(run_clt_experiment(cfg), InvalidInput);
  cfg.cost = CostSpec{2.0};
  cfg.law_nu = cfg.law_mu;
  CHECK_THROWS_AS(run_clt_experiment(cfg), InvalidInput);
}

TEST_CASE("sigma sweep") {
  SigmaSweepConfig cfg;
  cfg.law_mu = LawSpec::gaussian({0.0}, 1.0);
  cfg.law_nu = LawSpec::gaussian({0.0}, 1.0);
  cfg.sigmas = {0.25, 0.5, 1.0, 2.0};
  cfg.m = cfg.n = 300;
  cfg.paired = true;
  cfg.inference.k_eval = 16;
  cfg.seed = RngSpec{54, 0};
  SUBCASE("identical laws with paired noise give zero") {
    for (const auto& row : run_sigma_sweep(cfg)) CHECK(row.t_hat == 0.0);
    cfg.cost = CostSpec{1.0};
    for (const auto& row : run_sigma_sweep(cfg)) {
      CHECK(row.t_hat == 0.0);
      CHECK(std::isnan(row.tau2));
    }
  }
  SUBCASE("gaussian pair tracks the oracle") {
    cfg.paired = false;
    cfg.law_nu = LawSpec::gaussian({1.0}, 1.0);
    cfg.m = cfg.n = 2000;
    const auto rows = run_sigma_sweep(cfg);
    for (const auto& row : rows) {
      REQUIRE(row.oracle.has_value());
      // equal variances: the oracle is |v|^2 whatever sigma is
      CHECK(*row.oracle == 1.0);
      // sampling sd of T_hat is about 2 sqrt(2/2000 + sigma^2/2000)
      const double sd = 2.0 * std::sqrt(2.0 / 2000 + row.sigma * row.sigma / 2000);
      CHECK(std::abs(row.t_hat - *row.oracle) < 4.0 * sd);
      CHECK(row.seed_spread > 0.0);
    }
  }
  SUBCASE("grid validation") {
    cfg.sigmas = {1.0, 0.5};
    CHECK_THROWS_AS(run_sigma_sweep(cfg), InvalidInput);
    cfg.sigmas = {0.0, 1.0};
    CHECK_THROWS_AS(run_sigma_sweep(cfg), InvalidInput);
  }
}

TEST_CASE("csv writers") {
  auto cfg = gaussian_rate_config();
  cfg.replications = 20;
  const auto res = run_rate_experiment(cfg);
  std::ostringstream os;
  write_rate_csv(os, res);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "N,mean_abs_error,mc_se,predicted_rate,replications");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);

  ExperimentResult clt;
  clt.clt_rows.push_back({0, 1.5, 2.0, -0.25, true, false});
  std::ostringstream oc;
  write_clt_csv(oc, clt);
  CHECK(oc.str() == "replication,t_hat,tau2,standardized,covered_cost,covered_dist\n0,1.5,2,-0.25,1,0\n");

  std::vector<SigmaSweepRow> sweep{{0.5, 1.0, 2.0, 0.1, std::nullopt}};
  std::ostringstream ow;
  write_sweep_csv(ow, sweep);
  CHECK(ow.str() == "sigma,t_hat,tau2,seed_spread,oracle\n0.5,1,2,0.10000000000000001,\n");
}
