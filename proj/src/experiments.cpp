#include "gsw/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>

#include "gsw/error.hpp"
#include "gsw/normal.hpp"
#include "gsw/parallel.hpp"

namespace gsw {

namespace {
constexpr std::uint64_t kTagSize = 0x5a00;
constexpr std::uint64_t kTagReference = 0x7265660000ULL;
constexpr std::uint64_t kTagSigma = 0x5300;

RngSpec replication_stream(RngSpec seed, std::size_t size_index, std::size_t rep) {
  return seed.derive(kTagSize + size_index).derive(rep);
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size() - 1);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool closed_form_available(const LawSpec& a, const LawSpec& b, const KernelSpec& kernel,
                           const CostSpec& cost) {
  return a.family == LawSpec::Family::gaussian && b.family == LawSpec::Family::gaussian &&
         kernel.is_gaussian() && cost.p == 2.0 && a.dim == b.dim;
}

std::vector<double> location_of(const LawSpec& law) {
  std::vector<double> loc(law.dim);
  for (std::size_t k = 0; k < law.dim; ++k) loc[k] = law.location_at(k);
  return loc;
}

}  // namespace

double gaussian_w2_oracle(std::span<const double> mean_a, std::span<const double> mean_b, double var_a,
                          double var_b, double sigma, std::size_t d) {
  if (!(var_a >= 0.0) || !(var_b >= 0.0)) throw InvalidInput("variances must be nonnegative");
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be nonnegative");
  if (mean_a.size() != d || mean_b.size() != d) throw InvalidInput("mean vectors must have dimension d");
  double shift = 0.0;
  for (std::size_t k = 0; k < d; ++k) shift += (mean_a[k] - mean_b[k]) * (mean_a[k] - mean_b[k]);
  const double s2 = sigma * sigma;
  const double sd_gap = std::sqrt(var_a + s2) - std::sqrt(var_b + s2);
  return shift + static_cast<double>(d) * sd_gap * sd_gap;
}

SlopeFit fit_log_log(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) throw InvalidInput("slope fit needs at least 3 points");
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidInput("log-log fit needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = mean_of(lx);
  const double my = mean_of(ly);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    ssr += r * r;
  }
  fit.slope_se = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  return fit;
}

std::pair<double, double> experiment_oracle(const LawSpec& law_mu, const LawSpec& law_nu,
                                            const KernelSpec& kernel, const CostSpec& cost,
                                            const OracleSpec& oracle, std::size_t max_size,
                                            RngSpec seed) {
  if (oracle.kind == OracleSpec::Kind::closed_form_gaussian) {
    if (!closed_form_available(law_mu, law_nu, kernel, cost))
      throw InvalidInput("closed-form oracle needs two gaussian laws, a gaussian kernel and p = 2");
    return {gaussian_w2_oracle(location_of(law_mu), location_of(law_nu), law_mu.variance,
                               law_nu.variance, kernel.sigma, law_mu.dim),
            0.0};
  }
  const std::size_t n_ref = std::max(oracle.n_ref, 50 * max_size);
  const std::size_t reps = std::max<std::size_t>(oracle.ref_reps, 1);
  std::vector<double> values(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const RngSpec base = seed.derive(kTagReference + r);
    const auto mu = sample(law_mu, n_ref, base.derive(1));
    const auto nu = sample(law_nu, n_ref, base.derive(2));
    values[r] = estimate_smoothed_cost(mu, nu, kernel, cost, SmoothingPlan{1, base.derive(3), false}).value;
  }
  const double se = reps > 1 ? std::sqrt(sample_variance(values) / static_cast<double>(reps)) : 0.0;
  return {mean_of(values), se};
}

ExperimentResult run_rate_experiment(const RateExperimentConfig& cfg) {
  if (cfg.sizes.size() < 4) throw InvalidInput("rate experiment needs at least 4 sizes");
  if (!std::is_sorted(cfg.sizes.begin(), cfg.sizes.end()) ||
      std::adjacent_find(cfg.sizes.begin(), cfg.sizes.end()) != cfg.sizes.end())
    throw InvalidInput("sizes must be strictly ascending");
  if (cfg.replications < 20) throw InvalidInput("rate experiment needs at least 20 replications");
  if (cfg.law_mu.dim != cfg.law_nu.dim) throw InvalidInput("laws must share a dimension");
  cfg.rate_params.validate();

  ExperimentResult result;
  const auto [truth, truth_err] = experiment_oracle(cfg.law_mu, cfg.law_nu, cfg.kernel, cfg.cost,
                                                    cfg.oracle, cfg.sizes.back(), cfg.seed);
  result.oracle_value = truth;
  result.oracle_error = truth_err;

  const std::size_t n_sizes = cfg.sizes.size();
  const std::size_t reps = cfg.replications;
  std::vector<double> errors(n_sizes * reps);
  parallel_for(errors.size(), cfg.threads, [&](std::size_t task) {
    const std::size_t s = task / reps;
    const std::size_t r = task % reps;
    const RngSpec base = replication_stream(cfg.seed, s, r);
    const std::size_t n = cfg.sizes[s];
    const auto mu = sample(cfg.law_mu, n, base.derive(1));
    const auto nu = sample(cfg.law_nu, n, base.derive(2));
    const auto est = estimate_smoothed_cost(mu, nu, cfg.kernel, cfg.cost,
                                            SmoothingPlan{cfg.k, base.derive(3), false});
    errors[task] = std::abs(est.value - truth);
  });

  std::vector<double> xs, ys, ys_corrected;
  for (std::size_t s = 0; s < n_sizes; ++s) {
    std::span<const double> e(errors.data() + s * reps, reps);
    const double mean = mean_of(e);
    const double se = std::sqrt(sample_variance(e) / static_cast<double>(reps));
    result.table.push_back({cfg.sizes[s], mean, se, rho(cfg.rate_params, cfg.sizes[s]), reps});
    xs.push_back(static_cast<double>(cfg.sizes[s]));
    ys.push_back(mean);
    ys_corrected.push_back(mean / std::log(static_cast<double>(cfg.sizes[s])));
  }
  result.fit = fit_log_log(xs, ys);
  result.predicted_slope = -rate_exponent(cfg.rate_params);
  const double boundary = static_cast<double>(cfg.rate_params.d) + 2.0 * cfg.rate_params.p;
  if (std::abs(cfg.rate_params.q - boundary) <= 1e-12 * boundary)
    result.log_corrected_fit = fit_log_log(xs, ys_corrected);
  const double smallest = *std::min_element(ys.begin(), ys.end());
  result.oracle_flagged = result.oracle_error > 0.2 * smallest;
  return result;
}

double ks_distance_to_normal(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
               values.end());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = normal_cdf(values[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

ExperimentResult run_clt_experiment(const CltExperimentConfig& cfg) {
  if (!(cfg.cost.p > 1.0)) throw InvalidInput("CLT experiment requires p > 1");
  if (cfg.replications < 2) throw InvalidInput("CLT experiment needs at least 2 replications");
  ExperimentResult result;
  const auto [truth, truth_err] = experiment_oracle(cfg.law_mu, cfg.law_nu, cfg.kernel, cfg.cost,
                                                    cfg.oracle, std::max(cfg.m, cfg.n), cfg.seed);
  if (!(truth > 0.0)) throw InvalidInput("CLT experiment needs separated laws (oracle cost > 0)");
  result.oracle_value = truth;
  result.oracle_error = truth_err;
  const double delta = std::pow(truth, 1.0 / cfg.cost.p);
  const double scale = std::sqrt(static_cast<double>(cfg.m) * static_cast<double>(cfg.n) /
                                 static_cast<double>(cfg.m + cfg.n));

  std::vector<CltRow> rows(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    const RngSpec base = replication_stream(cfg.seed, 0, r);
    const auto mu = sample(cfg.law_mu, cfg.m, base.derive(1));
    const auto nu = sample(cfg.law_nu, cfg.n, base.derive(2));
    InferenceReport rep;
    bool dist_ok = true;
    try {
      rep = split_sample_inference(mu, nu, cfg.kernel, cfg.cost,
                                   SmoothingPlan{cfg.k, base.derive(3), false},
                                   SplitConfig{cfg.train_fraction, base.derive(4)}, cfg.alpha, cfg.inference);
    } catch (const NullProximityRefusal& e) {
      rep = e.report;
      dist_ok = false;
    }
    const double tau = std::sqrt(rep.tau2);
    rows[r] = CltRow{r,
                     rep.cost_estimate,
                     rep.tau2,
                     tau > 0.0 ? scale * (rep.cost_estimate - truth) / tau
                               : std::numeric_limits<double>::quiet_NaN(),
                     rep.ci_cost.contains(truth),
                     dist_ok && rep.ci_distance.contains(delta)};
  });

  std::size_t cov = 0, cov_d = 0;
  std::vector<double> standardized, scaled_err, tau2s;
  for (const auto& row : rows) {
    cov += row.covered_cost;
    cov_d += row.covered_dist;
    if (row.tau2 > 0.0)
      standardized.push_back(row.standardized);
    else
      ++result.degenerate_replications;
    scaled_err.push_back(scale * (row.t_hat - truth));
    tau2s.push_back(row.tau2);
  }
  if (result.degenerate_replications == rows.size())
    throw Error("degenerate variance estimate: tau^2 = 0 in every replication");
  const double reps = static_cast<double>(rows.size());
  result.coverage = static_cast<double>(cov) / reps;
  result.coverage_distance = static_cast<double>(cov_d) / reps;
  result.ks_distance = ks_distance_to_normal(standardized);
  result.variance_ratio = sample_variance(scaled_err) / median_of(tau2s);
  result.clt_rows = std::move(rows);
  return result;
}

std::vector<SigmaSweepRow> run_sigma_sweep(const SigmaSweepConfig& cfg) {
  if (cfg.sigmas.empty()) throw InvalidInput("sigma grid is empty");
  for (std::size_t i = 0; i < cfg.sigmas.size(); ++i) {
    if (!(cfg.sigmas[i] > 0.0)) throw InvalidInput("sigma grid must be positive");
    if (i > 0 && !(cfg.sigmas[i] > cfg.sigmas[i - 1])) throw InvalidInput("sigma grid must be ascending");
  }
  const auto mu = sample(cfg.law_mu, cfg.m, cfg.seed.derive(1));
  const auto nu = sample(cfg.law_nu, cfg.n, cfg.paired ? cfg.seed.derive(1) : cfg.seed.derive(2));
  std::vector<SigmaSweepRow> rows(cfg.sigmas.size());
  parallel_for(cfg.sigmas.size(), cfg.threads, [&](std::size_t i) {
    const KernelSpec kernel{KernelSpec::Family::gaussian, cfg.sigmas[i]};
    const SmoothingPlan plan{cfg.k, cfg.seed.derive(kTagSigma), cfg.paired};
    SigmaSweepRow row{cfg.sigmas[i], 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0, std::nullopt};
    if (cfg.cost.p > 1.0) {
      InferenceReport rep;
      try {
        rep = split_sample_inference(mu, nu, kernel, cfg.cost, plan,
                                     SplitConfig{cfg.train_fraction, cfg.seed.derive(4)}, 0.05,
                                     cfg.inference);
      } catch (const NullProximityRefusal& e) {
        rep = e.report;
      }
      row.t_hat = rep.cost_estimate;
      row.tau2 = rep.tau2;
      row.seed_spread = rep.seed_spread;
    } else {
      std::vector<double> values;
      values.push_back(estimate_smoothed_cost(mu, nu, kernel, cfg.cost, plan).value);
      for (std::size_t s = 0; s < cfg.inference.spread_reps; ++s) {
        SmoothingPlan alt = plan;
        alt.rng = plan.rng.derive(0x7370726561 + s);
        values.push_back(estimate_smoothed_cost(mu, nu, kernel, cfg.cost, alt).value);
      }
      row.t_hat = values.front();
      row.seed_spread = std::sqrt(sample_variance(values));
    }
    if (closed_form_available(cfg.law_mu, cfg.law_nu, kernel, cfg.cost))
      row.oracle = gaussian_w2_oracle(location_of(cfg.law_mu), location_of(cfg.law_nu),
                                      cfg.law_mu.variance, cfg.law_nu.variance, cfg.sigmas[i],
                                      cfg.law_mu.dim);
    rows[i] = row;
  });
  return rows;
}

namespace {
struct Precise {
  double v;
};
std::ostream& operator<<(std::ostream& os, Precise p) {
  return os << std::setprecision(17) << p.v;
}
}  // namespace

void write_rate_csv(std::ostream& os, const ExperimentResult& result) {
  os << "N,mean_abs_error,mc_se,predicted_rate,replications\n";
  for (const auto& row : result.table)
    os << row.n << ',' << Precise{row.mean_abs_error} << ',' << Precise{row.mc_se} << ','
       << Precise{row.predicted_rate} << ',' << row.replications << '\n';
}

void write_clt_csv(std::ostream& os, const ExperimentResult& result) {
  os << "replication,t_hat,tau2,standardized,covered_cost,covered_dist\n";
  for (const auto& row : result.clt_rows)
    os << row.replication << ',' << Precise{row.t_hat} << ',' << Precise{row.tau2} << ','
       << Precise{row.standardized} << ',' << (row.covered_cost ? 1 : 0) << ','
       << (row.covered_dist ? 1 : 0) << '\n';
}

void write_sweep_csv(std::ostream& os, std::span<const SigmaSweepRow> rows) {
  os << "sigma,t_hat,tau2,seed_spread,oracle\n";
  for (const auto& row : rows) {
    os << Precise{row.sigma} << ',' << Precise{row.t_hat} << ',' << Precise{row.tau2} << ','
       << Precise{row.seed_spread} << ',';
    if (row.oracle) os << Precise{*row.oracle};
    os << '\n';
  }
}

}  // namespace gsw
