// gsw: command-line front end for the smoothed Wasserstein library.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gsw/error.hpp"
#include "gsw/experiments.hpp"
#include "gsw/inference.hpp"
#include "gsw/measures.hpp"
#include "gsw/ot_exact.hpp"
#include "gsw/smoothing.hpp"

using json = nlohmann::ordered_json;

namespace {

enum class Kind { real, count, text, flag, reals, counts };

struct Key {
  const char* name;
  Kind kind;
  const char* help;
  json fallback;
};

// Every configurable key, its type and its default.
const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"mu", Kind::text, "CSV file with the first sample", ""},
      {"nu", Kind::text, "CSV file with the second sample", ""},
      {"p", Kind::real, "cost exponent p >= 1", 2.0},
      {"sigma", Kind::real, "smoothing bandwidth", 1.0},
      {"k", Kind::count, "noise draws per data point", 1},
      {"kernel", Kind::text, "kernel family: gaussian | laplace-product", "gaussian"},
      {"seed", Kind::count, "master seed", 0},
      {"stream", Kind::count, "stream index under the seed", 0},
      {"split", Kind::real, "training fraction for sample splitting", 0.5},
      {"alpha", Kind::real, "interval level (coverage 1 - alpha)", 0.05},
      {"k_eval", Kind::count, "kernel draws per smoothed potential evaluation", 256},
      {"spread_reps", Kind::count, "extra noise seeds for the seed-spread diagnostic", 4},
      {"q_mu", Kind::real, "moment order assumed for mu", 100.0},
      {"q_nu", Kind::real, "moment order assumed for nu", 100.0},
      {"threshold_mult", Kind::real, "multiplier of the test threshold", 1.0},
      {"law_mu", Kind::text, "law of mu, e.g. gaussian:mean=0:var=1", "gaussian:mean=0:var=1"},
      {"law_nu", Kind::text, "law of nu, e.g. pareto:alpha=3.5:shift=1", "gaussian:mean=1:var=1"},
      {"dim", Kind::count, "dimension of the simulated laws", 1},
      {"sizes", Kind::counts, "sample sizes N (m = n = N)", json::array({100, 200, 400, 800, 1600})},
      {"replications", Kind::count, "Monte Carlo replications", 50},
      {"m", Kind::count, "size of the mu sample", 1000},
      {"n", Kind::count, "size of the nu sample", 1000},
      {"oracle", Kind::text, "oracle: auto | closed-form | reference", "auto"},
      {"n_ref", Kind::count, "reference sample size (0 = 50 * largest size)", 0},
      {"ref_reps", Kind::count, "independent reference draws", 4},
      {"sigmas", Kind::reals, "bandwidth grid", json::array({0.25, 0.5, 1.0, 2.0})},
      {"paired", Kind::flag, "reuse mu streams for nu (common random numbers)", false},
      {"plan_out", Kind::text, "write the transport plan as CSV", ""},
      {"duals_out", Kind::text, "write the dual potentials as CSV", ""},
      {"format", Kind::text, "output format: json | csv", "json"},
  };
  return table;
}

const std::map<std::string, std::vector<std::string>>& command_keys() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"ot", {"mu", "nu", "p", "seed", "stream", "plan_out", "duals_out", "format"}},
      {"smooth-cost", {"mu", "nu", "p", "sigma", "k", "kernel", "seed", "stream", "format"}},
      {"infer",
       {"mu", "nu", "p", "sigma", "k", "kernel", "seed", "stream", "split", "alpha", "k_eval",
        "spread_reps", "format"}},
      {"test",
       {"mu", "nu", "p", "sigma", "k", "kernel", "seed", "stream", "q_mu", "q_nu", "threshold_mult",
        "format"}},
      {"rate-exp",
       {"law_mu", "law_nu", "dim", "p", "sigma", "k", "kernel", "seed", "stream", "sizes", "replications",
        "q_mu", "oracle", "n_ref", "ref_reps", "format"}},
      {"clt-exp",
       {"law_mu", "law_nu", "dim", "p", "sigma", "k", "kernel", "seed", "stream", "m", "n", "replications",
        "alpha", "split", "k_eval", "spread_reps", "oracle", "n_ref", "ref_reps", "format"}},
      {"sigma-sweep",
       {"law_mu", "law_nu", "dim", "p", "sigmas", "k", "seed", "stream", "m", "n", "paired", "split",
        "k_eval", "spread_reps", "format"}},
  };
  return table;
}

const Key& key_info(const std::string& name) {
  for (const auto& k : keys())
    if (name == k.name) return k;
  throw std::logic_error("unknown key " + name);
}

std::string flag_name(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

json convert_flag(const Key& key, const std::vector<std::string>& raw) {
  try {
    switch (key.kind) {
      case Kind::real: return std::stod(raw.back());
      case Kind::count: {
        if (raw.back().find('-') != std::string::npos) throw std::invalid_argument("negative");
        return std::stoull(raw.back());
      }
      case Kind::text: return raw.back();
      case Kind::flag: return true;
      case Kind::reals: {
        json out = json::array();
        for (const auto& r : raw) out.push_back(std::stod(r));
        return out;
      }
      case Kind::counts: {
        json out = json::array();
        for (const auto& r : raw) out.push_back(std::stoull(r));
        return out;
      }
    }
  } catch (const std::exception&) {
  }
  throw gsw::InvalidInput("invalid value for " + flag_name(key.name));
}

void check_file_value(const Key& key, const json& value) {
  bool ok = false;
  switch (key.kind) {
    case Kind::real: ok = value.is_number(); break;
    case Kind::count: ok = value.is_number_unsigned(); break;
    case Kind::text: ok = value.is_string(); break;
    case Kind::flag: ok = value.is_boolean(); break;
    case Kind::reals:
    case Kind::counts:
      ok = value.is_array();
      for (const auto& v : value)
        ok = ok && (key.kind == Kind::reals ? v.is_number() : v.is_number_unsigned());
      break;
  }
  if (!ok) throw gsw::InvalidInput(std::string("config key '") + key.name + "' has the wrong type");
}

std::string type_label(Kind kind) {
  switch (kind) {
    case Kind::real: return "FLOAT";
    case Kind::count: return "UINT";
    case Kind::reals: return "FLOAT,...";
    case Kind::counts: return "UINT,...";
    default: return "TEXT";
  }
}

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::map<std::string, std::vector<std::string>> raw;
  std::map<std::string, bool> flags;
};

// defaults < config file < flags
json resolve(Command& cmd, const std::string& config_path) {
  json cfg = json::object();
  for (const auto& name : command_keys().at(cmd.name)) cfg[name] = key_info(name).fallback;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw gsw::InvalidInput("cannot open config file " + config_path);
    json file;
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw gsw::InvalidInput(config_path + ": " + e.what());
    }
    if (file.contains("config")) file = file["config"];
    if (!file.is_object()) throw gsw::InvalidInput(config_path + ": expected a JSON object");
    for (const auto& [name, value] : file.items()) {
      if (name == "command") {
        if (value != cmd.name)
          throw gsw::InvalidInput(config_path + ": config is for command '" + value.get<std::string>() + "'");
        continue;
      }
      if (!cfg.contains(name))
        throw gsw::InvalidInput(config_path + ": key '" + name + "' does not apply to " + cmd.name);
      check_file_value(key_info(name), value);
      cfg[name] = value;
    }
  }
  for (const auto& name : command_keys().at(cmd.name)) {
    const Key& key = key_info(name);
    if (key.kind == Kind::flag) {
      if (cmd.flags[name]) cfg[name] = true;
    } else if (!cmd.raw[name].empty()) {
      cfg[name] = convert_flag(key, cmd.raw[name]);
    }
  }
  json out = json::object();
  out["command"] = cmd.name;
  for (const auto& [name, value] : cfg.items()) out[name] = value;
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

gsw::RngSpec seed_of(const json& cfg) {
  return gsw::RngSpec{cfg["seed"].get<std::uint64_t>(), cfg["stream"].get<std::uint64_t>()};
}

gsw::KernelSpec kernel_of(const json& cfg) {
  gsw::KernelSpec kernel{gsw::parse_kernel_family(cfg["kernel"].get<std::string>()),
                         cfg["sigma"].get<double>()};
  kernel.validate();
  return kernel;
}

gsw::InferenceOptions inference_of(const json& cfg) {
  gsw::InferenceOptions opts;
  opts.k_eval = cfg["k_eval"].get<std::size_t>();
  opts.spread_reps = cfg["spread_reps"].get<std::size_t>();
  return opts;
}

std::pair<gsw::EmpiricalMeasure, gsw::EmpiricalMeasure> read_inputs(const json& cfg) {
  const auto mu_path = cfg["mu"].get<std::string>();
  const auto nu_path = cfg["nu"].get<std::string>();
  if (mu_path.empty() || nu_path.empty()) throw gsw::InvalidInput("both --mu and --nu input files are required");
  return {gsw::read_csv_measure(mu_path), gsw::read_csv_measure(nu_path)};
}

gsw::OracleSpec oracle_of(const json& cfg, const gsw::LawSpec& a, const gsw::LawSpec& b,
                          const gsw::KernelSpec& kernel, double p) {
  gsw::OracleSpec oracle;
  oracle.n_ref = cfg["n_ref"].get<std::size_t>();
  oracle.ref_reps = cfg["ref_reps"].get<std::size_t>();
  const auto name = cfg["oracle"].get<std::string>();
  const bool gaussian_pair = a.family == gsw::LawSpec::Family::gaussian &&
                             b.family == gsw::LawSpec::Family::gaussian && kernel.is_gaussian() && p == 2.0;
  if (name == "closed-form")
    oracle.kind = gsw::OracleSpec::Kind::closed_form_gaussian;
  else if (name == "reference")
    oracle.kind = gsw::OracleSpec::Kind::large_sample_reference;
  else if (name == "auto")
    oracle.kind = gaussian_pair ? gsw::OracleSpec::Kind::closed_form_gaussian
                                : gsw::OracleSpec::Kind::large_sample_reference;
  else
    throw gsw::InvalidInput("unknown oracle '" + name + "'");
  return oracle;
}

// Writes the artifact to --out (summary to stdout) or to stdout (summary to stderr).
void emit(const std::string& out_path, const std::string& artifact, const std::string& summary) {
  if (out_path.empty()) {
    std::cout << artifact;
    if (!summary.empty()) std::cerr << summary;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw gsw::InvalidInput("cannot write " + out_path);
  out << artifact;
  std::cout << summary;
}

std::string csv_with_config(const json& cfg, const std::string& body) {
  return "# config: " + cfg.dump() + "\n" + body;
}

std::string json_text(const json& doc) { return doc.dump(2) + "\n"; }

bool want_csv(const json& cfg) {
  const auto format = cfg["format"].get<std::string>();
  if (format != "json" && format != "csv") throw gsw::InvalidInput("--format must be json or csv");
  return format == "csv";
}

void run_ot(const json& cfg, const std::string& out) {
  auto [mu, nu] = read_inputs(cfg);
  const gsw::CostSpec cost{cfg["p"].get<double>()};
  const auto sol = gsw::solve_ot(mu, nu, cost);
  if (const auto path = cfg["plan_out"].get<std::string>(); !path.empty()) {
    std::ofstream f(path);
    if (!f) throw gsw::InvalidInput("cannot write " + path);
    f << "i,j,mass\n";
    for (const auto& e : sol.plan) f << e.i << ',' << e.j << ',' << num(e.mass) << '\n';
  }
  if (const auto path = cfg["duals_out"].get<std::string>(); !path.empty()) {
    std::ofstream f(path);
    if (!f) throw gsw::InvalidInput("cannot write " + path);
    f << "side,index,value\n";
    for (std::size_t i = 0; i < sol.phi.size(); ++i) f << "phi," << i << ',' << num(sol.phi[i]) << '\n';
    for (std::size_t j = 0; j < sol.psi.size(); ++j) f << "psi," << j << ',' << num(sol.psi[j]) << '\n';
  }
  const std::string summary = "cost " + num(sol.cost) + "\n";
  if (want_csv(cfg)) {
    emit(out,
         csv_with_config(cfg, "cost,m,n,plan_entries,duality_gap\n" + num(sol.cost) + ',' +
                                  std::to_string(sol.m) + ',' + std::to_string(sol.n) + ',' +
                                  std::to_string(sol.plan.size()) + ',' + num(sol.duality_gap) + '\n'),
         out.empty() ? "" : summary);
    return;
  }
  json doc;
  doc["config"] = cfg;
  doc["cost"] = sol.cost;
  doc["m"] = sol.m;
  doc["n"] = sol.n;
  doc["plan_entries"] = sol.plan.size();
  doc["duality_gap"] = sol.duality_gap;
  emit(out, json_text(doc), out.empty() ? "" : summary);
}

void run_smooth_cost(const json& cfg, const std::string& out) {
  auto [mu, nu] = read_inputs(cfg);
  const gsw::CostSpec cost{cfg["p"].get<double>()};
  const auto est = gsw::estimate_smoothed_cost(mu, nu, kernel_of(cfg), cost,
                                               gsw::SmoothingPlan{cfg["k"].get<std::size_t>(), seed_of(cfg), false});
  const std::string summary = "smoothed cost " + num(est.value) + ", distance " + num(est.distance) + "\n";
  if (want_csv(cfg)) {
    emit(out,
         csv_with_config(cfg, "value,distance,m,n,k\n" + num(est.value) + ',' + num(est.distance) + ',' +
                                  std::to_string(est.m) + ',' + std::to_string(est.n) + ',' +
                                  std::to_string(est.k) + '\n'),
         summary);
    return;
  }
  json doc;
  doc["config"] = cfg;
  doc["value"] = est.value;
  doc["distance"] = est.distance;
  doc["m"] = est.m;
  doc["n"] = est.n;
  doc["k"] = est.k;
  emit(out, json_text(doc), summary);
}

json report_json(const gsw::InferenceReport& r, bool distance_valid) {
  json doc;
  doc["cost_estimate"] = r.cost_estimate;
  doc["distance_estimate"] = r.distance_estimate;
  doc["tau2"] = r.tau2;
  doc["v_mu"] = r.v_mu;
  doc["v_nu"] = r.v_nu;
  doc["ci_cost_lo"] = r.ci_cost.lo;
  doc["ci_cost_hi"] = r.ci_cost.hi;
  doc["ci_dist_lo"] = distance_valid ? json(r.ci_distance.lo) : json(nullptr);
  doc["ci_dist_hi"] = distance_valid ? json(r.ci_distance.hi) : json(nullptr);
  doc["alpha"] = r.alpha;
  doc["m"] = r.m;
  doc["n"] = r.n;
  doc["m1"] = r.m1;
  doc["m2"] = r.m2;
  doc["n1"] = r.n1;
  doc["n2"] = r.n2;
  doc["seed"] = r.seed;
  doc["seed_spread"] = r.seed_spread;
  return doc;
}

int run_infer(const json& cfg, const std::string& out) {
  auto [mu, nu] = read_inputs(cfg);
  const double p = cfg["p"].get<double>();
  if (!(p > 1.0)) throw gsw::InvalidInput("infer requires p > 1 (the interval theory does not cover p = 1)");
  const gsw::CostSpec cost{p};
  gsw::InferenceReport report;
  std::string refusal;
  try {
    report = gsw::split_sample_inference(
        mu, nu, kernel_of(cfg), cost, gsw::SmoothingPlan{cfg["k"].get<std::size_t>(), seed_of(cfg), false},
        gsw::SplitConfig{cfg["split"].get<double>(), seed_of(cfg).derive(0x73706c6974)}, cfg["alpha"].get<double>(),
        inference_of(cfg));
  } catch (const gsw::NullProximityRefusal& e) {
    report = e.report;
    refusal = e.what();
  }
  const bool valid = refusal.empty();
  std::string summary = "T_hat " + num(report.cost_estimate) + ", CI [" + num(report.ci_cost.lo) + ", " +
                        num(report.ci_cost.hi) + "]\n";
  if (!valid) summary += refusal + "\n";
  if (want_csv(cfg)) {
    json r = report_json(report, valid);
    std::string header, row;
    for (const auto& [name, value] : r.items()) {
      header += (header.empty() ? "" : ",") + name;
      row += (row.empty() ? "" : ",") +
             (value.is_null() ? std::string() : value.is_number_float() ? num(value.get<double>()) : value.dump());
    }
    emit(out, csv_with_config(cfg, header + "\n" + row + "\n"), summary);
  } else {
    json doc;
    doc["config"] = cfg;
    doc["report"] = report_json(report, valid);
    if (!valid) doc["refusal"] = refusal;
    emit(out, json_text(doc), summary);
  }
  if (!valid) {
    std::cerr << "error: " << refusal << "\n";
    return 4;
  }
  return 0;
}

void run_test(const json& cfg, const std::string& out) {
  auto [mu, nu] = read_inputs(cfg);
  const double p = cfg["p"].get<double>();
  const gsw::RateParams a{cfg["q_mu"].get<double>(), p, mu.dim()};
  const gsw::RateParams b{cfg["q_nu"].get<double>(), p, nu.dim()};
  const auto res = gsw::two_sample_test(mu, nu, kernel_of(cfg), gsw::CostSpec{p},
                                        gsw::SmoothingPlan{cfg["k"].get<std::size_t>(), seed_of(cfg), false}, a, b,
                                        cfg["threshold_mult"].get<double>());
  const std::string summary = std::string(res.reject ? "reject" : "do not reject") + ": statistic " +
                              num(res.statistic) + ", threshold " + num(res.threshold) + "\n";
  if (want_csv(cfg)) {
    emit(out,
         csv_with_config(cfg, "statistic,threshold,reject,r_mn\n" + num(res.statistic) + ',' + num(res.threshold) +
                                  ',' + (res.reject ? "true" : "false") + ',' + num(res.r_mn) + '\n'),
         summary);
    return;
  }
  json doc;
  doc["config"] = cfg;
  doc["statistic"] = res.statistic;
  doc["threshold"] = res.threshold;
  doc["reject"] = res.reject;
  doc["r_mn"] = res.r_mn;
  emit(out, json_text(doc), summary);
}

std::pair<gsw::LawSpec, gsw::LawSpec> laws_of(const json& cfg) {
  const auto dim = cfg["dim"].get<std::size_t>();
  return {gsw::parse_law(cfg["law_mu"].get<std::string>(), dim), gsw::parse_law(cfg["law_nu"].get<std::string>(), dim)};
}

json fit_json(const gsw::SlopeFit& fit) {
  return json{{"slope", fit.slope}, {"slope_se", fit.slope_se}, {"intercept", fit.intercept}};
}

void run_rate(const json& cfg, const std::string& out, unsigned threads) {
  gsw::RateExperimentConfig rc;
  std::tie(rc.law_mu, rc.law_nu) = laws_of(cfg);
  rc.kernel = kernel_of(cfg);
  rc.cost = gsw::CostSpec{cfg["p"].get<double>()};
  rc.sizes = cfg["sizes"].get<std::vector<std::size_t>>();
  rc.replications = cfg["replications"].get<std::size_t>();
  rc.rate_params = gsw::RateParams{cfg["q_mu"].get<double>(), rc.cost.p, rc.law_mu.dim};
  rc.seed = seed_of(cfg);
  rc.oracle = oracle_of(cfg, rc.law_mu, rc.law_nu, rc.kernel, rc.cost.p);
  rc.k = cfg["k"].get<std::size_t>();
  rc.threads = threads;
  const auto res = gsw::run_rate_experiment(rc);

  std::ostringstream summary;
  summary << "oracle T = " << num(res.oracle_value) << " (error " << num(res.oracle_error) << ")"
          << (res.oracle_flagged ? " FLAGGED: oracle error exceeds 20% of the smallest mean error" : "") << "\n";
  for (const auto& row : res.table)
    summary << "N=" << row.n << "  mean|T-T*|=" << num(row.mean_abs_error) << "  se=" << num(row.mc_se) << "\n";
  summary << "fitted slope " << num(res.fit.slope) << " +/- " << num(res.fit.slope_se) << ", predicted "
          << num(res.predicted_slope) << "\n";
  if (res.log_corrected_fit)
    summary << "boundary regime: slope of error/log N " << num(res.log_corrected_fit->slope) << "\n";

  if (want_csv(cfg)) {
    std::ostringstream body;
    gsw::write_rate_csv(body, res);
    emit(out, csv_with_config(cfg, body.str()), summary.str());
    return;
  }
  json doc;
  doc["config"] = cfg;
  json table = json::array();
  for (const auto& row : res.table)
    table.push_back({{"N", row.n},
                     {"mean_abs_error", row.mean_abs_error},
                     {"mc_se", row.mc_se},
                     {"predicted_rate", row.predicted_rate},
                     {"replications", row.replications}});
  doc["table"] = table;
  doc["fit"] = fit_json(res.fit);
  doc["predicted_slope"] = res.predicted_slope;
  doc["log_corrected_fit"] = res.log_corrected_fit ? fit_json(*res.log_corrected_fit) : json(nullptr);
  doc["oracle_value"] = res.oracle_value;
  doc["oracle_error"] = res.oracle_error;
  doc["oracle_flagged"] = res.oracle_flagged;
  emit(out, json_text(doc), summary.str());
}

void run_clt(const json& cfg, const std::string& out, unsigned threads) {
  gsw::CltExperimentConfig cc;
  std::tie(cc.law_mu, cc.law_nu) = laws_of(cfg);
  cc.kernel = kernel_of(cfg);
  cc.cost = gsw::CostSpec{cfg["p"].get<double>()};
  if (!(cc.cost.p > 1.0)) throw gsw::InvalidInput("clt-exp requires p > 1");
  cc.m = cfg["m"].get<std::size_t>();
  cc.n = cfg["n"].get<std::size_t>();
  cc.replications = cfg["replications"].get<std::size_t>();
  cc.alpha = cfg["alpha"].get<double>();
  cc.k = cfg["k"].get<std::size_t>();
  cc.train_fraction = cfg["split"].get<double>();
  cc.inference = inference_of(cfg);
  cc.oracle = oracle_of(cfg, cc.law_mu, cc.law_nu, cc.kernel, cc.cost.p);
  cc.seed = seed_of(cfg);
  cc.threads = threads;
  const auto res = gsw::run_clt_experiment(cc);

  std::ostringstream summary;
  summary << "oracle T = " << num(res.oracle_value) << "\n"
          << "cost-interval coverage " << num(*res.coverage) << ", distance-interval coverage "
          << num(*res.coverage_distance) << "\n"
          << "Kolmogorov distance " << num(*res.ks_distance) << ", variance ratio " << num(*res.variance_ratio)
          << ", degenerate replications " << res.degenerate_replications << "\n";

  if (want_csv(cfg)) {
    std::ostringstream body;
    gsw::write_clt_csv(body, res);
    emit(out, csv_with_config(cfg, body.str()), summary.str());
    return;
  }
  json doc;
  doc["config"] = cfg;
  doc["oracle_value"] = res.oracle_value;
  doc["oracle_error"] = res.oracle_error;
  doc["coverage"] = *res.coverage;
  doc["coverage_distance"] = *res.coverage_distance;
  doc["ks_distance"] = *res.ks_distance;
  doc["variance_ratio"] = *res.variance_ratio;
  doc["degenerate_replications"] = res.degenerate_replications;
  json rows = json::array();
  for (const auto& row : res.clt_rows)
    rows.push_back({{"replication", row.replication},
                    {"t_hat", row.t_hat},
                    {"tau2", row.tau2},
                    {"standardized", std::isfinite(row.standardized) ? json(row.standardized) : json(nullptr)},
                    {"covered_cost", row.covered_cost},
                    {"covered_dist", row.covered_dist}});
  doc["replications"] = rows;
  emit(out, json_text(doc), summary.str());
}

void run_sweep(const json& cfg, const std::string& out, unsigned threads) {
  gsw::SigmaSweepConfig sc;
  std::tie(sc.law_mu, sc.law_nu) = laws_of(cfg);
  sc.cost = gsw::CostSpec{cfg["p"].get<double>()};
  sc.sigmas = cfg["sigmas"].get<std::vector<double>>();
  sc.m = cfg["m"].get<std::size_t>();
  sc.n = cfg["n"].get<std::size_t>();
  sc.k = cfg["k"].get<std::size_t>();
  sc.paired = cfg["paired"].get<bool>();
  sc.train_fraction = cfg["split"].get<double>();
  sc.inference = inference_of(cfg);
  sc.seed = seed_of(cfg);
  sc.threads = threads;
  const auto rows = gsw::run_sigma_sweep(sc);

  std::ostringstream summary;
  for (const auto& row : rows) {
    summary << "sigma=" << num(row.sigma) << "  T_hat=" << num(row.t_hat) << "  tau2=" << num(row.tau2)
            << "  spread=" << num(row.seed_spread);
    if (row.oracle) summary << "  oracle=" << num(*row.oracle);
    summary << "\n";
  }
  if (want_csv(cfg)) {
    std::ostringstream body;
    gsw::write_sweep_csv(body, rows);
    emit(out, csv_with_config(cfg, body.str()), summary.str());
    return;
  }
  json doc;
  doc["config"] = cfg;
  json table = json::array();
  for (const auto& row : rows)
    table.push_back({{"sigma", row.sigma},
                     {"t_hat", row.t_hat},
                     {"tau2", std::isfinite(row.tau2) ? json(row.tau2) : json(nullptr)},
                     {"seed_spread", row.seed_spread},
                     {"oracle", row.oracle ? json(*row.oracle) : json(nullptr)}});
  doc["table"] = table;
  emit(out, json_text(doc), summary.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-smoothed Wasserstein estimation, inference and experiments"};
  app.require_subcommand(1);

  const std::map<std::string, std::string> descriptions = {
      {"ot", "exact optimal transport cost between two CSV samples"},
      {"smooth-cost", "plug-in smoothed cost estimate"},
      {"infer", "sample-splitting confidence intervals (p > 1)"},
      {"test", "two-sample test against the rate threshold"},
      {"rate-exp", "convergence-rate experiment"},
      {"clt-exp", "coverage and normality experiment"},
      {"sigma-sweep", "estimates across a bandwidth grid"},
  };

  std::vector<Command> commands;
  commands.reserve(command_keys().size());
  std::string config_path, out_path;
  unsigned threads = 1;
  for (const auto& [name, names] : command_keys()) {
    Command& cmd = commands.emplace_back();
    cmd.name = name;
    cmd.app = app.add_subcommand(name, descriptions.at(name));
    cmd.app->add_option("--config", config_path, "JSON config file, or a previous output containing \"config\"");
    cmd.app->add_option("--out", out_path, "output file (stdout when omitted)");
    if (name == "rate-exp" || name == "clt-exp" || name == "sigma-sweep")
      cmd.app->add_option("--threads", threads, "worker threads; results do not depend on it")
          ->check(CLI::Range(1u, 1024u));
    for (const auto& key : names) {
      const Key& info = key_info(key);
      const std::string help = std::string(info.help) + " (default " + info.fallback.dump() + ")";
      if (info.kind == Kind::flag) {
        cmd.app->add_flag(flag_name(key), cmd.flags[key], help);
      } else {
        auto* opt = cmd.app->add_option(flag_name(key), cmd.raw[key], help)->type_name(type_label(info.kind));
        if (info.kind == Kind::reals || info.kind == Kind::counts)
          opt->expected(1, -1)->delimiter(',');
        else
          opt->expected(1);
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      const json cfg = resolve(cmd, config_path);
      if (cmd.name == "ot") run_ot(cfg, out_path);
      else if (cmd.name == "smooth-cost") run_smooth_cost(cfg, out_path);
      else if (cmd.name == "infer") return run_infer(cfg, out_path);
      else if (cmd.name == "test") run_test(cfg, out_path);
      else if (cmd.name == "rate-exp") run_rate(cfg, out_path, threads);
      else if (cmd.name == "clt-exp") run_clt(cfg, out_path, threads);
      else if (cmd.name == "sigma-sweep") run_sweep(cfg, out_path, threads);
      return 0;
    } catch (const gsw::InvalidInput& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const json::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const gsw::NullProximityError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 4;
    } catch (const gsw::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 3;
    }
  }
  return 0;
}
