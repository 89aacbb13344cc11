#include "gsw/measures.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gsw/error.hpp"

namespace gsw {

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> coords,
                                   std::vector<double> weights)
    : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {
  if (dim_ == 0) throw InvalidInput("measure dimension must be positive");
  if (weights_.empty()) throw InvalidInput("measure must have at least one point");
  if (coords_.size() != weights_.size() * dim_)
    throw InvalidInput("coordinate count does not match N * dim");
  // Neumaier summation: 1/N repeated N times must not drift past the tolerance
  double total = 0.0, carry = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("weights must be finite and nonnegative");
    const double t = total + w;
    carry += std::abs(total) >= std::abs(w) ? (total - t) + w : (w - t) + total;
    total = t;
  }
  total += carry;
  if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("weights must sum to 1");
  for (double c : coords_)
    if (!std::isfinite(c)) throw InvalidInput("coordinates must be finite");
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::size_t dim, std::vector<double> coords) {
  if (dim == 0) throw InvalidInput("measure dimension must be positive");
  const std::size_t n = coords.size() / dim;
  if (n == 0) throw InvalidInput("measure must have at least one point");
  EmpiricalMeasure mu(dim, std::move(coords), std::vector<double>(n, 1.0 / static_cast<double>(n)));
  mu.equal_weights_ = true;
  return mu;
}

EmpiricalMeasure EmpiricalMeasure::select(std::span<const std::size_t> idx) const {
  std::vector<double> c;
  c.reserve(idx.size() * dim_);
  for (std::size_t i : idx) {
    auto p = point(i);
    c.insert(c.end(), p.begin(), p.end());
  }
  return uniform(dim_, std::move(c));
}

EmpiricalMeasure EmpiricalMeasure::scaled(double factor) const {
  EmpiricalMeasure out = *this;
  for (double& c : out.coords_) c *= factor;
  return out;
}

EmpiricalMeasure EmpiricalMeasure::translated(std::span<const double> shift) const {
  if (shift.size() != dim_) throw InvalidInput("shift dimension mismatch");
  EmpiricalMeasure out = *this;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t k = 0; k < dim_; ++k) out.coords_[i * dim_ + k] += shift[k];
  return out;
}

MomentOrder::MomentOrder(double value) : q(value) {
  if (!(value > 0.0)) throw InvalidInput("moment order must be positive");
}

EmpiricalMeasure empirical_from_rows(const std::vector<std::vector<double>>& rows,
                                     const std::optional<std::vector<double>>& weights) {
  if (rows.empty()) throw InvalidInput("no points given");
  const std::size_t dim = rows.front().size();
  if (dim == 0) throw InvalidInput("points must have at least one coordinate");
  std::vector<double> coords;
  coords.reserve(rows.size() * dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim)
      throw InvalidInput("dimension mismatch at row " + std::to_string(i) + ": expected " +
                         std::to_string(dim) + ", got " + std::to_string(rows[i].size()));
    coords.insert(coords.end(), rows[i].begin(), rows[i].end());
  }
  if (!weights) return EmpiricalMeasure::uniform(dim, std::move(coords));

  if (weights->size() != rows.size()) throw InvalidInput("weight count does not match row count");
  double total = 0.0;
  for (double w : *weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("negative or non-finite weight");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidInput("weights sum to zero");
  std::vector<double> w(*weights);
  for (double& x : w) x /= total;
  return EmpiricalMeasure(dim, std::move(coords), std::move(w));
}

double moment(const EmpiricalMeasure& mu, MomentOrder r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double sq = 0.0;
    for (double c : mu.point(i)) sq += c * c;
    acc += mu.weight(i) * (1.0 + std::pow(sq, 0.5 * r.q));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Laws

LawSpec LawSpec::gaussian(std::vector<double> mean, double variance) {
  LawSpec law;
  law.family = Family::gaussian;
  law.dim = mean.size();
  law.location = std::move(mean);
  law.variance = variance;
  law.validate();
  return law;
}

LawSpec LawSpec::uniform_ball(std::size_t dim, double radius) {
  LawSpec law;
  law.family = Family::uniform_ball;
  law.dim = dim;
  law.radius = radius;
  law.validate();
  return law;
}

LawSpec LawSpec::pareto_radial(std::size_t dim, double alpha, double scale) {
  LawSpec law;
  law.family = Family::pareto_radial;
  law.dim = dim;
  law.alpha = alpha;
  law.scale = scale;
  law.validate();
  return law;
}

LawSpec LawSpec::shifted(std::vector<double> shift) const {
  if (shift.size() != dim) throw InvalidInput("shift dimension mismatch");
  LawSpec out = *this;
  if (out.location.empty()) out.location.assign(dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) out.location[k] += shift[k];
  return out;
}

void LawSpec::validate() const {
  if (dim == 0) throw InvalidInput("law dimension must be positive");
  if (!location.empty() && location.size() != dim)
    throw InvalidInput("law location has wrong dimension");
  switch (family) {
    case Family::gaussian:
      if (!(variance > 0.0)) throw InvalidInput("gaussian variance must be positive");
      break;
    case Family::uniform_ball:
      if (!(radius > 0.0)) throw InvalidInput("ball radius must be positive");
      break;
    case Family::pareto_radial:
      if (!(alpha > 0.0)) throw InvalidInput("pareto tail index must be positive");
      if (!(scale > 0.0)) throw InvalidInput("pareto scale must be positive");
      break;
  }
}

namespace {

void unit_direction(CounterRng& rng, std::span<double> out) {
  if (out.size() == 1) {
    out[0] = (rng.next_u64() >> 63) ? 1.0 : -1.0;
    return;
  }
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& c : out) {
      c = rng.normal();
      norm2 += c * c;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& c : out) c *= inv;
}

}  // namespace

EmpiricalMeasure sample(const LawSpec& law, std::size_t n, RngSpec spec) {
  law.validate();
  if (n == 0) throw InvalidInput("sample size must be positive");
  CounterRng rng(spec);
  const std::size_t d = law.dim;
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> x(coords.data() + i * d, d);
    switch (law.family) {
      case LawSpec::Family::gaussian: {
        const double sd = std::sqrt(law.variance);
        for (double& c : x) c = sd * rng.normal();
        break;
      }
      case LawSpec::Family::uniform_ball: {
        unit_direction(rng, x);
        const double r = law.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
        for (double& c : x) c *= r;
        break;
      }
      case LawSpec::Family::pareto_radial: {
        unit_direction(rng, x);
        const double r = law.scale * std::pow(rng.uniform_pos(), -1.0 / law.alpha);
        for (double& c : x) c *= r;
        break;
      }
    }
    for (std::size_t k = 0; k < d; ++k) x[k] += law.location_at(k);
  }
  return EmpiricalMeasure::uniform(d, std::move(coords));
}

// ---------------------------------------------------------------------------
// Text forms

namespace {

double parse_double(std::string_view s, std::string_view what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidInput("cannot parse number '" + std::string(s) + "' in " + std::string(what));
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<double> parse_vector(std::string_view s, std::size_t dim, std::string_view what) {
  std::vector<double> v;
  for (auto part : split(s, ',')) v.push_back(parse_double(part, what));
  if (v.size() == 1 && dim > 1) v.assign(dim, v.front());
  if (v.size() != dim) throw InvalidInput(std::string(what) + " must have " + std::to_string(dim) + " entries");
  return v;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

LawSpec parse_law(std::string_view text, std::size_t dim) {
  const auto parts = split(text, ':');
  LawSpec law;
  law.dim = dim;
  const std::string_view fam = parts.front();
  if (fam == "gaussian") {
    law.family = LawSpec::Family::gaussian;
  } else if (fam == "ball" || fam == "uniform-ball") {
    law.family = LawSpec::Family::uniform_ball;
  } else if (fam == "pareto" || fam == "pareto-radial") {
    law.family = LawSpec::Family::pareto_radial;
  } else {
    throw InvalidInput("unknown law family '" + std::string(fam) + "'");
  }
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string_view::npos) throw InvalidInput("law parameter without '=': " + std::string(parts[i]));
    const auto key = parts[i].substr(0, eq);
    const auto val = parts[i].substr(eq + 1);
    if (key == "mean" || key == "shift" || key == "loc") {
      law.location = parse_vector(val, dim, key);
    } else if (key == "var" || key == "variance") {
      law.variance = parse_double(val, key);
    } else if (key == "radius") {
      law.radius = parse_double(val, key);
    } else if (key == "alpha") {
      law.alpha = parse_double(val, key);
    } else if (key == "scale") {
      law.scale = parse_double(val, key);
    } else {
      throw InvalidInput("unknown law parameter '" + std::string(key) + "'");
    }
  }
  law.validate();
  return law;
}

std::string format_law(const LawSpec& law) {
  std::string out;
  switch (law.family) {
    case LawSpec::Family::gaussian:
      out = "gaussian:var=" + fmt_double(law.variance);
      break;
    case LawSpec::Family::uniform_ball:
      out = "ball:radius=" + fmt_double(law.radius);
      break;
    case LawSpec::Family::pareto_radial:
      out = "pareto:alpha=" + fmt_double(law.alpha) + ":scale=" + fmt_double(law.scale);
      break;
  }
  if (!law.location.empty()) {
    out += ":loc=";
    for (std::size_t k = 0; k < law.location.size(); ++k) {
      if (k) out += ',';
      out += fmt_double(law.location[k]);
    }
  }
  return out;
}

EmpiricalMeasure parse_csv_measure(std::string_view text, const std::string& source_name) {
  std::vector<std::vector<double>> rows;
  std::vector<double> weights;
  std::optional<std::size_t> weight_col;
  std::optional<std::size_t> ncols;
  bool header_seen = false;
  std::size_t line_no = 0;

  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#') continue;
    const auto fields = split(line, ',');
    const auto where = source_name + ":" + std::to_string(line_no);

    if (!header_seen && rows.empty()) {
      // A header is any first row containing a non-numeric field.
      bool numeric = true;
      for (auto f : fields) {
        try {
          parse_double(f, "");
        } catch (const InvalidInput&) {
          numeric = false;
          break;
        }
      }
      if (!numeric) {
        header_seen = true;
        ncols = fields.size();
        for (std::size_t c = 0; c < fields.size(); ++c) {
          auto name = fields[c];
          while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
          while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
          if (name == "weight") weight_col = c;
        }
        continue;
      }
    }
    if (ncols && fields.size() != *ncols)
      throw InvalidInput(where + ": expected " + std::to_string(*ncols) + " fields, got " +
                         std::to_string(fields.size()));
    ncols = fields.size();
    std::vector<double> row;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      try {
        v = parse_double(fields[c], "column " + std::to_string(c + 1));
      } catch (const InvalidInput& e) {
        throw InvalidInput(where + ": " + e.what());
      }
      if (!std::isfinite(v)) throw InvalidInput(where + ": non-finite value");
      if (weight_col && c == *weight_col) {
        if (v < 0.0) throw InvalidInput(where + ": negative weight");
        weights.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    if (row.empty()) throw InvalidInput(where + ": row has no coordinates");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput(source_name + ": no data rows");
  if (weight_col) return empirical_from_rows(rows, weights);
  return empirical_from_rows(rows);
}

EmpiricalMeasure read_csv_measure(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_measure(buf.str(), path);
}

}  // namespace gsw
