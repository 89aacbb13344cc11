#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsw/rng.hpp"

namespace gsw {

/// Finitely supported probability measure on R^d. Points are stored
/// row-major; weights are nonnegative and sum to one.
class EmpiricalMeasure {
 public:
  /// Validates and takes ownership. `weights` must already sum to 1 (tol 1e-12).
  EmpiricalMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

  /// Equal weights 1/N.
  static EmpiricalMeasure uniform(std::size_t dim, std::vector<double> coords);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  [[nodiscard]] std::span<const double> coords() const noexcept { return coords_; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
  [[nodiscard]] double weight(std::size_t i) const noexcept { return weights_[i]; }
  /// True when every weight equals 1/N exactly as constructed by `uniform`.
  [[nodiscard]] bool equal_weights() const noexcept { return equal_weights_; }

  /// Subset of points (equal weights), in the given order.
  [[nodiscard]] EmpiricalMeasure select(std::span<const std::size_t> idx) const;
  /// Every point scaled by `factor`.
  [[nodiscard]] EmpiricalMeasure scaled(double factor) const;
  /// Every point translated by `shift`.
  [[nodiscard]] EmpiricalMeasure translated(std::span<const double> shift) const;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<double> weights_;
  bool equal_weights_ = false;
};

/// Moment order r > 0 in M_r(mu) = integral of (1 + |x|^r).
struct MomentOrder {
  double q;
  explicit MomentOrder(double value);
};

/// Build a measure from rows; weights are normalized, uniform when absent.
EmpiricalMeasure empirical_from_rows(const std::vector<std::vector<double>>& rows,
                                     const std::optional<std::vector<double>>& weights = {});

/// sum_i w_i (1 + |x_i|^r). Always >= 1.
double moment(const EmpiricalMeasure& mu, MomentOrder r);

/// Benchmark laws with controllable tails, all translated by `location`.
struct LawSpec {
  enum class Family { gaussian, uniform_ball, pareto_radial };

  Family family = Family::gaussian;
  std::size_t dim = 1;
  std::vector<double> location;  // empty means origin
  double variance = 1.0;         // gaussian: covariance = variance * I
  double radius = 1.0;           // uniform_ball
  double alpha = 3.0;            // pareto_radial tail index, M_q finite iff q < alpha
  double scale = 1.0;            // pareto_radial minimum radius

  static LawSpec gaussian(std::vector<double> mean, double variance);
  static LawSpec uniform_ball(std::size_t dim, double radius);
  static LawSpec pareto_radial(std::size_t dim, double alpha, double scale = 1.0);
  [[nodiscard]] LawSpec shifted(std::vector<double> shift) const;

  /// Throws InvalidInput on out-of-range parameters.
  void validate() const;
  [[nodiscard]] double location_at(std::size_t k) const {
    return location.empty() ? 0.0 : location[k];
  }
};

/// n i.i.d. equal-weight draws. Pure function of (law, n, rng).
EmpiricalMeasure sample(const LawSpec& law, std::size_t n, RngSpec rng);

/// Text form `family:key=value:...`, e.g. `gaussian:mean=0,1:var=2`,
/// `pareto:alpha=2.5:scale=1:shift=1`, `ball:radius=1`.
LawSpec parse_law(std::string_view text, std::size_t dim);
std::string format_law(const LawSpec& law);

/// Reads the CSV point format: one point per row, optional header, optional
/// `weight` column chosen by header name, `#` comment lines.
EmpiricalMeasure read_csv_measure(const std::string& path);
EmpiricalMeasure parse_csv_measure(std::string_view text, const std::string& source_name = "<input>");

}  // namespace gsw
