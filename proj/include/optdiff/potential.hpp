#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "optdiff/errors.hpp"

namespace optdiff {

/// Maps an unfolded coordinate onto [0, 1).
inline double wrap_unit(double q) noexcept {
  double x = q - std::floor(q);
  // q slightly below an integer can round up to exactly 1.0
  return x < 1.0 ? x : 0.0;
}

enum class PotentialKind { CosMulti, SinSin, Zero, Tabulated };

/// Smooth periodic potential V on the unit torus, evaluated as V(k q) for a
/// periodization frequency k. Immutable once built.
class Potential {
 public:
  /// V(q) = cos(2 pi m q)
  static Potential cos_multi(int m, int frequency = 1) {
    if (m < 1) throw InvalidArgument("cos potential needs m >= 1");
    return Potential(PotentialKind::CosMulti, m, {}, frequency);
  }
  /// V(q) = sin(4 pi q) (2 + sin(2 pi q))
  static Potential sinsin(int frequency = 1) {
    return Potential(PotentialKind::SinSin, 0, {}, frequency);
  }
  static Potential zero(int frequency = 1) {
    return Potential(PotentialKind::Zero, 0, {}, frequency);
  }
  /// Values sampled at nodes j/M, j = 0..M-1, linearly interpolated with wrap-around.
  static Potential tabulated(std::vector<double> values, int frequency = 1) {
    if (values.empty()) throw InvalidArgument("tabulated potential needs at least one value");
    return Potential(PotentialKind::Tabulated, 0, std::move(values), frequency);
  }

  PotentialKind kind() const noexcept { return kind_; }
  int multiplicity() const noexcept { return m_; }
  int frequency() const noexcept { return k_; }
  const std::vector<double>& table() const noexcept { return *table_; }

  /// Same potential shape with another periodization frequency.
  Potential with_frequency(int k) const {
    Potential p = *this;
    if (k < 1) throw InvalidArgument("frequency must be >= 1");
    p.k_ = k;
    return p;
  }

  /// V(k q mod 1).
  double operator()(double q) const noexcept {
    const double x = wrap_unit(static_cast<double>(k_) * wrap_unit(q));
    return base(x);
  }

  /// Canonical CLI spelling (`cos:<m>`, `sinsin`, `zero`, `table`).
  std::string name() const {
    switch (kind_) {
      case PotentialKind::CosMulti: return "cos:" + std::to_string(m_);
      case PotentialKind::SinSin: return "sinsin";
      case PotentialKind::Zero: return "zero";
      case PotentialKind::Tabulated: return "table";
    }
    return "?";
  }

 private:
  Potential(PotentialKind kind, int m, std::vector<double> table, int k)
      : kind_(kind), m_(m), k_(k),
        table_(std::make_shared<const std::vector<double>>(std::move(table))) {
    if (k < 1) throw InvalidArgument("frequency must be >= 1");
  }

  double base(double x) const noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (kind_) {
      case PotentialKind::CosMulti:
        return std::cos(two_pi * m_ * x);
      case PotentialKind::SinSin: {
        const double s1 = std::sin(two_pi * x);
        const double s2 = std::sin(2.0 * two_pi * x);
        return s2 * (2.0 + s1);
      }
      case PotentialKind::Zero:
        return 0.0;
      case PotentialKind::Tabulated: {
        const auto& t = *table_;
        const std::size_t M = t.size();
        const double y = x * static_cast<double>(M);
        std::size_t j = static_cast<std::size_t>(y);
        if (j >= M) j = M - 1;
        const double frac = y - static_cast<double>(j);
        return (1.0 - frac) * t[j] + frac * t[(j + 1) % M];
      }
    }
    return 0.0;
  }

  PotentialKind kind_;
  int m_;
  int k_;
  std::shared_ptr<const std::vector<double>> table_;
};

/// Midpoint rule for Z = \int_0^1 e^{-V(q)} dq.
inline double partition_constant(const Potential& v, int n_quad = 100000) {
  if (n_quad < 2) throw InvalidArgument("n_quad must be >= 2");
  double sum = 0.0;
  const double h = 1.0 / n_quad;
  for (int i = 0; i < n_quad; ++i) sum += std::exp(-v((i + 0.5) * h));
  return sum * h;
}

/// Gibbs density e^{-V(q)} / Z.
inline double gibbs_density(const Potential& v, double q, double z) {
  return std::exp(-v(q)) / z;
}

namespace detail {

inline std::vector<double> read_table_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open potential table '" + path + "'");
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // the last field of each row carries the value, so diffusion.csv files load as-is
    const auto pos = line.find_last_of(',');
    std::string_view field = pos == std::string::npos ? std::string_view(line)
                                                       : std::string_view(line).substr(pos + 1);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      if (values.empty()) continue;  // header row
      throw InvalidArgument("bad numeric field in '" + path + "': " + line);
    }
    values.push_back(x);
  }
  if (values.empty()) throw InvalidArgument("potential table '" + path + "' has no values");
  return values;
}

}  // namespace detail

/// Parses `cos:<m>`, `sinsin`, `zero` or `table:<path.csv>`.
inline Potential parse_potential(std::string_view spec, int frequency = 1) {
  if (spec == "sinsin") return Potential::sinsin(frequency);
  if (spec == "zero") return Potential::zero(frequency);
  if (spec.starts_with("cos:")) {
    auto digits = spec.substr(4);
    int m = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), m);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
      throw InvalidArgument("bad potential '" + std::string(spec) + "'");
    return Potential::cos_multi(m, frequency);
  }
  if (spec.starts_with("table:"))
    return Potential::tabulated(detail::read_table_values(std::string(spec.substr(6))), frequency);
  throw InvalidArgument("unknown potential '" + std::string(spec) +
                        "' (expected cos:<m>, sinsin, zero or table:<path>)");
}

}  // namespace optdiff
