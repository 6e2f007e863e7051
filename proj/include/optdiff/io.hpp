#pragma once

#include <Eigen/Dense>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "optdiff/errors.hpp"
#include "optdiff/potential.hpp"

namespace optdiff {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

/// Minimal CSV writer: one header row, numeric cells in shortest round-trip form.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw InvalidArgument("cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  template <typename T>
  static std::string cell(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_double(static_cast<double>(v));
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else {
      return std::string(v);
    }
  }

  std::ofstream out_;
};

/// diffusion.csv: cell_index, q_left, d_value.
inline void write_diffusion_csv(const std::filesystem::path& path, const Eigen::VectorXd& d) {
  CsvWriter w(path, {"cell_index", "q_left", "d_value"});
  const auto n = d.size();
  for (Eigen::Index i = 0; i < n; ++i) w.row(static_cast<std::int64_t>(i), static_cast<double>(i) / n, d[i]);
}

/// Reads the value column (last field) of a diffusion.csv-style file.
inline Eigen::VectorXd read_diffusion_csv(const std::filesystem::path& path) {
  const std::vector<double> v = detail::read_table_values(path.string());
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

/// Writes JSON through a temporary file and a rename, so readers never see partial files.
inline void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw InvalidArgument("cannot write '" + tmp.string() + "'");
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace optdiff
