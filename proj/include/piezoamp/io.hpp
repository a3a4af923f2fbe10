#pragma once

// Parameter files, CSV/JSON emission and run manifests.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "piezoamp/design.hpp"
#include "piezoamp/error.hpp"
#include "piezoamp/material.hpp"

namespace piezoamp::io {

using nlohmann::json;

/// 17 significant digits, so reruns compare bitwise.
inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Parses `key = value` lines; '#' starts a comment. All six keys are required.
inline MaterialParams parse_config(std::istream& in, const std::string& source = "<config>") {
  std::map<std::string, double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << source << ":" << lineno << ": expected 'key = value'";
      throw DomainError(os.str());
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string val = trim(std::string_view(body).substr(eq + 1));
    static const char* known[] = {"L", "rho", "mu", "alpha", "gamma", "beta"};
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      std::ostringstream os;
      os << source << ":" << lineno << ": unknown key '" << key << "'";
      throw DomainError(os.str());
    }
    char* end = nullptr;
    const double x = std::strtod(val.c_str(), &end);
    if (val.empty() || end != val.c_str() + val.size()) {
      std::ostringstream os;
      os << source << ":" << lineno << ": '" << val << "' is not a number";
      throw DomainError(os.str());
    }
    values[key] = x;
  }
  MaterialParams p;
  for (const char* k : {"L", "rho", "mu", "alpha", "gamma", "beta"}) {
    if (!values.count(k)) {
      std::ostringstream os;
      os << source << ": missing key '" << k << "'";
      throw DomainError(os.str());
    }
  }
  p.L = values["L"];
  p.rho = values["rho"];
  p.mu = values["mu"];
  p.alpha = values["alpha"];
  p.gamma = values["gamma"];
  p.beta = values["beta"];
  p.validate();
  return p;
}

inline MaterialParams load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

inline void write_config(std::ostream& out, const MaterialParams& p) {
  out << "# magnetizable piezoelectric beam parameters (SI)\n";
  out << "L = " << format_number(p.L) << "\n";
  out << "rho = " << format_number(p.rho) << "\n";
  out << "mu = " << format_number(p.mu) << "\n";
  out << "alpha = " << format_number(p.alpha) << "\n";
  out << "gamma = " << format_number(p.gamma) << "\n";
  out << "beta = " << format_number(p.beta) << "\n";
}

/// Environment variable naming a directory of `<name>.cfg` presets.
inline constexpr const char* kPresetDirEnv = "PIEZOAMP_PRESET_DIR";

/// Built-in "table1", otherwise `<name>.cfg` under $PIEZOAMP_PRESET_DIR.
inline MaterialParams load_preset(const std::string& name) {
  if (name == "table1") return table1_preset();
  if (const char* dir = std::getenv(kPresetDirEnv); dir && *dir) {
    const auto path = std::filesystem::path(dir) / (name + ".cfg");
    if (std::filesystem::exists(path)) return load_config(path);
  }
  throw DomainError("unknown preset '" + name + "' (built-in: table1; set " +
                    std::string(kPresetDirEnv) + " for more)");
}

/// CSV writer that enforces a constant column count.
class CsvWriter {
public:
  CsvWriter(std::ostream& out, std::vector<std::string> header)
      : out_(out), columns_(header.size()) {
    write_row_strings(header);
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    write_row_strings(cells);
  }

  void row_strings(const std::vector<std::string>& cells) { write_row_strings(cells); }

private:
  void write_row_strings(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("CSV row has wrong column count");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  std::ostream& out_;
  std::size_t columns_;
};

/// Dense row-major text matrix with a `rows cols` header line.
inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& A) {
  out << A.rows() << " " << A.cols() << "\n";
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) out << (j ? " " : "") << format_number(A(i, j));
    out << "\n";
  }
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
  Eigen::Index r = 0, c = 0;
  if (!(in >> r >> c) || r < 0 || c < 0) throw DomainError("bad matrix header");
  Eigen::MatrixXd A(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      if (!(in >> A(i, j))) throw DomainError("truncated matrix data");
  return A;
}

inline json params_json(const MaterialParams& p) {
  return {{"L", p.L}, {"rho", p.rho}, {"mu", p.mu},
          {"alpha", p.alpha}, {"gamma", p.gamma}, {"beta", p.beta}};
}

inline json derived_json(const DerivedConstants& d) {
  return {{"alpha1", d.alpha1},         {"eta", d.eta},
          {"zeta_minus", d.zeta_minus}, {"zeta_plus", d.zeta_plus},
          {"sigma_max", d.sigma_max},   {"T_obs_min", d.T_obs_min}};
}

inline json design_json(const FeedbackDesign& fd, const Interval& eps_bounds,
                        const DerivedConstants& d) {
  return {{"epsilon", fd.epsilon},
          {"eps_bounds", {eps_bounds.lo, eps_bounds.hi}},
          {"c1", {fd.c1.lo, fd.c1.hi}},
          {"c2", {fd.c2.lo, fd.c2.hi}},
          {"xi_star", {fd.xi1_star, fd.xi2_star}},
          {"sigma_max", d.sigma_max},
          {"sigma", fd.sigma},
          {"bigM", fd.bigM},
          {"delta", fd.delta}};
}

inline json report_json(const DesignReport& r) {
  return {{"xi1", r.xi1},
          {"xi2", r.xi2},
          {"epsilon", r.epsilon},
          {"threshold", r.threshold},
          {"f1", r.f1_val},
          {"f2", r.f2_val},
          {"zero_amplifier", r.zero_amplifier},
          {"f1_ok", r.f1_ok},
          {"f2_ok", r.f2_ok},
          {"epsilon_ok", r.epsilon_ok},
          {"xi1_in_interval", r.xi1_in_interval},
          {"xi2_in_interval", r.xi2_in_interval},
          {"c1", {r.c1.lo, r.c1.hi}},
          {"c2", {r.c2.lo, r.c2.hi}},
          {"pass", r.all_pass()}};
}

/// Human-readable design table.
inline std::string design_table(const FeedbackDesign& fd, const Interval& eb,
                                const DerivedConstants& d) {
  std::ostringstream os;
  os.precision(6);
  os << "  eta                 " << d.eta << " s/m\n"
     << "  sigma_max           " << d.sigma_max << " 1/s\n"
     << "  epsilon             " << fd.epsilon << "   admissible (" << eb.lo << ", " << eb.hi
     << ")\n"
     << "  xi1 interval        (" << fd.c1.lo << ", " << fd.c1.hi << ")\n"
     << "  xi2 interval        (" << fd.c2.lo << ", " << fd.c2.hi << ")\n"
     << "  recommended xi1     " << fd.xi1_star << "\n"
     << "  recommended xi2     " << fd.xi2_star << "\n"
     << "  delta               " << fd.delta << "\n"
     << "  guaranteed (sigma, M) = (" << fd.sigma << ", " << fd.bigM << ")\n";
  return os.str();
}

struct RunManifest {
  std::string command;
  MaterialParams params;
  json options = json::object();
  std::vector<std::string> outputs;
  double wall_time = 0.0;

  [[nodiscard]] json to_json() const {
    return {{"command", command},
            {"params", params_json(params)},
            {"options", options},
            {"outputs", outputs},
            {"wall_time", wall_time}};
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write manifest " + path.string());
    out << to_json().dump(2) << "\n";
  }
};

/// Manifest path placed next to a primary output file.
inline std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

} // namespace piezoamp::io
