#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonacc/assembly.hpp"
#include "nonacc/fields.hpp"
#include "nonacc/grid.hpp"

namespace nonacc {

/// Invalid configuration; line() is 1-based, 0 when the problem is not tied to one line.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

struct ConfigValue {
  std::string text;
  std::size_t line = 0;
};

/// Sections of key = value pairs, keys sorted.
using ConfigSections = std::map<std::string, std::map<std::string, ConfigValue>>;

/// Reads the INI-style text (grammar in the README). Only syntax is checked here.
ConfigSections parse_ini(const std::string& text);

struct ProblemConfig {
  // [problem]
  int dim = 1;
  std::vector<double> lower, upper;
  std::vector<int> n;
  std::string V;
  std::vector<std::string> A;
  std::string scheme = "auto";

  // [solver]
  std::vector<Complex> shifts;
  int k = 6;
  int m = 0;
  double tol = 1e-8;
  bool richardson = false;
  int quadrature_points = 32;
  std::vector<double> expected;
  double expected_rtol = 0.0;
  double expected_atol = 1e-6;
  std::optional<double> vinf_radius;

  // [certificate]
  std::vector<double> gamma1_ladder;
  double gamma2_cap = 10.0;
  std::vector<double> asymptotic_radii;
  double asymptotic_tol = 0.1;

  // [agmon]
  double epsilon = 0.1;
  std::optional<std::vector<double>> x0;
  double enlarge = 1.2;

  // [truncation]
  std::vector<double> radii;
  std::optional<double> reference_radius;
  std::optional<double> truncation_h;

  // [verify]
  int samples = 100;
  double margin = 0.1;
  double kappa = 10.0;

  // [probe]
  int probes = 20;
  double gap_min = 1.0;
  double gap_max = 100.0;
  int probe_iterations = 30;

  // [run]
  std::uint64_t seed = 1;

  ConfigSections sections;

  ElectromagneticField field() const;
  Grid grid() const;
  Scheme resolved_scheme() const;
  /// FNV-1a over the canonical "section.key=value" lines.
  std::uint64_t hash() const;
};

/// Parses and validates; every error carries the line of the offending key.
ProblemConfig parse_config(const std::string& text);
ProblemConfig load_config(const std::string& path);

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace nonacc
