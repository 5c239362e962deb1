#include "nonacc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nonacc/expr.hpp"

namespace nonacc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits on commas outside double quotes.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"problem", {"dim", "lower", "upper", "n", "h", "V", "A", "scheme"}},
      {"solver",
       {"shifts", "k", "m", "tol", "richardson", "quadrature_points", "expected", "expected_rtol", "expected_atol",
        "vinf_radius"}},
      {"certificate", {"gamma1_ladder", "gamma2_cap", "asymptotic_radii", "asymptotic_tol"}},
      {"agmon", {"epsilon", "x0", "enlarge"}},
      {"truncation", {"radii", "reference_radius", "h"}},
      {"verify", {"samples", "margin", "kappa"}},
      {"probe", {"count", "gap_min", "gap_max", "iterations"}},
      {"run", {"seed"}},
  };
  return keys;
}

class Reader {
public:
  explicit Reader(const ConfigSections& s) : s_(s) {}

  const ConfigValue* find(const std::string& section, const std::string& key) const {
    const auto it = s_.find(section);
    if (it == s_.end()) return nullptr;
    const auto jt = it->second.find(key);
    return jt == it->second.end() ? nullptr : &jt->second;
  }

  const ConfigValue& require(const std::string& section, const std::string& key) const {
    const ConfigValue* v = find(section, key);
    if (!v) throw ConfigError(0, "missing required key " + section + "." + key);
    return *v;
  }

  static Complex complex_of(const std::string& text, std::size_t line) {
    try {
      const expr::Expr e = expr::parse(text, 1);
      if (e.max_variable() != 0) throw ConfigError(line, "expected a constant, got '" + text + "'");
      const double zero = 0.0;
      return e.eval(std::span<const double>(&zero, 1));
    } catch (const expr::ParseError& err) {
      throw ConfigError(line, "cannot read '" + text + "': " + err.what());
    } catch (const expr::EvalError& err) {
      throw ConfigError(line, "cannot evaluate '" + text + "': " + err.what());
    }
  }

  static double real_of(const std::string& text, std::size_t line) {
    const Complex c = complex_of(text, line);
    if (c.imag() != 0.0) throw ConfigError(line, "expected a real number, got '" + text + "'");
    return c.real();
  }

  static long long integer_of(const std::string& text, std::size_t line) {
    const double v = real_of(text, line);
    if (v != std::floor(v) || std::abs(v) > 1e15) throw ConfigError(line, "expected an integer, got '" + text + "'");
    return static_cast<long long>(v);
  }

  static std::string quoted_of(const std::string& text, std::size_t line) {
    if (text.size() < 2 || text.front() != '"' || text.back() != '"') {
      throw ConfigError(line, "expected a double-quoted expression, got '" + text + "'");
    }
    return text.substr(1, text.size() - 2);
  }

  static bool bool_of(const std::string& text, std::size_t line) {
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    throw ConfigError(line, "expected true or false, got '" + text + "'");
  }

  std::vector<double> reals(const ConfigValue& v) const {
    std::vector<double> out;
    for (const auto& item : split_list(v.text)) out.push_back(real_of(item, v.line));
    return out;
  }

  void real(const std::string& s, const std::string& k, double& out) const {
    if (const auto* v = find(s, k)) out = real_of(v->text, v->line);
  }
  void integer(const std::string& s, const std::string& k, int& out) const {
    if (const auto* v = find(s, k)) out = static_cast<int>(integer_of(v->text, v->line));
  }

private:
  const ConfigSections& s_;
};

}  // namespace

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message : "config: " + message),
      line_(line) {}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ConfigSections parse_ini(const std::string& text) {
  ConfigSections out;
  std::istringstream is(text);
  std::string raw, section;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    // strip comments outside quotes
    std::string s;
    bool quoted = false;
    for (char c : raw) {
      if (c == '"') quoted = !quoted;
      if (!quoted && (c == '#' || c == ';')) break;
      s += c;
    }
    if (quoted) throw ConfigError(line, "unterminated quote");
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "section header must end with ']'");
      section = trim(s.substr(1, s.size() - 2));
      if (!known_keys().count(section)) throw ConfigError(line, "unknown section [" + section + "]");
      out[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    if (section.empty()) throw ConfigError(line, "key outside of any section");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "empty key");
    if (!known_keys().at(section).count(key)) throw ConfigError(line, "unknown key '" + key + "' in [" + section + "]");
    if (value.empty()) throw ConfigError(line, "empty value for '" + key + "'");
    if (out[section].count(key)) throw ConfigError(line, "duplicate key '" + key + "'");
    out[section][key] = ConfigValue{value, line};
  }
  return out;
}

ProblemConfig parse_config(const std::string& text) {
  ProblemConfig c;
  c.sections = parse_ini(text);
  const Reader r(c.sections);

  const ConfigValue& dim = r.require("problem", "dim");
  c.dim = static_cast<int>(Reader::integer_of(dim.text, dim.line));
  if (c.dim != 1 && c.dim != 2) throw ConfigError(dim.line, "dim must be 1 or 2");
  auto per_axis = [&](const std::string& key) {
    const ConfigValue& v = r.require("problem", key);
    std::vector<double> xs = r.reals(v);
    if (xs.size() == 1) xs.resize(static_cast<std::size_t>(c.dim), xs[0]);
    if (static_cast<int>(xs.size()) != c.dim) throw ConfigError(v.line, key + " needs one value per axis");
    return xs;
  };
  c.lower = per_axis("lower");
  c.upper = per_axis("upper");
  for (int a = 0; a < c.dim; ++a) {
    if (!(c.lower[static_cast<std::size_t>(a)] < c.upper[static_cast<std::size_t>(a)])) {
      throw ConfigError(r.require("problem", "upper").line, "upper must exceed lower on every axis");
    }
  }
  const ConfigValue* nv = r.find("problem", "n");
  const ConfigValue* hv = r.find("problem", "h");
  if ((nv != nullptr) == (hv != nullptr)) {
    throw ConfigError(nv ? nv->line : (hv ? hv->line : dim.line), "give exactly one of n and h");
  }
  if (nv) {
    for (double x : r.reals(*nv)) {
      if (x != std::floor(x)) throw ConfigError(nv->line, "n must be an integer");
      c.n.push_back(static_cast<int>(x));
    }
    if (c.n.size() == 1) c.n.resize(static_cast<std::size_t>(c.dim), c.n[0]);
    if (static_cast<int>(c.n.size()) != c.dim) throw ConfigError(nv->line, "n needs one value per axis");
  } else {
    const double h = Reader::real_of(hv->text, hv->line);
    if (!(h > 0.0)) throw ConfigError(hv->line, "h must be positive");
    for (int a = 0; a < c.dim; ++a) {
      c.n.push_back(static_cast<int>(std::lround((c.upper[static_cast<std::size_t>(a)] - c.lower[static_cast<std::size_t>(a)]) / h)) - 1);
    }
  }
  for (int n : c.n) {
    if (n < 3) throw ConfigError(nv ? nv->line : hv->line, "at least 3 nodes per axis are required");
  }

  const ConfigValue& V = r.require("problem", "V");
  c.V = Reader::quoted_of(V.text, V.line);
  try {
    expr::parse(c.V, c.dim);
  } catch (const expr::ParseError& e) {
    throw ConfigError(V.line, std::string("V: ") + e.what());
  }
  if (const auto* A = r.find("problem", "A")) {
    for (const auto& item : split_list(A->text)) {
      c.A.push_back(Reader::quoted_of(item, A->line));
      try {
        expr::parse(c.A.back(), c.dim);
      } catch (const expr::ParseError& e) {
        throw ConfigError(A->line, std::string("A: ") + e.what());
      }
    }
    if (static_cast<int>(c.A.size()) != c.dim) throw ConfigError(A->line, "A needs one component per axis");
  }
  if (const auto* s = r.find("problem", "scheme")) {
    c.scheme = s->text;
    if (c.scheme != "auto") {
      try {
        scheme_from_string(c.scheme);
      } catch (const std::exception&) {
        throw ConfigError(s->line, "scheme must be auto, expanded or gauge_covariant");
      }
    }
  }
  try {
    c.field();
  } catch (const std::exception& e) {
    throw ConfigError(V.line, e.what());
  }

  if (const auto* s = r.find("solver", "shifts")) {
    for (const auto& item : split_list(s->text)) c.shifts.push_back(Reader::complex_of(item, s->line));
  }
  r.integer("solver", "k", c.k);
  r.integer("solver", "m", c.m);
  r.real("solver", "tol", c.tol);
  r.integer("solver", "quadrature_points", c.quadrature_points);
  if (const auto* v = r.find("solver", "richardson")) c.richardson = Reader::bool_of(v->text, v->line);
  if (const auto* v = r.find("solver", "expected")) c.expected = r.reals(*v);
  r.real("solver", "expected_rtol", c.expected_rtol);
  r.real("solver", "expected_atol", c.expected_atol);
  if (const auto* v = r.find("solver", "vinf_radius")) c.vinf_radius = Reader::real_of(v->text, v->line);
  if (c.k < 1) throw ConfigError(r.find("solver", "k")->line, "k must be positive");
  if (!(c.tol > 0.0)) throw ConfigError(r.find("solver", "tol")->line, "tol must be positive");
  if (c.quadrature_points < 4 || c.quadrature_points % 2) {
    throw ConfigError(r.find("solver", "quadrature_points")->line, "quadrature_points must be even and >= 4");
  }

  if (const auto* v = r.find("certificate", "gamma1_ladder")) {
    c.gamma1_ladder = r.reals(*v);
    for (double g : c.gamma1_ladder) {
      if (!(g > 0.0)) throw ConfigError(v->line, "gamma1 candidates must be positive");
    }
  }
  r.real("certificate", "gamma2_cap", c.gamma2_cap);
  if (const auto* v = r.find("certificate", "asymptotic_radii")) c.asymptotic_radii = r.reals(*v);
  r.real("certificate", "asymptotic_tol", c.asymptotic_tol);

  r.real("agmon", "epsilon", c.epsilon);
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ConfigError(r.find("agmon", "epsilon")->line, "epsilon must lie in (0, 1)");
  if (const auto* v = r.find("agmon", "x0")) {
    c.x0 = r.reals(*v);
    if (static_cast<int>(c.x0->size()) != c.dim) throw ConfigError(v->line, "x0 needs one coordinate per axis");
  }
  r.real("agmon", "enlarge", c.enlarge);
  if (!(c.enlarge > 1.0)) throw ConfigError(r.find("agmon", "enlarge")->line, "enlarge must exceed 1");

  if (const auto* v = r.find("truncation", "radii")) {
    c.radii = r.reals(*v);
    if (!std::is_sorted(c.radii.begin(), c.radii.end())) throw ConfigError(v->line, "radii must be increasing");
    if (c.radii.size() < 3) throw ConfigError(v->line, "at least three radii are required");
  }
  if (const auto* v = r.find("truncation", "reference_radius")) {
    c.reference_radius = Reader::real_of(v->text, v->line);
    if (!c.radii.empty() && *c.reference_radius < c.radii.back()) {
      throw ConfigError(v->line, "reference_radius must not be smaller than the radii");
    }
  }
  if (const auto* v = r.find("truncation", "h")) c.truncation_h = Reader::real_of(v->text, v->line);

  r.integer("verify", "samples", c.samples);
  r.real("verify", "margin", c.margin);
  r.real("verify", "kappa", c.kappa);
  if (c.samples < 1) throw ConfigError(r.find("verify", "samples")->line, "samples must be positive");

  r.integer("probe", "count", c.probes);
  r.real("probe", "gap_min", c.gap_min);
  r.real("probe", "gap_max", c.gap_max);
  r.integer("probe", "iterations", c.probe_iterations);
  if (!(c.gap_min > 0.0 && c.gap_min <= c.gap_max)) {
    throw ConfigError(r.find("probe", "gap_max") ? r.find("probe", "gap_max")->line : 0, "need 0 < gap_min <= gap_max");
  }

  if (const auto* v = r.find("run", "seed")) {
    const long long s = Reader::integer_of(v->text, v->line);
    if (s < 0) throw ConfigError(v->line, "seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  return c;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ElectromagneticField ProblemConfig::field() const {
  return ElectromagneticField::from_strings(dim, V, A);
}

Grid ProblemConfig::grid() const { return Grid(lower, upper, n); }

Scheme ProblemConfig::resolved_scheme() const {
  return scheme == "auto" ? default_scheme(field()) : scheme_from_string(scheme);
}

std::uint64_t ProblemConfig::hash() const {
  std::string canonical;
  for (const auto& [section, keys] : sections) {
    for (const auto& [key, value] : keys) canonical += section + "." + key + "=" + value.text + "\n";
  }
  return fnv1a(canonical);
}

}  // namespace nonacc
