#include "twophase/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace twophase {

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message : "config: " + message),
      line_(line) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_real(const std::string& s, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(line, "expected a number, got '" + s + "'");
  return v;
}

long long to_integer(const std::string& s, int line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(line, "expected an integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s, int line) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(line, "expected true or false, got '" + s + "'");
}

Bounds to_bounds(const std::string& s, int line) {
  const auto parts = split_list(s);
  if (parts.size() != 2) throw ConfigError(line, "expected 'lo, hi'");
  Bounds b{to_real(parts[0], line), to_real(parts[1], line)};
  if (!(b.lo < b.hi)) throw ConfigError(line, "bounds need lo < hi");
  return b;
}

std::optional<std::vector<std::string>> to_columns(const std::string& s) {
  if (s == "none") return std::vector<std::string>{};
  return split_list(s);
}

// A known mechanism flag: "true" (the generator's own), "false", or a constant probability.
void set_known(const std::string& s, int line, bool& known, std::optional<double>& constant) {
  known = false;
  constant.reset();
  if (s == "false") return;
  if (s == "true") {
    known = true;
    return;
  }
  const double c = to_real(s, line);
  if (!(c > 0.0 && c <= 1.0)) throw ConfigError(line, "a constant mechanism must lie in (0, 1]");
  constant = c;
}

using Setter = std::function<void(RunConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"mode",
       [](RunConfig& c, const std::string& v, int line) {
         if (v == "estimate") c.mode = RunMode::estimate;
         else if (v == "simulate") c.mode = RunMode::simulate;
         else throw ConfigError(line, "mode must be estimate or simulate");
       }},
      {"seed",
       [](RunConfig& c, const std::string& v, int line) {
         const long long s = to_integer(v, line);
         if (s < 0) throw ConfigError(line, "seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"parallelism",
       [](RunConfig& c, const std::string& v, int line) {
         const long long p = to_integer(v, line);
         if (p < 1) throw ConfigError(line, "parallelism must be at least 1");
         c.parallelism = static_cast<int>(p);
       }},
      {"out", [](RunConfig& c, const std::string& v, int) { c.out = v; }},
      {"data.path", [](RunConfig& c, const std::string& v, int) { c.data_path = v; }},
      {"data.y_kind",
       [](RunConfig& c, const std::string& v, int line) {
         if (v == "binary") c.schema.y_kind = OutcomeKind::binary;
         else if (v == "continuous") c.schema.y_kind = OutcomeKind::continuous;
         else throw ConfigError(line, "y_kind must be binary or continuous");
       }},
      {"data.y_bounds", [](RunConfig& c, const std::string& v, int line) { c.schema.y_bounds = to_bounds(v, line); }},
      {"schema.treatment", [](RunConfig& c, const std::string& v, int) { c.schema.treatment = v; }},
      {"schema.outcome", [](RunConfig& c, const std::string& v, int) { c.schema.outcome = v; }},
      {"schema.delta", [](RunConfig& c, const std::string& v, int) { c.schema.delta = v; }},
      {"schema.w1", [](RunConfig& c, const std::string& v, int) { c.schema.w1 = split_list(v); }},
      {"schema.w2", [](RunConfig& c, const std::string& v, int) { c.schema.w2 = split_list(v); }},
      {"sim.dgp",
       [](RunConfig& c, const std::string& v, int line) {
         c.dgp = parse_dgp(v);
         if (!c.dgp) throw ConfigError(line, "unknown dgp '" + v + "'");
       }},
      {"sim.n",
       [](RunConfig& c, const std::string& v, int line) {
         c.n_grid.clear();
         for (const auto& item : split_list(v)) {
           const long long n = to_integer(item, line);
           if (n < 2) throw ConfigError(line, "sample sizes must be at least 2");
           c.n_grid.push_back(static_cast<Eigen::Index>(n));
         }
         if (c.n_grid.empty()) throw ConfigError(line, "sim.n needs at least one value");
       }},
      {"sim.runs",
       [](RunConfig& c, const std::string& v, int line) {
         const long long r = to_integer(v, line);
         if (r < 1) throw ConfigError(line, "sim.runs must be at least 1");
         c.runs = static_cast<int>(r);
       }},
      {"sim.intercept",
       [](RunConfig& c, const std::string& v, int line) {
         c.intercept_grid.clear();
         for (const auto& item : split_list(v)) c.intercept_grid.push_back(to_real(item, line));
         if (c.intercept_grid.empty()) throw ConfigError(line, "sim.intercept needs at least one value");
       }},
      {"sim.gamma",
       [](RunConfig& c, const std::string& v, int line) {
         c.gamma_grid.clear();
         for (const auto& item : split_list(v)) c.gamma_grid.push_back(to_real(item, line));
         if (c.gamma_grid.empty()) throw ConfigError(line, "sim.gamma needs at least one value");
       }},
      {"sim.census", [](RunConfig& c, const std::string& v, int line) { c.census = to_bool(v, line); }},
      {"sim.census_n_mc",
       [](RunConfig& c, const std::string& v, int line) {
         const long long n = to_integer(v, line);
         if (n < 100) throw ConfigError(line, "sim.census_n_mc must be at least 100");
         c.census_n_mc = static_cast<Eigen::Index>(n);
       }},
      {"estimators",
       [](RunConfig& c, const std::string& v, int line) {
         c.estimators.clear();
         const auto labels = split_list(v);
         if (labels.size() == 1 && labels[0] == "all") {
           c.estimators = all_estimators();
           return;
         }
         for (const auto& label : labels) {
           const auto choice = parse_estimator(label);
           if (!choice) throw ConfigError(line, "unknown estimator '" + label + "'");
           c.estimators.push_back(*choice);
         }
       }},
      {"estimator.max_outer_iter",
       [](RunConfig& c, const std::string& v, int line) {
         const long long k = to_integer(v, line);
         if (k < 0) throw ConfigError(line, "max_outer_iter must be non-negative");
         c.nuisance.estimator.max_outer_iter = static_cast<int>(k);
       }},
      {"nuisance.known_pi",
       [](RunConfig& c, const std::string& v, int line) {
         set_known(v, line, c.nuisance.known_pi, c.nuisance.constant_pi);
       }},
      {"nuisance.known_g",
       [](RunConfig& c, const std::string& v, int line) {
         set_known(v, line, c.nuisance.known_g, c.nuisance.constant_g);
         if (c.nuisance.constant_g && *c.nuisance.constant_g >= 1.0)
           throw ConfigError(line, "a constant propensity must lie in (0, 1)");
       }},
      {"nuisance.trunc_pi",
       [](RunConfig& c, const std::string& v, int line) {
         const Bounds b = to_bounds(v, line);
         if (!(b.lo > 0.0 && b.hi <= 1.0)) throw ConfigError(line, "trunc_pi must satisfy 0 < lo < hi <= 1");
         c.nuisance.options.trunc_pi = b;
       }},
      {"nuisance.trunc_g",
       [](RunConfig& c, const std::string& v, int line) {
         const Bounds b = to_bounds(v, line);
         if (!(b.lo > 0.0 && b.hi < 1.0)) throw ConfigError(line, "trunc_g must satisfy 0 < lo < hi < 1");
         c.nuisance.options.trunc_g = b;
       }},
      {"nuisance.pi.columns",
       [](RunConfig& c, const std::string& v, int) { c.nuisance.options.pi.columns = to_columns(v); }},
      {"nuisance.g.columns",
       [](RunConfig& c, const std::string& v, int) { c.nuisance.options.g.columns = to_columns(v); }},
      {"nuisance.q.columns",
       [](RunConfig& c, const std::string& v, int) { c.nuisance.options.q.columns = to_columns(v); }},
      {"nuisance.mbar.columns",
       [](RunConfig& c, const std::string& v, int) { c.nuisance.options.mbar.columns = to_columns(v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string raw, section;
  std::ostringstream text;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    text << raw << '\n';
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) s.resize(hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError(line, "unknown key '" + full + "'");
    it->second(config, value, line);
  }
  config.text = text.str();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open '" + path + "'");
  return parse_config(in);
}

void validate_config(const RunConfig& c) {
  if (!c.mode) throw ConfigError(0, "mode is not set");
  if (c.estimators.empty()) throw ConfigError(0, "no estimators listed");
  if (*c.mode == RunMode::estimate) {
    if (!c.data_path) throw ConfigError(0, "estimate mode needs data.path");
    if (c.dgp) throw ConfigError(0, "estimate mode takes data.path, not sim.dgp");
    if (c.schema.treatment.empty() || c.schema.outcome.empty() || c.schema.delta.empty())
      throw ConfigError(0, "schema needs treatment, outcome and delta columns");
    if (c.schema.w1.empty()) throw ConfigError(0, "schema needs at least one w1 column");
    if (c.nuisance.known_pi || c.nuisance.known_g)
      throw ConfigError(0, "known mechanisms from a generator are only available in simulate mode");
  } else {
    if (!c.dgp) throw ConfigError(0, "simulate mode needs sim.dgp");
    if (c.data_path) throw ConfigError(0, "simulate mode takes sim.dgp, not data.path");
    if (c.n_grid.empty()) throw ConfigError(0, "simulate mode needs sim.n");
  }
}

}  // namespace twophase
