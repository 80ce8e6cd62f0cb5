#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twophase/data.hpp"
#include "twophase/dgp.hpp"
#include "twophase/estimators.hpp"
#include "twophase/study.hpp"

namespace twophase {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }  // 0 when the problem is not tied to a line

 private:
  int line_;
};

enum class RunMode { estimate, simulate };

// Flat "key = value" file. "[section]" headers prefix the keys that follow,
// so "[sim]\nn = 500" and "sim.n = 500" are the same setting. '#' starts a comment.
struct RunConfig {
  std::optional<RunMode> mode;
  std::uint64_t seed = 1;
  std::optional<int> parallelism;
  std::string out = ".";

  std::optional<std::string> data_path;
  Schema schema;

  std::optional<DgpId> dgp;
  std::vector<Eigen::Index> n_grid;
  int runs = 1;
  std::vector<double> intercept_grid{1.1};
  std::vector<double> gamma_grid{1.0};
  bool census = false;
  Eigen::Index census_n_mc = 1000000;

  std::vector<EstimatorChoice> estimators;
  StudyNuisanceConfig nuisance;

  std::string text;  // the raw file, kept for the report sidecar
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

// Checks cross-key requirements for the chosen mode; throws ConfigError.
void validate_config(const RunConfig& config);

}  // namespace twophase
