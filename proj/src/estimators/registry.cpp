#include <array>
#include <utility>

#include "twophase/estimators.hpp"

namespace twophase {

namespace {

constexpr std::array<std::pair<EstimatorId, const char*>, 8> kNames{{
    {EstimatorId::raking, "raking"},
    {EstimatorId::aipcw, "aipcw"},
    {EstimatorId::ipcw_tmle, "ipcw_tmle"},
    {EstimatorId::ipcw_tmle_target_pi, "ipcw_tmle_target_pi"},
    {EstimatorId::ipcw_tmle_rake_pi, "ipcw_tmle_rake_pi"},
    {EstimatorId::eee, "eee"},
    {EstimatorId::quasi_tmle, "quasi_tmle"},
    {EstimatorId::tmle_alt, "tmle_alt"},
}};

constexpr const char* kLinearizedSuffix = "_linearized";

bool has_modes(EstimatorId id) { return id == EstimatorId::ipcw_tmle_target_pi || id == EstimatorId::quasi_tmle; }

}  // namespace

EstimateResult run_estimator(EstimatorId id, const Dataset& ds, const NuisanceSet& ns, const EstimatorOptions& opts) {
  switch (id) {
    case EstimatorId::raking: return estimate_raking(ds, ns);
    case EstimatorId::aipcw: return estimate_aipcw(ds, ns);
    case EstimatorId::ipcw_tmle: return estimate_ipcw_tmle(ds, ns);
    case EstimatorId::ipcw_tmle_target_pi: return estimate_ipcw_tmle_target_pi(ds, ns, opts.mode, opts.max_outer_iter);
    case EstimatorId::ipcw_tmle_rake_pi: return estimate_ipcw_tmle_rake_pi(ds, ns, opts.max_outer_iter);
    case EstimatorId::eee: return estimate_eee(ds, ns);
    case EstimatorId::quasi_tmle: return estimate_quasi_tmle(ds, ns, opts.mode);
    case EstimatorId::tmle_alt: return estimate_tmle_alt(ds, ns, opts.max_outer_iter);
  }
  throw std::invalid_argument("unknown estimator");
}

std::string estimator_name(EstimatorId id) {
  for (const auto& [key, name] : kNames)
    if (key == id) return name;
  throw std::invalid_argument("unknown estimator");
}

std::string estimator_label(const EstimatorChoice& choice) {
  std::string label = estimator_name(choice.id);
  if (choice.mode == TargetMode::linearized) label += kLinearizedSuffix;
  return label;
}

std::optional<EstimatorChoice> parse_estimator(const std::string& label) {
  std::string base = label;
  TargetMode mode = TargetMode::refit;
  const std::string suffix = kLinearizedSuffix;
  if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    base.resize(base.size() - suffix.size());
    mode = TargetMode::linearized;
  }
  for (const auto& [id, name] : kNames) {
    if (base != name) continue;
    if (mode == TargetMode::linearized && !has_modes(id)) return std::nullopt;
    return EstimatorChoice{id, mode};
  }
  return std::nullopt;
}

bool is_targeted(EstimatorId id) {
  switch (id) {
    case EstimatorId::ipcw_tmle:
    case EstimatorId::ipcw_tmle_target_pi:
    case EstimatorId::ipcw_tmle_rake_pi:
    case EstimatorId::quasi_tmle:
    case EstimatorId::tmle_alt:
      return true;
    default:
      return false;
  }
}

std::vector<EstimatorChoice> all_estimators() {
  std::vector<EstimatorChoice> out;
  for (const auto& [id, name] : kNames) out.push_back({id, TargetMode::refit});
  return out;
}

}  // namespace twophase
