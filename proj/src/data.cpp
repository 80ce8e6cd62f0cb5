#include "twophase/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace twophase {

namespace {

std::vector<std::string> default_names(const std::string& prefix, Eigen::Index from, Eigen::Index count) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < count; ++j) out.push_back(prefix + std::to_string(from + j + 1));
  return out;
}

}  // namespace

Dataset::Dataset(const std::vector<ObservedRecord>& records, OutcomeKind kind,
                 std::optional<Bounds> y_bounds, ColumnNames names)
    : kind_(kind), names_(std::move(names)) {
  if (records.empty()) throw DataError("dataset has no records");
  const auto n = static_cast<Eigen::Index>(records.size());
  const Eigen::Index d1 = records.front().w1.size();
  Eigen::Index d2 = -1;
  for (const auto& r : records) {
    if (r.delta == 1 && r.w2) {
      d2 = r.w2->size();
      break;
    }
  }
  if (d2 < 0) d2 = static_cast<Eigen::Index>(names_.w2.size());

  w1_.resize(n, d1);
  w2_.setConstant(n, d2, std::numeric_limits<double>::quiet_NaN());
  a_.resize(n);
  y_.resize(n);
  delta_.resize(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    const std::string where = "record " + std::to_string(i) + ": ";
    if (r.w1.size() != d1) throw DataError(where + "w1 dimension differs from the first record");
    if (r.a != 0 && r.a != 1) throw DataError(where + "treatment must be 0 or 1");
    if (r.delta != 0 && r.delta != 1) throw DataError(where + "delta must be 0 or 1");
    if (!std::isfinite(r.y)) throw DataError(where + "outcome is not finite");
    if (!r.w1.allFinite()) throw DataError(where + "w1 is not finite");
    if (r.delta == 0 && r.w2) throw DataError(where + "w2 present although delta=0");
    if (r.delta == 1) {
      if (!r.w2) throw DataError(where + "w2 missing although delta=1");
      if (r.w2->size() != d2) throw DataError(where + "w2 dimension differs");
      if (!r.w2->allFinite()) throw DataError(where + "w2 is not finite");
      w2_.row(i) = r.w2->transpose();
      phase2_.push_back(i);
    }
    if (kind == OutcomeKind::binary && r.y != 0.0 && r.y != 1.0)
      throw DataError(where + "binary outcome must be 0 or 1");
    w1_.row(i) = r.w1.transpose();
    a_(i) = r.a;
    y_(i) = r.y;
    delta_(i) = r.delta;
  }
  if (phase2_.empty()) throw DataError("no record has delta=1");

  if (names_.w1.empty()) names_.w1 = default_names("W", 0, d1);
  if (names_.w2.empty()) names_.w2 = default_names("W", d1, d2);
  if (static_cast<Eigen::Index>(names_.w1.size()) != d1 || static_cast<Eigen::Index>(names_.w2.size()) != d2)
    throw DataError("column names do not match covariate dimensions");

  if (kind == OutcomeKind::binary) {
    bounds_ = {0.0, 1.0};
  } else if (y_bounds) {
    bounds_ = *y_bounds;
    if (!(bounds_.lo < bounds_.hi)) throw DataError("outcome bounds need lo < hi");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (y_(i) < bounds_.lo || y_(i) > bounds_.hi)
        throw DataError("record " + std::to_string(i) + ": outcome outside declared bounds");
    }
  } else {
    const double lo = y_.minCoeff();
    const double hi = y_.maxCoeff();
    const double margin = hi > lo ? 1e-6 * (hi - lo) : 1e-6 * std::max(1.0, std::abs(lo));
    bounds_ = {lo - margin, hi + margin};
  }
}

ObservedRecord Dataset::record(Eigen::Index i) const {
  ObservedRecord r;
  r.w1 = w1_.row(i).transpose();
  r.a = static_cast<int>(a_(i));
  r.y = y_(i);
  r.delta = static_cast<int>(delta_(i));
  if (r.delta == 1) r.w2 = Eigen::VectorXd(w2_.row(i).transpose());
  return r;
}

std::vector<ObservedRecord> Dataset::records() const {
  std::vector<ObservedRecord> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) out.push_back(record(i));
  return out;
}

Dataset scale_outcome(const Dataset& ds) {
  if (ds.y_kind() == OutcomeKind::binary || ds.outcome_scale()) return ds;
  const Bounds b = ds.y_bounds();
  Dataset out = ds;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (ds.y()(i) < b.lo || ds.y()(i) > b.hi)
      throw DataError("record " + std::to_string(i) + ": outcome outside declared bounds");
  }
  out.y_ = ((ds.y().array() - b.lo) / (b.hi - b.lo)).matrix();
  out.y_ = out.y_.cwiseMax(0.0).cwiseMin(1.0);
  out.scale_ = b;
  out.bounds_ = {0.0, 1.0};
  return out;
}

}  // namespace twophase
