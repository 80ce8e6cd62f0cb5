#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace twophase {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutcomeKind { binary, continuous };

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

// One subject. w2 is only measured for phase-2 members (delta == 1).
struct ObservedRecord {
  Eigen::VectorXd w1;
  int a = 0;
  double y = 0.0;
  int delta = 0;
  std::optional<Eigen::VectorXd> w2;
};

struct ColumnNames {
  std::vector<std::string> w1;
  std::vector<std::string> w2;
  std::string treatment = "A";
  std::string outcome = "Y";
  std::string delta = "Delta";
};

// Immutable, validated two-phase sample stored column-wise.
class Dataset {
 public:
  // Validates the records; throws DataError. Missing bounds on a continuous
  // outcome default to the observed range widened by a 1e-6 relative margin.
  Dataset(const std::vector<ObservedRecord>& records, OutcomeKind kind,
          std::optional<Bounds> y_bounds = std::nullopt, ColumnNames names = {});

  Eigen::Index size() const { return y_.size(); }
  Eigen::Index w1_dim() const { return w1_.cols(); }
  Eigen::Index w2_dim() const { return w2_.cols(); }
  OutcomeKind y_kind() const { return kind_; }
  const Bounds& y_bounds() const { return bounds_; }
  const ColumnNames& names() const { return names_; }

  const Eigen::MatrixXd& w1() const { return w1_; }
  // Rows of non-phase-2 records hold NaN and must never be read.
  const Eigen::MatrixXd& w2() const { return w2_; }
  const Eigen::VectorXd& a() const { return a_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& delta() const { return delta_; }
  const std::vector<Eigen::Index>& phase2() const { return phase2_; }

  ObservedRecord record(Eigen::Index i) const;
  std::vector<ObservedRecord> records() const;

  // Transform applied by scale_outcome, if any.
  const std::optional<Bounds>& outcome_scale() const { return scale_; }
  // Multiplier mapping an effect on the working scale back to the raw outcome scale.
  double effect_scale() const { return scale_ ? scale_->hi - scale_->lo : 1.0; }

 private:
  friend Dataset scale_outcome(const Dataset& ds);
  Dataset() = default;

  OutcomeKind kind_ = OutcomeKind::binary;
  Bounds bounds_;
  std::optional<Bounds> scale_;
  ColumnNames names_;
  Eigen::MatrixXd w1_, w2_;
  Eigen::VectorXd a_, y_, delta_;
  std::vector<Eigen::Index> phase2_;
};

// Maps a continuous outcome onto [0,1] using the dataset bounds; binary data
// is returned unchanged.
Dataset scale_outcome(const Dataset& ds);

// Column-role map for CSV ingestion.
struct Schema {
  std::string treatment;
  std::string outcome;
  std::string delta;
  std::vector<std::string> w1;
  std::vector<std::string> w2;
  OutcomeKind y_kind = OutcomeKind::binary;
  std::optional<Bounds> y_bounds;
};

Dataset load_csv(const std::string& path, const Schema& schema);
Dataset read_csv(std::istream& in, const Schema& schema);
void write_csv(const Dataset& ds, std::ostream& out);
void write_csv(const Dataset& ds, const std::string& path);

// Shortest exact decimal rendering used for every float written to CSV (17 significant digits).
std::string format_real(double x);

}  // namespace twophase
