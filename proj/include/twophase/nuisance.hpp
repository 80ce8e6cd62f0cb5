#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "twophase/data.hpp"
#include "twophase/glm.hpp"

namespace twophase {

class NuisanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Variable sets a learner can draw main terms from.
enum class FeatureSet {
  phase1,     // V = (W1, A, Y)
  covariates, // W = (W1, W2)
  treated,    // (A, W1, W2)
};

struct LearnerSpec {
  Family family = Family::bernoulli;
  // nullopt: every main term of the feature set; empty list: intercept only.
  std::optional<std::vector<std::string>> columns;
};

// Builds intercept-plus-main-terms design rows from a dataset.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(const Dataset& ds, FeatureSet set, const std::optional<std::vector<std::string>>& columns = std::nullopt);

  // treatment overrides the observed A when set.
  Eigen::MatrixXd design(const Dataset& ds, const std::vector<Eigen::Index>& rows,
                         std::optional<int> treatment = std::nullopt) const;
  Eigen::MatrixXd design(const Dataset& ds, std::optional<int> treatment = std::nullopt) const;
  Eigen::Index dim() const { return static_cast<Eigen::Index>(columns_.size()) + 1; }
  FeatureSet set() const { return set_; }
  bool uses_phase2() const;

 private:
  enum class Source { w1, w2, treatment, outcome };
  struct Column {
    Source source;
    Eigen::Index index;
  };
  FeatureSet set_ = FeatureSet::phase1;
  std::vector<Column> columns_;
};

enum class OutputRange { probability, real };

// Fitted or known nuisance function, evaluated record by record.
class Predictor {
 public:
  using Mechanism = std::function<double(const Dataset& ds, Eigen::Index row, int treatment)>;

  Predictor(FeatureMap map, GlmFit fit, OutputRange range, Bounds truncation);
  static Predictor known(Mechanism fn, OutputRange range, Bounds truncation);

  Eigen::VectorXd predict(const Dataset& ds, const std::vector<Eigen::Index>& rows,
                          std::optional<int> treatment = std::nullopt) const;
  Eigen::VectorXd predict(const Dataset& ds, std::optional<int> treatment = std::nullopt) const;
  // GLM-backed predictors only; features exclude the intercept.
  double predict(const Eigen::VectorXd& features) const;

  OutputRange range() const { return range_; }
  const Bounds& truncation() const { return trunc_; }
  const std::optional<GlmFit>& glm() const { return fit_; }

 private:
  Predictor() = default;
  double finish(double v) const;

  std::optional<FeatureMap> map_;
  std::optional<GlmFit> fit_;
  Mechanism fn_;
  OutputRange range_ = OutputRange::real;
  Bounds trunc_{0.0, 1.0};
};

inline constexpr Bounds kDefaultTruncPi{0.01, 1.0};
inline constexpr Bounds kDefaultTruncG{0.01, 0.99};
inline constexpr Bounds kOutcomeClip{kProbFloor, 1.0 - kProbFloor};

struct NuisanceSet {
  Predictor pi;  // over V
  Predictor g;   // P(A=1 | W)
  Predictor q;   // E(Y | A, W) on the working [0,1] scale
  std::optional<Predictor> mbar;
  LearnerSpec mbar_learner{Family::gaussian, std::nullopt};
  Bounds trunc_pi = kDefaultTruncPi;
  Bounds trunc_g = kDefaultTruncG;
};

struct NuisanceOptions {
  LearnerSpec pi{Family::bernoulli, std::nullopt};
  LearnerSpec g{Family::bernoulli, std::nullopt};
  LearnerSpec q{Family::bernoulli, std::nullopt};
  LearnerSpec mbar{Family::gaussian, std::nullopt};
  Bounds trunc_pi = kDefaultTruncPi;
  Bounds trunc_g = kDefaultTruncG;
  std::optional<Predictor::Mechanism> known_pi;
  std::optional<Predictor::Mechanism> known_g;
};

Predictor fit_pi(const Dataset& ds, const LearnerSpec& learner, Bounds trunc = kDefaultTruncPi);
Predictor fit_q_ipcw(const Dataset& ds, const Predictor& pi, const LearnerSpec& learner);
Predictor fit_g_ipcw(const Dataset& ds, const Predictor& pi, const LearnerSpec& learner, Bounds trunc = kDefaultTruncG);
// values are ordered like ds.phase2().
Predictor fit_mbar(const Dataset& ds, const Eigen::VectorXd& values, const LearnerSpec& learner);
Predictor fix_known(Predictor::Mechanism fn, OutputRange range, Bounds truncation);

// Fits Pi, Q, g and the initial m-bar regression of the uncentered full-data EIC.
NuisanceSet fit_nuisances(const Dataset& ds, const NuisanceOptions& opts);

// Least-squares regression onto V over phase-2 rows with the factorization
// cached, so repeated E(. | Delta=1, V) fits cost one triangular solve each.
class PhaseOneSmoother {
 public:
  PhaseOneSmoother(const Dataset& ds, const LearnerSpec& learner);
  // values: length-n vector; entries off phase 2 are ignored. Returns predictions on all rows.
  Eigen::VectorXd fit_predict(const Eigen::VectorXd& values) const;
  Eigen::VectorXd coefficients(const Eigen::VectorXd& values) const;
  const FeatureMap& map() const { return map_; }

 private:
  const Dataset* ds_;
  FeatureMap map_;
  Eigen::MatrixXd design_all_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  Eigen::Index ridge_rows_ = 0;
};

}  // namespace twophase
