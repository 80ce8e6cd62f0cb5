#include "twophase/study.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <thread>

namespace twophase {

namespace {

std::vector<RunOutcome> fail_all(std::size_t count, const std::string& message) {
  RunOutcome failed;
  failed.error = message;
  return std::vector<RunOutcome>(count, failed);
}

}  // namespace

RunPlan make_estimator_plan(const std::vector<EstimatorChoice>& estimators, const StudyNuisanceConfig& config) {
  return [estimators, config](const Draw& draw, std::uint64_t) {
    const Dataset ds = scale_outcome(draw.data);
    NuisanceOptions opts = config.options;
    if (config.known_pi) {
      auto pi = std::make_shared<const Eigen::VectorXd>(draw.truth.pi);
      opts.known_pi = [pi](const Dataset&, Eigen::Index row, int) { return (*pi)(row); };
    } else if (config.constant_pi) {
      const double c = *config.constant_pi;
      opts.known_pi = [c](const Dataset&, Eigen::Index, int) { return c; };
    }
    if (config.known_g) {
      auto g1 = std::make_shared<const Eigen::VectorXd>(draw.truth.g1);
      opts.known_g = [g1](const Dataset&, Eigen::Index row, int) { return (*g1)(row); };
    } else if (config.constant_g) {
      const double c = *config.constant_g;
      opts.known_g = [c](const Dataset&, Eigen::Index, int) { return c; };
    }

    std::optional<NuisanceSet> ns;
    try {
      ns = fit_nuisances(ds, opts);
    } catch (const std::exception& e) {
      return fail_all(estimators.size(), std::string("nuisance fit: ") + e.what());
    }

    std::vector<RunOutcome> out;
    out.reserve(estimators.size());
    for (const auto& choice : estimators) {
      RunOutcome o;
      EstimatorOptions eo = config.estimator;
      eo.mode = choice.mode;
      const auto start = std::chrono::steady_clock::now();
      try {
        o.result = run_estimator(choice.id, ds, *ns, eo);
        o.ok = std::isfinite(o.result.psi_hat) && std::isfinite(o.result.se);
        if (!o.ok) o.error = "non-finite estimate";
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      o.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out.push_back(std::move(o));
    }
    return out;
  };
}

SimReport run_study(const StudySpec& spec, const std::vector<std::string>& labels, const RunPlan& plan) {
  if (spec.runs < 1) throw std::invalid_argument("a study needs at least one run");
  std::vector<std::vector<RunOutcome>> outcomes(static_cast<std::size_t>(spec.runs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < spec.runs; r = next++) {
      DgpSpec dgp = spec.dgp;
      dgp.seed = spec.base_seed + static_cast<std::uint64_t>(r);
      auto& slot = outcomes[static_cast<std::size_t>(r)];
      try {
        slot = plan(generate(dgp), dgp.seed);
        if (slot.size() != labels.size()) slot = fail_all(labels.size(), "plan returned the wrong number of outcomes");
      } catch (const std::exception& e) {
        slot = fail_all(labels.size(), e.what());
      }
    }
  };
  const int threads = std::max(1, std::min(spec.parallelism, spec.runs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return summarize(spec, labels, outcomes);
}

SimReport summarize(const StudySpec& spec, const std::vector<std::string>& labels,
                    const std::vector<std::vector<RunOutcome>>& outcomes) {
  SimReport report;
  report.dgp = spec.dgp;
  report.n_runs = static_cast<int>(outcomes.size());
  report.base_seed = spec.base_seed;
  report.psi_true = spec.psi_true;
  report.psi_census = spec.psi_census;

  for (std::size_t e = 0; e < labels.size(); ++e) {
    EstimatorMetrics m;
    m.label = labels[e];
    std::vector<const RunOutcome*> ok;
    double runtime = 0.0;
    for (const auto& run : outcomes) {
      const RunOutcome& o = run.at(e);
      runtime += o.runtime_s;
      if (o.ok) {
        ok.push_back(&o);
      } else {
        ++m.n_failed;
        if (m.first_error.empty()) m.first_error = o.error;
      }
    }
    m.n_ok = static_cast<int>(ok.size());
    m.mean_runtime_s = outcomes.empty() ? 0.0 : runtime / static_cast<double>(outcomes.size());
    if (ok.empty()) {
      report.rows.push_back(std::move(m));
      continue;
    }
    const double count = static_cast<double>(ok.size());
    double sum = 0.0, se_sum = 0.0, iter_sum = 0.0;
    for (const auto* o : ok) {
      sum += o->result.psi_hat;
      se_sum += o->result.se;
      iter_sum += o->result.n_outer_iterations;
      if (!o->result.converged) ++m.n_nonconverged;
    }
    m.mean_psi = sum / count;
    m.mean_se = se_sum / count;
    m.mean_iterations = iter_sum / count;
    m.bias = m.mean_psi - spec.psi_true;
    m.abs_bias = std::abs(m.bias);
    if (ok.size() >= 2) {
      double ss = 0.0;
      for (const auto* o : ok) ss += (o->result.psi_hat - m.mean_psi) * (o->result.psi_hat - m.mean_psi);
      m.emp_se = std::sqrt(ss / (count - 1.0));
    }

    auto reference_metrics = [&](double truth, double& mse, double& coverage, std::optional<double>& oracle) {
      double sq = 0.0;
      int covered = 0, oracle_covered = 0;
      for (const auto* o : ok) {
        const double err = o->result.psi_hat - truth;
        sq += err * err;
        covered += o->result.ci_lo <= truth && truth <= o->result.ci_hi;
        if (m.emp_se) oracle_covered += std::abs(err) <= 1.96 * *m.emp_se;
      }
      mse = sq / count;
      coverage = covered / count;
      if (m.emp_se) oracle = oracle_covered / count;
    };
    reference_metrics(spec.psi_true, m.mse, m.coverage, m.oracle_coverage);
    if (spec.psi_census) {
      double mse = 0.0, coverage = 0.0;
      reference_metrics(*spec.psi_census, mse, coverage, m.census_oracle_coverage);
      m.census_abs_bias = std::abs(m.mean_psi - *spec.psi_census);
      m.census_mse = mse;
      m.census_coverage = coverage;
    }
    report.rows.push_back(std::move(m));
  }
  return report;
}

}  // namespace twophase
