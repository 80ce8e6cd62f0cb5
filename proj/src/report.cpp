#include <json.hpp>

#include "twophase/study.hpp"

#ifndef TWOPHASE_GIT_HASH
#define TWOPHASE_GIT_HASH "unknown"
#endif

namespace twophase {

namespace {

std::string cell(const std::optional<double>& v, double scale = 1.0) { return v ? format_real(*v * scale) : ""; }

}  // namespace

std::string build_git_hash() { return TWOPHASE_GIT_HASH; }

void write_report_csv(const std::vector<SimReport>& reports, std::ostream& out) {
  out << "dgp,intercept,gamma,n,runs,estimator,n_ok,n_failed,n_nonconverged,psi_true,psi_census,mean_psi,"
         "abs_bias_x1e3,emp_se_x1e2,mse_x1e3,abs_bias_over_se,coverage_pct,oracle_coverage_pct,mean_se_x1e2,"
         "census_abs_bias_x1e3,census_mse_x1e3,census_coverage_pct,census_oracle_coverage_pct,mean_iterations\n";
  for (const auto& rep : reports) {
    for (const auto& m : rep.rows) {
      const bool any = m.n_ok > 0;
      std::optional<double> ratio;
      if (m.emp_se && *m.emp_se > 0.0) ratio = m.abs_bias / *m.emp_se;
      auto num = [&](double v, double scale = 1.0) { return any ? format_real(v * scale) : std::string(); };
      out << dgp_name(rep.dgp.id) << ',' << format_real(rep.dgp.intercept) << ',' << format_real(rep.dgp.gamma)
          << ',' << rep.dgp.n << ',' << rep.n_runs << ',' << m.label << ',' << m.n_ok << ',' << m.n_failed << ','
          << m.n_nonconverged << ',' << format_real(rep.psi_true) << ',' << cell(rep.psi_census) << ','
          << num(m.mean_psi) << ',' << num(m.abs_bias, 1e3) << ',' << cell(m.emp_se, 1e2) << ','
          << num(m.mse, 1e3) << ',' << cell(ratio) << ',' << num(m.coverage, 100.0) << ','
          << cell(m.oracle_coverage, 100.0) << ',' << num(m.mean_se, 1e2) << ','
          << cell(m.census_abs_bias, 1e3) << ',' << cell(m.census_mse, 1e3) << ','
          << cell(m.census_coverage, 100.0) << ',' << cell(m.census_oracle_coverage, 100.0) << ','
          << num(m.mean_iterations) << '\n';
    }
  }
}

void write_report_meta(const std::vector<SimReport>& reports, const ReportMeta& meta, std::ostream& out) {
  nlohmann::json doc;
  doc["config"] = meta.config_text;
  doc["git_hash"] = meta.git_hash;
  doc["wall_time_s"] = meta.wall_time_s;
  auto& studies = doc["studies"] = nlohmann::json::array();
  for (const auto& rep : reports) {
    nlohmann::json s;
    s["dgp"] = dgp_name(rep.dgp.id);
    s["n"] = rep.dgp.n;
    s["intercept"] = rep.dgp.intercept;
    s["gamma"] = rep.dgp.gamma;
    s["runs"] = rep.n_runs;
    s["base_seed"] = rep.base_seed;
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < rep.n_runs; ++r) seeds.push_back(rep.base_seed + static_cast<std::uint64_t>(r));
    s["seeds"] = seeds;
    s["psi_true"] = rep.psi_true;
    if (rep.psi_census) s["psi_census"] = *rep.psi_census;
    for (const auto& m : rep.rows) {
      s["mean_runtime_s"][m.label] = m.mean_runtime_s;
      if (!m.first_error.empty()) s["first_error"][m.label] = m.first_error;
    }
    studies.push_back(std::move(s));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace twophase
