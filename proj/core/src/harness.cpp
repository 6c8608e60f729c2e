#include "pmax/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "pmax/bootstrap.hpp"
#include "pmax/errors.hpp"
#include "pmax/maxtest.hpp"
#include "pmax/pols.hpp"
#include "pmax/rng.hpp"
#include "pmax/wald.hpp"

namespace pmax::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::string bound_str(double bound) {
  if (std::isinf(bound)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", bound);
  return buf;
}

std::string dependence_name(dgp::Dependence dep) {
  switch (dep) {
    case dgp::Dependence::Independent: return "indep";
    case dgp::Dependence::BlockDependent: return "block";
    case dgp::Dependence::CrossBlockDependent: return "cross";
  }
  return "?";
}

std::string fmt3(double v) {
  if (std::isnan(v)) return "—";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// setw pads bytes, the dash marker is multi-byte; pad by display width.
std::string pad_left(const std::string& s, int width) {
  const int dw = s == "—" ? 1 : static_cast<int>(s.size());
  if (dw >= width) return s;
  return std::string(static_cast<std::size_t>(width - dw), ' ') + s;
}

std::string sanitize_csv(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

double median_of_sorted(const std::vector<double>& v) {
  const std::size_t m = v.size();
  if (m == 0) return kNaN;
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

std::string test_name(TestKind kind) {
  switch (kind) {
    case TestKind::PMax: return "PMax";
    case TestKind::PMaxT: return "PMaxT";
    case TestKind::WaldBoot: return "WaldBoot";
  }
  return "?";
}

Eigen::Index KThetaRule::resolve(Eigen::Index n) const {
  if (kind == Kind::Fixed) return value;
  return static_cast<Eigen::Index>(dgp::k_growth(n, rule));
}

std::string alternative_label(const dgp::AlternativeSpec& alt) {
  using Kind = dgp::AlternativeSpec::Kind;
  switch (alt.kind) {
    case Kind::Null: return "null";
    case Kind::AltOne: return "alt1";
    case Kind::AltTwo: return "alt2";
    case Kind::AltThree: return "alt3";
    case Kind::Custom: return "custom";
    case Kind::LocalDrift: {
      char buf[48];
      if (alt.drift_c.size() == 1)
        std::snprintf(buf, sizeof(buf), "drift(c=%g)", alt.drift_c[0]);
      else
        std::snprintf(buf, sizeof(buf), "drift(vec%lld)",
                      static_cast<long long>(alt.drift_c.size()));
      return buf;
    }
  }
  return "?";
}

std::string cell_identifier(const McCell& cell) {
  std::ostringstream os;
  os << "n=" << cell.n << " kd=" << cell.k_delta << " kt=" << cell.k_theta
     << " dep=" << dependence_name(cell.covariates.dependence)
     << " U=" << bound_str(cell.covariates.bound) << " alt=" << cell.alt_label;
  return os.str();
}

void McDesign::validate() const {
  if (n_list.empty()) throw ConfigError("n_list is empty");
  for (auto n : n_list)
    if (n < 3) throw ConfigError("n_list entries must be at least 3");
  if (k_delta_list.empty()) throw ConfigError("k_delta_list is empty");
  for (auto kd : k_delta_list)
    if (kd < 0) throw ConfigError("k_delta_list entries must be nonnegative");
  if (k_theta_rules.empty()) throw ConfigError("k_theta_rules is empty");
  for (const auto& r : k_theta_rules)
    if (r.kind == KThetaRule::Kind::Fixed && r.value < 1)
      throw ConfigError("fixed k_theta must be at least 1");
  if (covariate_cases.empty()) throw ConfigError("covariate_cases is empty");
  for (const auto& c : covariate_cases)
    if (!(c.bound > 0.0)) throw ConfigError("covariate bound must be positive");
  if (alternatives.empty()) throw ConfigError("alternatives is empty");
  if (tests.empty()) throw ConfigError("tests is empty");
  for (std::size_t i = 0; i < tests.size(); ++i)
    for (std::size_t j = i + 1; j < tests.size(); ++j)
      if (tests[i] == tests[j]) throw ConfigError("duplicate test: " + test_name(tests[i]));
  if (mc_samples < 1) throw ConfigError("mc_samples must be at least 1");
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (alphas.empty()) throw ConfigError("alphas is empty");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alphas must lie strictly inside (0,1)");
}

std::vector<McCell> expand_grid(const McDesign& design) {
  design.validate();
  std::vector<McCell> cells;
  // Nesting mirrors the rendered layout: alternative and covariate case make
  // sections, n makes blocks, k_theta makes columns.
  for (const auto& alt : design.alternatives)
    for (const auto& cov : design.covariate_cases)
      for (auto kd : design.k_delta_list)
        for (auto n : design.n_list)
          for (const auto& rule : design.k_theta_rules) {
            McCell cell;
            cell.n = n;
            cell.k_delta = kd;
            cell.k_theta = rule.resolve(n);
            cell.covariates = cov;
            cell.alternative = alt;
            cell.alt_label = alternative_label(alt);
            cells.push_back(std::move(cell));
          }
  return cells;
}

McCellReport run_cell(const McDesign& design, const McCell& cell) {
  design.validate();
  const int mc = design.mc_samples;
  const auto n_tests = static_cast<Eigen::Index>(design.tests.size());

  McCellReport rep;
  rep.cell_id = cell_identifier(cell);
  rep.cell = cell;
  rep.tests = design.tests;
  rep.alphas = design.alphas;
  rep.mc_samples = mc;
  rep.replicates = design.replicates;
  rep.p_values = Eigen::MatrixXd::Constant(mc, n_tests, kNaN);
  rep.rejection = Eigen::MatrixXd::Constant(n_tests, static_cast<Eigen::Index>(design.alphas.size()), kNaN);
  rep.mean_p = Eigen::VectorXd::Constant(n_tests, kNaN);
  rep.median_p = Eigen::VectorXd::Constant(n_tests, kNaN);
  rep.valid_samples.assign(design.tests.size(), 0);
  rep.test_errors.assign(design.tests.size(), "");

  const std::uint64_t cell_seed = rng::mix(design.seed, rng::hash_string(rep.cell_id));

  Eigen::Index flat_slot = -1, t_slot = -1, wald_slot = -1;
  for (Eigen::Index j = 0; j < n_tests; ++j) {
    switch (design.tests[static_cast<std::size_t>(j)]) {
      case TestKind::PMax: flat_slot = j; break;
      case TestKind::PMaxT: t_slot = j; break;
      case TestKind::WaldBoot: wald_slot = j; break;
    }
  }
  const bool wald_ok = wald_feasible(cell.n, cell.k_delta, cell.k_theta);
  if (wald_slot >= 0 && !wald_ok)
    rep.test_errors[static_cast<std::size_t>(wald_slot)] =
        "infeasible: k_delta + k_theta >= n";

  // Alternatives resolve once per cell, so a LocalDrift pilot never runs
  // inside the sample loop and every sample sees the same theta_0.
  dgp::AlternativeSpec alt_used;
  try {
    dgp::CovariateSpec cell_cov{cell.k_delta, cell.k_theta, cell.covariates.bound,
                                cell.covariates.dependence, cell_seed};
    alt_used = dgp::AlternativeSpec::custom_theta(
        dgp::resolve_theta(cell.alternative, cell_cov, cell.n));
  } catch (const std::exception& e) {
    rep.cell_error = e.what();
    return rep;
  }

  std::vector<std::string> sample_errors(static_cast<std::size_t>(mc) * design.tests.size());
  std::vector<long long> degen(static_cast<std::size_t>(mc), 0);
  std::vector<double> secs(static_cast<std::size_t>(mc), 0.0);

#pragma omp parallel for schedule(static)
  for (int s = 0; s < mc; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t sample_seed =
        rng::mix(cell_seed, rng::kTagSample, static_cast<std::uint64_t>(s));
    auto note = [&](Eigen::Index slot, const char* what) {
      sample_errors[static_cast<std::size_t>(s) * design.tests.size() +
                    static_cast<std::size_t>(slot)] = what;
    };
    try {
      dgp::CovariateSpec cov{cell.k_delta, cell.k_theta, cell.covariates.bound,
                             cell.covariates.dependence, sample_seed};
      const Dataset ds = dgp::generate(cov, alt_used, cell.n);
      const GramCache g = build_gram(ds);
      const FitSet fs = fit_all(ds, g);
      degen[static_cast<std::size_t>(s)] = static_cast<long long>(fs.degenerate.size());

      if (flat_slot >= 0 || t_slot >= 0) {
        const RestrictedFit rf = fit_restricted(ds, g);
        std::vector<MaxStat> stats;
        std::vector<Eigen::Index> slots;
        if (flat_slot >= 0) {
          try {
            stats.push_back(max_statistic(fs, WeightMode::Flat, ds.n()));
            slots.push_back(flat_slot);
          } catch (const std::exception& e) {
            note(flat_slot, e.what());
          }
        }
        if (t_slot >= 0) {
          try {
            stats.push_back(max_statistic(fs, WeightMode::InvSE, ds.n()));
            slots.push_back(t_slot);
          } catch (const std::exception& e) {
            note(t_slot, e.what());
          }
        }
        if (!stats.empty()) {
          BootstrapSpec bs;
          bs.replicates = design.replicates;
          bs.seed = sample_seed;
          const auto outcomes = bootstrap_pvalue_set(ds, g, rf, fs, stats, bs);
          for (std::size_t k = 0; k < outcomes.size(); ++k)
            rep.p_values(s, slots[k]) = outcomes[k].p_value;
        }
      }
      if (wald_slot >= 0 && wald_ok) {
        try {
          BootstrapSpec bs;
          bs.replicates = design.replicates;
          bs.seed = sample_seed;
          rep.p_values(s, wald_slot) = wald_test(ds, bs).p_boot;
        } catch (const std::exception& e) {
          note(wald_slot, e.what());
        }
      }
    } catch (const std::exception& e) {
      for (Eigen::Index j = 0; j < n_tests; ++j)
        if (std::isnan(rep.p_values(s, j))) note(j, e.what());
    }
    secs[static_cast<std::size_t>(s)] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  for (Eigen::Index j = 0; j < n_tests; ++j) {
    std::vector<double> valid;
    valid.reserve(static_cast<std::size_t>(mc));
    std::vector<long long> hits(design.alphas.size(), 0);
    double sum = 0.0;
    for (int s = 0; s < mc; ++s) {
      const double p = rep.p_values(s, j);
      if (std::isnan(p)) continue;
      valid.push_back(p);
      sum += p;
      for (std::size_t a = 0; a < design.alphas.size(); ++a)
        if (p < design.alphas[a]) ++hits[a];
    }
    rep.valid_samples[static_cast<std::size_t>(j)] = static_cast<long long>(valid.size());
    if (!valid.empty()) {
      for (std::size_t a = 0; a < design.alphas.size(); ++a)
        rep.rejection(j, static_cast<Eigen::Index>(a)) =
            static_cast<double>(hits[a]) / static_cast<double>(valid.size());
      rep.mean_p[j] = sum / static_cast<double>(valid.size());
      std::sort(valid.begin(), valid.end());
      rep.median_p[j] = median_of_sorted(valid);
    }
    if (rep.test_errors[static_cast<std::size_t>(j)].empty()) {
      for (int s = 0; s < mc; ++s) {
        const auto& msg = sample_errors[static_cast<std::size_t>(s) * design.tests.size() +
                                        static_cast<std::size_t>(j)];
        if (!msg.empty()) {
          rep.test_errors[static_cast<std::size_t>(j)] = msg;
          break;
        }
      }
    }
  }
  for (auto d : degen) rep.degenerate_models += d;
  double total = 0.0;
  for (auto t : secs) total += t;
  rep.mean_sample_seconds = total / static_cast<double>(mc);
  return rep;
}

std::string render_text(const std::vector<McCellReport>& reports) {
  // Section key: everything but n and k_theta. Blocks inside a section share
  // n; k_theta values are the columns.
  std::ostringstream out;
  std::vector<std::string> seen_sections;
  auto section_key = [](const McCellReport& r) {
    std::ostringstream k;
    k << r.cell.alt_label << '|' << dependence_name(r.cell.covariates.dependence) << '|'
      << bound_str(r.cell.covariates.bound) << '|' << r.cell.k_delta;
    return k.str();
  };

  constexpr int kTestW = 9;
  constexpr int kAlphaW = 7;
  constexpr int kValW = 10;

  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::string sec = section_key(reports[i]);
    if (std::find(seen_sections.begin(), seen_sections.end(), sec) != seen_sections.end())
      continue;
    seen_sections.push_back(sec);
    const auto& head = reports[i].cell;
    out << "== alt=" << head.alt_label
        << "  dep=" << dependence_name(head.covariates.dependence)
        << "  U=" << bound_str(head.covariates.bound) << "  k_delta=" << head.k_delta
        << " ==\n";

    // Blocks: consecutive distinct n within the section, in arrival order.
    std::vector<Eigen::Index> ns;
    for (const auto& r : reports)
      if (section_key(r) == sec && std::find(ns.begin(), ns.end(), r.cell.n) == ns.end())
        ns.push_back(r.cell.n);

    for (auto n : ns) {
      std::vector<const McCellReport*> cols;
      for (const auto& r : reports)
        if (section_key(r) == sec && r.cell.n == n) cols.push_back(&r);
      if (cols.empty()) continue;

      out << "\nn = " << n << std::string(kTestW + kAlphaW - 6, ' ') << "k_theta\n";
      out << pad_left("test", kTestW) << pad_left("alpha", kAlphaW);
      for (const auto* c : cols) out << pad_left(std::to_string(c->cell.k_theta), kValW);
      out << '\n';

      const auto& tests = cols.front()->tests;
      const auto& alphas = cols.front()->alphas;
      for (std::size_t j = 0; j < tests.size(); ++j) {
        for (std::size_t a = 0; a < alphas.size(); ++a) {
          out << pad_left(a == 0 ? test_name(tests[j]) : "", kTestW)
              << pad_left(fmt3(alphas[a]).substr(1), kAlphaW);
          for (const auto* c : cols) {
            double v = kNaN;
            if (j < c->tests.size() && a < c->alphas.size())
              v = c->rejection(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a));
            out << pad_left(fmt3(v), kValW);
          }
          out << '\n';
        }
      }
      for (const auto* c : cols) {
        if (!c->cell_error.empty())
          out << "note: " << c->cell_id << ": " << c->cell_error << '\n';
        for (std::size_t j = 0; j < c->test_errors.size(); ++j)
          if (!c->test_errors[j].empty())
            out << "note: " << c->cell_id << " " << test_name(c->tests[j]) << ": "
                << c->test_errors[j] << '\n';
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string render_csv(const std::vector<McCellReport>& reports) {
  std::ostringstream out;
  out << "cell_id,n,k_delta,k_theta,dependence,bound,alternative,test,alpha,"
         "rejection_rate,valid_samples,mc_samples,mean_p,median_p,degenerate_models,"
         "mean_sample_seconds,error\n";
  char buf[64];
  auto num = [&](double v, const char* fmt) -> std::string {
    if (std::isnan(v)) return "NA";
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
  };
  for (const auto& r : reports) {
    for (std::size_t j = 0; j < r.tests.size(); ++j) {
      for (std::size_t a = 0; a < r.alphas.size(); ++a) {
        std::string err = !r.cell_error.empty() ? r.cell_error : r.test_errors[j];
        out << r.cell_id << ',' << r.cell.n << ',' << r.cell.k_delta << ',' << r.cell.k_theta
            << ',' << dependence_name(r.cell.covariates.dependence) << ','
            << bound_str(r.cell.covariates.bound) << ',' << r.cell.alt_label << ','
            << test_name(r.tests[j]) << ',' << num(r.alphas[a], "%g") << ','
            << num(r.rejection(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)),
                   "%.6f")
            << ',' << r.valid_samples[j] << ',' << r.mc_samples << ','
            << num(r.mean_p[static_cast<Eigen::Index>(j)], "%.6f") << ','
            << num(r.median_p[static_cast<Eigen::Index>(j)], "%.6f") << ','
            << r.degenerate_models << ',' << num(r.mean_sample_seconds, "%.4f") << ','
            << sanitize_csv(err) << '\n';
      }
    }
  }
  return out.str();
}

McGridResult run_grid(const McDesign& design) {
  const auto cells = expand_grid(design);
  McGridResult result;
  result.cells.reserve(cells.size());

  nlohmann::json manifest;
  manifest["seed"] = design.seed;
  manifest["mc_samples"] = design.mc_samples;
  manifest["replicates"] = design.replicates;
  manifest["alphas"] = design.alphas;
  {
    std::vector<std::string> names;
    for (auto t : design.tests) names.push_back(test_name(t));
    manifest["tests"] = names;
  }
  manifest["threads"] = max_threads();
  manifest["versions"] = {
      {"pmax", "0.1.0"},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                    "." + std::to_string(EIGEN_MINOR_VERSION)}};

  const auto grid_t0 = std::chrono::steady_clock::now();
  nlohmann::json cell_entries = nlohmann::json::array();
  for (const auto& cell : cells) {
    const auto t0 = std::chrono::steady_clock::now();
    McCellReport rep;
    try {
      rep = run_cell(design, cell);
    } catch (const std::exception& e) {
      rep.cell_id = cell_identifier(cell);
      rep.cell = cell;
      rep.tests = design.tests;
      rep.alphas = design.alphas;
      rep.mc_samples = design.mc_samples;
      rep.replicates = design.replicates;
      rep.p_values = Eigen::MatrixXd::Constant(design.mc_samples,
                                               static_cast<Eigen::Index>(design.tests.size()),
                                               kNaN);
      rep.rejection = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(design.tests.size()),
                                                static_cast<Eigen::Index>(design.alphas.size()),
                                                kNaN);
      rep.mean_p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(design.tests.size()), kNaN);
      rep.median_p = rep.mean_p;
      rep.valid_samples.assign(design.tests.size(), 0);
      rep.test_errors.assign(design.tests.size(), "");
      rep.cell_error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json entry;
    entry["id"] = rep.cell_id;
    entry["seconds"] = secs;
    entry["mean_sample_seconds"] = rep.mean_sample_seconds;
    entry["degenerate_models"] = rep.degenerate_models;
    if (!rep.cell_error.empty()) entry["error"] = rep.cell_error;
    cell_entries.push_back(std::move(entry));
    result.cells.push_back(std::move(rep));
  }
  manifest["cells"] = std::move(cell_entries);
  manifest["total_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - grid_t0).count();

  result.text = render_text(result.cells);
  result.csv = render_csv(result.cells);
  result.manifest = manifest.dump(2);
  return result;
}

}  // namespace pmax::harness
