// Command-line front end: run the max test on a CSV, run Monte Carlo grids,
// print growth-rule and bound diagnostics.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "pmax/bootstrap.hpp"
#include "pmax/dataset.hpp"
#include "pmax/dgp.hpp"
#include "pmax/errors.hpp"
#include "pmax/harness.hpp"
#include "pmax/maxtest.hpp"
#include "pmax/pols.hpp"
#include "pmax/wald.hpp"

namespace {

using nlohmann::json;
using namespace pmax;

void set_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

struct TestArgs {
  std::string data;
  std::string response;
  std::vector<std::string> nuisance;
  std::vector<std::string> test;
  bool test_all_remaining = false;
  std::string weights = "invse";
  std::string mode = "wild";
  int replicates = 1000;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string output;
};

struct SimArgs {
  std::string design_path;
  std::string preset;
  int mc_samples = -1;
  int replicates = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<double> alphas;
  int threads = 0;
  std::string output_dir;
};

struct DiagArgs {
  long long n = 0;
  long long k_theta = 0;
  double p = 4.0;
};

// ---------------------------------------------------------------- cmd_test

int cmd_test(const TestArgs& args) {
  set_threads(args.threads);
  if (!args.test_all_remaining && args.test.empty())
    throw ConfigError("provide --test columns or --test-all-remaining");
  if (args.test_all_remaining && !args.test.empty())
    throw ConfigError("--test and --test-all-remaining are mutually exclusive");
  if (args.replicates < 1) throw ConfigError("--replicates must be at least 1");

  CsvSchema schema;
  schema.response = args.response;
  schema.nuisance = args.nuisance;
  schema.test = args.test;
  schema.test_all_remaining = args.test_all_remaining;

  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = load_csv(args.data, schema);
  const GramCache g = build_gram(ds);
  const FitSet fs = fit_all(ds, g);

  const WeightMode wmode = args.weights == "flat" ? WeightMode::Flat : WeightMode::InvSE;
  if (!fs.degenerate.empty()) {
    const std::string first = ds.theta_name(fs.degenerate.front() + 1);
    if (wmode == WeightMode::InvSE)
      throw DegeneracyError("test column '" + first +
                            "' is numerically collinear with the nuisance block; "
                            "inverse-SE weights are undefined (rerun with --weights flat "
                            "to skip such columns)");
    if (static_cast<Eigen::Index>(fs.degenerate.size()) == ds.k_theta())
      throw DegeneracyError("every test column (first: '" + first +
                            "') is collinear with the nuisance block");
  }

  const MaxStat stat = max_statistic(fs, wmode, ds.n());
  BootstrapSpec bs;
  bs.replicates = args.replicates;
  bs.seed = args.seed;
  bs.mode = args.mode == "multiplier" ? BootstrapMode::ScoreMultiplier
                                      : BootstrapMode::ParametricWild;
  TestOutcome out;
  if (bs.mode == BootstrapMode::ParametricWild) {
    const RestrictedFit rf = fit_restricted(ds, g);
    out = bootstrap_pvalue(ds, g, rf, fs, stat, bs);
  } else {
    out = bootstrap_pvalue_multiplier(ds, g, fs, stat, bs);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string argmax_name = ds.theta_name(stat.argmax);
  std::printf("statistic  T_n = %.6g  (weights: %s)\n", stat.t_n, args.weights.c_str());
  std::printf("argmax     %s  (model %lld of %lld)\n", argmax_name.c_str(),
              static_cast<long long>(stat.argmax), static_cast<long long>(ds.k_theta()));
  std::printf("p-value    %.4f  (%d %s bootstrap replicates)\n", out.p_value, args.replicates,
              args.mode.c_str());
  if (!fs.degenerate.empty())
    std::printf("excluded   %lld degenerate model(s), flat weights carry them as zero\n",
                static_cast<long long>(fs.degenerate.size()));
  std::printf("elapsed    %.3f s\n", elapsed);

  if (!args.output.empty()) {
    json rep;
    rep["statistic"] = stat.t_n;
    rep["p_value"] = out.p_value;
    rep["argmax"] = argmax_name;
    rep["weights"] = args.weights;
    rep["replicates"] = args.replicates;
    rep["seed"] = args.seed;
    rep["elapsed_s"] = elapsed;
    std::ofstream f(args.output);
    if (!f) throw ConfigError("cannot write report to " + args.output);
    f << rep.dump(2) << '\n';
    std::printf("report     %s\n", args.output.c_str());
  }
  return 0;
}

// ------------------------------------------------------------ cmd_simulate

dgp::Dependence parse_dependence(const std::string& s, const std::string& where) {
  if (s == "indep") return dgp::Dependence::Independent;
  if (s == "block") return dgp::Dependence::BlockDependent;
  if (s == "cross") return dgp::Dependence::CrossBlockDependent;
  throw ConfigError(where + ": expected one of indep|block|cross, got '" + s + "'");
}

harness::TestKind parse_test(const std::string& s, const std::string& where) {
  if (s == "PMax") return harness::TestKind::PMax;
  if (s == "PMaxT") return harness::TestKind::PMaxT;
  if (s == "WaldBoot") return harness::TestKind::WaldBoot;
  throw ConfigError(where + ": expected one of PMax|PMaxT|WaldBoot, got '" + s + "'");
}

// Design files mirror McDesign; the README documents every key. Errors name
// the offending key path.
harness::McDesign parse_design(const json& j) {
  if (!j.is_object()) throw ConfigError("design: expected a JSON object");
  static const std::vector<std::string> known = {
      "n_list",      "k_delta_list", "k_theta_rules", "covariate_cases", "alternatives",
      "tests",       "mc_samples",   "replicates",    "alphas",          "seed"};
  for (const auto& item : j.items())
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      throw ConfigError("design: unknown key '" + item.key() + "'");

  harness::McDesign d;
  auto require = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw ConfigError(std::string("design.") + key + ": missing");
    return j.at(key);
  };
  auto int_at = [](const json& v, const std::string& where) -> long long {
    if (!v.is_number_integer() && !v.is_number_unsigned())
      throw ConfigError(where + ": expected an integer");
    return v.get<long long>();
  };

  d.n_list.clear();
  for (std::size_t i = 0; const auto& v : require("n_list"))
    d.n_list.push_back(int_at(v, "design.n_list[" + std::to_string(i++) + "]"));
  d.k_delta_list.clear();
  for (std::size_t i = 0; const auto& v : require("k_delta_list"))
    d.k_delta_list.push_back(int_at(v, "design.k_delta_list[" + std::to_string(i++) + "]"));

  d.k_theta_rules.clear();
  for (std::size_t i = 0; const auto& v : require("k_theta_rules")) {
    const std::string where = "design.k_theta_rules[" + std::to_string(i++) + "]";
    if (v.is_number_integer() || v.is_number_unsigned()) {
      d.k_theta_rules.push_back(harness::KThetaRule::fixed(int_at(v, where)));
    } else if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "k1")
        d.k_theta_rules.push_back(harness::KThetaRule::growth(dgp::GrowthRule::KOne));
      else if (s == "k2")
        d.k_theta_rules.push_back(harness::KThetaRule::growth(dgp::GrowthRule::KTwo));
      else
        throw ConfigError(where + ": expected an integer or \"k1\"/\"k2\", got '" + s + "'");
    } else {
      throw ConfigError(where + ": expected an integer or \"k1\"/\"k2\"");
    }
  }

  d.covariate_cases.clear();
  for (std::size_t i = 0; const auto& v : require("covariate_cases")) {
    const std::string where = "design.covariate_cases[" + std::to_string(i++) + "]";
    if (!v.is_object()) throw ConfigError(where + ": expected an object");
    harness::CovariateCase c;
    if (!v.contains("dependence")) throw ConfigError(where + ".dependence: missing");
    c.dependence = parse_dependence(v.at("dependence").get<std::string>(), where + ".dependence");
    if (v.contains("bound")) {
      const auto& b = v.at("bound");
      if (b.is_string() && b.get<std::string>() == "inf")
        c.bound = std::numeric_limits<double>::infinity();
      else if (b.is_number())
        c.bound = b.get<double>();
      else
        throw ConfigError(where + ".bound: expected a number or \"inf\"");
    }
    d.covariate_cases.push_back(c);
  }

  d.alternatives.clear();
  for (std::size_t i = 0; const auto& v : require("alternatives")) {
    const std::string where = "design.alternatives[" + std::to_string(i++) + "]";
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "null") d.alternatives.push_back(dgp::AlternativeSpec::null());
      else if (s == "alt1") d.alternatives.push_back(dgp::AlternativeSpec::alt_one());
      else if (s == "alt2") d.alternatives.push_back(dgp::AlternativeSpec::alt_two());
      else if (s == "alt3") d.alternatives.push_back(dgp::AlternativeSpec::alt_three());
      else
        throw ConfigError(where + ": expected null|alt1|alt2|alt3 or an object, got '" + s + "'");
    } else if (v.is_object()) {
      if (!v.contains("kind")) throw ConfigError(where + ".kind: missing");
      const auto kind = v.at("kind").get<std::string>();
      if (kind == "drift") {
        if (!v.contains("c") || !v.at("c").is_number())
          throw ConfigError(where + ".c: drift needs a numeric scale");
        d.alternatives.push_back(dgp::AlternativeSpec::local_drift(v.at("c").get<double>()));
      } else if (kind == "custom") {
        if (!v.contains("theta") || !v.at("theta").is_array())
          throw ConfigError(where + ".theta: custom needs an array of coefficients");
        const auto& arr = v.at("theta");
        Eigen::VectorXd theta(static_cast<Eigen::Index>(arr.size()));
        for (Eigen::Index t = 0; t < theta.size(); ++t)
          theta[t] = arr.at(static_cast<std::size_t>(t)).get<double>();
        d.alternatives.push_back(dgp::AlternativeSpec::custom_theta(std::move(theta)));
      } else {
        throw ConfigError(where + ".kind: expected drift|custom, got '" + kind + "'");
      }
    } else {
      throw ConfigError(where + ": expected a string or an object");
    }
  }

  if (j.contains("tests")) {
    d.tests.clear();
    for (std::size_t i = 0; const auto& v : j.at("tests"))
      d.tests.push_back(
          parse_test(v.get<std::string>(), "design.tests[" + std::to_string(i++) + "]"));
  }
  if (j.contains("mc_samples"))
    d.mc_samples = static_cast<int>(int_at(j.at("mc_samples"), "design.mc_samples"));
  if (j.contains("replicates"))
    d.replicates = static_cast<int>(int_at(j.at("replicates"), "design.replicates"));
  if (j.contains("alphas")) {
    d.alphas.clear();
    for (std::size_t i = 0; const auto& v : j.at("alphas")) {
      if (!v.is_number())
        throw ConfigError("design.alphas[" + std::to_string(i) + "]: expected a number");
      d.alphas.push_back(v.get<double>());
      ++i;
    }
  }
  if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
  return d;
}

harness::McDesign preset_design(const std::string& name) {
  using harness::KThetaRule;
  harness::McDesign d;
  d.k_delta_list = {0};
  d.covariate_cases = {{std::numeric_limits<double>::infinity(),
                        dgp::Dependence::CrossBlockDependent}};
  d.tests = {harness::TestKind::PMax, harness::TestKind::PMaxT, harness::TestKind::WaldBoot};

  if (name == "desk-scale") {
    d.n_list = {100};
    d.k_theta_rules = {KThetaRule::fixed(35), KThetaRule::fixed(200)};
    d.alternatives = {dgp::AlternativeSpec::null()};
    d.mc_samples = 200;
    d.replicates = 200;
    return d;
  }

  d.n_list = {100, 250, 500};
  d.k_theta_rules = {KThetaRule::fixed(35), KThetaRule::growth(dgp::GrowthRule::KOne),
                     KThetaRule::growth(dgp::GrowthRule::KTwo)};
  d.mc_samples = 1000;
  d.replicates = 1000;
  if (name == "paper-h0") d.alternatives = {dgp::AlternativeSpec::null()};
  else if (name == "paper-alt1") d.alternatives = {dgp::AlternativeSpec::alt_one()};
  else if (name == "paper-alt2") d.alternatives = {dgp::AlternativeSpec::alt_two()};
  else if (name == "paper-alt3") d.alternatives = {dgp::AlternativeSpec::alt_three()};
  else throw ConfigError("unknown preset: " + name);
  return d;
}

int cmd_simulate(const SimArgs& args) {
  set_threads(args.threads);
  if (args.design_path.empty() == args.preset.empty())
    throw ConfigError("provide exactly one of --design or --preset");

  harness::McDesign design;
  if (!args.preset.empty()) {
    design = preset_design(args.preset);
  } else {
    std::ifstream f(args.design_path);
    if (!f) throw ConfigError("cannot open design file " + args.design_path);
    json j;
    try {
      f >> j;
    } catch (const json::parse_error& e) {
      throw ConfigError("design: not valid JSON: " + std::string(e.what()));
    }
    design = parse_design(j);
  }
  if (args.mc_samples > 0) design.mc_samples = args.mc_samples;
  if (args.replicates > 0) design.replicates = args.replicates;
  if (args.seed_set) design.seed = args.seed;
  if (!args.alphas.empty()) design.alphas = args.alphas;
  design.validate();

  const harness::McGridResult result = harness::run_grid(design);
  std::fputs(result.text.c_str(), stdout);

  if (!args.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(args.output_dir);
    const auto write = [&](const char* name, const std::string& body) {
      const fs::path p = fs::path(args.output_dir) / name;
      std::ofstream f(p);
      if (!f) throw ConfigError("cannot write " + p.string());
      f << body;
      std::printf("wrote %s\n", p.string().c_str());
    };
    write("tables.txt", result.text);
    write("grid.csv", result.csv);
    write("manifest.json", result.manifest + "\n");
  }
  return 0;
}

// ------------------------------------------------------------ cmd_diagnose

int cmd_diagnose(const DiagArgs& args) {
  const long long k1 = dgp::k_growth(args.n, dgp::GrowthRule::KOne);
  const long long k2 = dgp::k_growth(args.n, dgp::GrowthRule::KTwo);
  std::printf("n = %lld\n", args.n);
  std::printf("  k1(n) = round(exp(3.2 n^(1/7))) = %lld\n", k1);
  std::printf("  k2(n) = round(0.02 n^2)         = %lld\n", k2);
  if (args.k_theta <= 0) return 0;

  const double n = static_cast<double>(args.n);
  const double k = static_cast<double>(args.k_theta);
  const double lnk = std::log(k);
  const double lnn = std::log(n);
  const double p = args.p;

  std::printf(
      "\nheuristic bound check for k_theta = %lld (unit constants; the theory states\n"
      "asymptotic o(.) rates, so this is a rule of thumb, not a guarantee)\n\n",
      args.k_theta);
  std::printf("  %-38s %-34s %12s %12s  %s\n", "covariate case", "bound", "value", "limit",
              "ok");
  auto row = [](const char* label, const char* formula, double value, double limit) {
    std::printf("  %-38s %-34s %12.4g %12.4g  %s\n", label, formula, value, limit,
                value <= limit ? "yes" : "no");
  };
  row("(i) bounded", "max-type: ln k <= n^(1/7)", lnk, std::pow(n, 1.0 / 7.0));
  row("", "expansion: k <= n^(1/2)", k, std::sqrt(n));
  row("(ii) sub-Gaussian |x|^4", "max-type: ln k <= n^(1/7)", lnk, std::pow(n, 1.0 / 7.0));
  row("", "expansion: k <= n^(1/3)", k, std::pow(n, 1.0 / 3.0));
  row("(iii) sub-exponential |x|^4", "max-type: ln k <= n^(1/7)", lnk,
      std::pow(n, 1.0 / 7.0));
  row("", "expansion: k <= n^(1/4)", k, std::pow(n, 1.0 / 4.0));
  {
    char label[64], formula[64];
    std::snprintf(label, sizeof(label), "(iv) L_p-bounded, p = %g", p);
    std::snprintf(formula, sizeof(formula), "max-type: k <= n^(p/2)/(g ln^2 n)^p");
    // slowly varying g(n) taken as ln n for the rule of thumb
    row(label, formula, k, std::pow(n, p / 2.0) / std::pow(lnn * lnn * lnn, p));
    std::snprintf(formula, sizeof(formula), "expansion: k <= (n/ln^2 n)^(p/8)");
    row("", formula, k, std::pow(n / (lnn * lnn), p / 8.0));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parsimonious max-type tests of many zero restrictions"};
  app.set_version_flag("--version", "0.1.0");
  app.require_subcommand(1);

  TestArgs targs;
  auto* test = app.add_subcommand("test", "run the max test on a CSV dataset");
  test->add_option("--data", targs.data, "CSV file with a header row")->required();
  test->add_option("--response", targs.response, "response column")->required();
  test->add_option("--nuisance", targs.nuisance, "nuisance (always-included) columns")
      ->delimiter(',');
  test->add_option("--test", targs.test, "columns under test")->delimiter(',');
  test->add_flag("--test-all-remaining", targs.test_all_remaining,
                 "test every column that is neither response nor nuisance");
  test->add_option("--weights", targs.weights, "max statistic weights")
      ->check(CLI::IsMember({"flat", "invse"}))
      ->capture_default_str();
  test->add_option("--mode", targs.mode, "bootstrap scheme")
      ->check(CLI::IsMember({"wild", "multiplier"}))
      ->capture_default_str();
  test->add_option("--replicates", targs.replicates, "bootstrap replicates")
      ->capture_default_str();
  test->add_option("--seed", targs.seed, "RNG seed")->capture_default_str();
  test->add_option("--threads", targs.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  test->add_option("--output", targs.output, "write a JSON report here");

  SimArgs sargs;
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo rejection-frequency grid");
  sim->add_option("--design", sargs.design_path, "JSON design file (see README for keys)");
  sim->add_option("--preset", sargs.preset,
                  "named design: paper-h0|paper-alt1|paper-alt2|paper-alt3|desk-scale");
  sim->add_option("--mc-samples", sargs.mc_samples, "override Monte Carlo sample count");
  sim->add_option("--replicates", sargs.replicates, "override bootstrap replicates");
  auto* seed_opt = sim->add_option("--seed", sargs.seed, "override master seed");
  sim->add_option("--alpha", sargs.alphas, "nominal sizes")->delimiter(',');
  sim->add_option("--threads", sargs.threads, "worker threads (0 = all cores)");
  sim->add_option("--output-dir", sargs.output_dir,
                  "write tables.txt, grid.csv, manifest.json here");

  DiagArgs dargs;
  auto* diag = app.add_subcommand("diagnose", "print growth rules and heuristic bound checks");
  diag->add_option("--n", dargs.n, "sample size")->required()->check(CLI::PositiveNumber);
  diag->add_option("--k-theta", dargs.k_theta, "test dimension to check");
  diag->add_option("--p", dargs.p, "moment order for the L_p case")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  sargs.seed_set = seed_opt->count() > 0;

  try {
    if (app.got_subcommand(test)) return cmd_test(targs);
    if (app.got_subcommand(sim)) return cmd_simulate(sargs);
    return cmd_diagnose(dargs);
  } catch (const pmax::DegeneracyError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const pmax::CollinearityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const pmax::SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const pmax::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const pmax::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const pmax::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
