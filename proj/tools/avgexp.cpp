// avgexp: command-line front end.
//
//   avgexp run --preset generic1 --xmax 1000000 [--workers 8] [--out csv|json] ...
//   avgexp constant --model gl2 --series-y 10000 --euler-pmax 10000
//   avgexp verify --xmax 2000
//
// Exit codes: 0 success, 1 usage or input error, 2 invariant violation,
// 3 cache error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "avgexp/avgexp.hpp"

namespace {

using namespace avgexp;
using nlohmann::json;

constexpr int kExitInvariant = 2;
constexpr int kExitCache = 3;

std::vector<u64> parse_list(const std::string& text) {
  std::vector<u64> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoull(item));
  }
  return out;
}

std::string real_str(const Real& v, int digits) { return v.str(digits, std::ios_base::fixed); }

void print_estimate(std::ostream& out, const char* name, const ConstantEstimate& est, int digits) {
  out << name << ": C_E = " << real_str(est.value, digits) << "  (truncation " << est.truncation
      << ", tail <= " << est.tail_bound.str(6, std::ios_base::scientific) << ")\n"
      << "  tail formula: " << est.tail_formula << "\n";
}

struct RunOptions {
  std::string curve;
  std::string preset;
  u64 xmax = 0;
  std::string checkpoints;
  u64 seed = 1;
  unsigned workers = 1;
  u64 trace_threshold = kDefaultTraceThreshold;
  int stability = kDefaultStability;
  std::string model = "auto";
  std::string overrides;
  u64 kmax_diag = 20;
  std::string cache;
  std::string out = "csv";
  std::string outfile;
  int precision = 30;
};

// Poisson-scale flag: |observed - predicted| > 5 sqrt(predicted)
bool deviates(const PiERow& row) {
  return row.predicted && *row.predicted >= 10 &&
         std::abs(static_cast<double>(row.count) - *row.predicted) > 5 * std::sqrt(*row.predicted);
}

int cmd_run(const RunOptions& o) {
  ExperimentConfig cfg(o.preset.empty() ? parse_curve(o.curve) : preset_curve(o.preset));
  cfg.x_max = o.xmax;
  cfg.checkpoints = o.checkpoints.empty() ? default_checkpoints(o.xmax) : parse_list(o.checkpoints);
  cfg.seed = o.seed;
  cfg.workers = o.workers;
  cfg.trace_threshold = o.trace_threshold;
  cfg.stability = o.stability;
  const bool empirical = o.model == "empirical" || (o.model == "auto" && has_cm(cfg.curve));
  cfg.model = empirical ? DegreeKind::empirical : DegreeKind::gl2_generic;
  if (!o.overrides.empty()) cfg.overrides = load_overrides(o.overrides);
  cfg.k_max_diag = o.kmax_diag;
  if (!o.cache.empty()) cfg.cache_path = o.cache;

  const ExperimentResult res = run_experiment(cfg);
  const auto pi_e = pi_E_table(res.records, cfg.x_max, cfg.k_max_diag, res.model);
  std::optional<TrendFit> trend;
  try {
    trend = error_trend(res.rows);
  } catch (const InsufficientCheckpoints&) {
  }
  const auto consistency = main_term_consistency(res.records);

  std::ostream& log = (o.out == "json" && o.outfile.empty()) ? std::cerr : std::cout;
  log << "curve " << cfg.curve.label() << "  disc " << cfg.curve.discriminant() << "  good primes "
      << res.records.size() << "  bad primes skipped " << res.bad_primes << (res.from_cache ? "  (cached)" : "")
      << "\n";
  log << "C_E = " << real_str(res.constant.value, o.precision) << "  [" << res.constant_provenance << "]\n";
  for (const auto& r : res.rows) {
    log << "  x = " << r.x << "  pi = " << r.pi_x << "  c_hat = " << std::setprecision(8) << r.c_hat
        << "  rel_dev = " << r.rel_dev << "\n";
  }
  for (const auto& row : pi_e) {
    if (deviates(row)) {
      log << "  WARNING: pi_E(x;" << row.k << ") = " << row.count << " vs model " << *row.predicted
          << "; the degree model may need an override at k = " << row.k << "\n";
    }
  }
  if (trend) log << "  error trend slope " << trend->slope << " (" << trend->label << ")\n";
  if (!consistency.identity_holds || !consistency.bound_holds || !consistency.product_identity) {
    throw InvariantViolation("main-term consistency check failed");
  }

  if (o.out == "csv") {
    const std::filesystem::path dir = o.outfile.empty() ? "." : o.outfile;
    std::filesystem::create_directories(dir);
    std::ofstream rec(dir / "records.csv"), chk(dir / "checkpoints.csv"), pie(dir / "pi_e.csv");
    write_records_csv(rec, res.records);
    write_checkpoints_csv(chk, res.rows);
    write_pi_e_csv(pie, pi_e);
    log << "wrote " << (dir / "records.csv").string() << ", checkpoints.csv, pi_e.csv\n";
    return 0;
  }

  json j;
  j["curve"] = {{"a4", cfg.curve.a4()}, {"a6", cfg.curve.a6()}, {"label", cfg.curve.label()},
                {"discriminant", cfg.curve.discriminant()}};
  j["x_max"] = cfg.x_max;
  j["seed"] = cfg.seed;
  j["bad_primes_skipped"] = res.bad_primes;
  j["constant"] = {{"value", real_str(res.constant.value, o.precision)},
                   {"tail_bound", res.constant.tail_bound.str(6, std::ios_base::scientific)},
                   {"truncation", res.constant.truncation},
                   {"method", res.constant.method == ConstantMethod::euler ? "euler" : "series"},
                   {"tail_formula", res.constant.tail_formula},
                   {"provenance", res.constant_provenance}};
  for (const auto& r : res.rows) {
    j["checkpoints"].push_back({{"x", r.x},
                                {"pi_x", r.pi_x},
                                {"sum_e", r.sum_e},
                                {"sum_p_over_d", r.sum_p_over_d.convert_to<double>()},
                                {"avg_e", r.avg_e},
                                {"c_hat", r.c_hat},
                                {"c_model", r.c_model},
                                {"rel_dev", r.rel_dev},
                                {"main_term_dev", r.main_term_dev}});
  }
  for (const auto& row : pi_e) {
    json jr = {{"k", row.k}, {"count", row.count}};
    jr["model_prediction"] = row.predicted ? json(*row.predicted) : json(nullptr);
    j["pi_e"].push_back(jr);
  }
  if (trend) {
    j["error_trend"] = {{"slope", trend->slope}, {"intercept", trend->intercept}, {"label", trend->label}};
  }
  json recs = json::array();
  for (const auto& r : res.records) recs.push_back({r.p, r.a_p, r.d_p, r.e_p});
  j["records"] = {{"columns", {"p", "a_p", "d_p", "e_p"}}, {"rows", std::move(recs)}};

  if (o.outfile.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream(o.outfile) << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_constant(const std::string& model, const std::string& overrides, u64 series_y, u64 euler_pmax, int digits) {
  if (model != "gl2") {
    std::cerr << "constant: only the gl2 model is available without per-prime records; use `run --model "
                 "empirical` for estimated degrees\n";
    return 1;
  }
  DegreeModel m = DegreeModel::gl2(overrides.empty() ? std::map<u64, Real>{} : load_overrides(overrides));
  const ConstantEstimate series = constant_series(m, series_y);
  print_estimate(std::cout, "series", series, digits);
  try {
    const ConstantEstimate euler = constant_euler(m, euler_pmax);
    print_estimate(std::cout, "euler ", euler, digits);
    const Real diff = abs(series.value - euler.value);
    const Real tails = series.tail_bound + euler.tail_bound;
    const bool agree = diff <= tails;
    std::cout << "|series - euler| = " << diff.str(6, std::ios_base::scientific) << (agree ? " <= " : " > ")
              << "combined tails " << tails.str(6, std::ios_base::scientific)
              << (agree ? "  (agree)" : "  (DISAGREE)") << "\n";
    return agree ? 0 : kExitInvariant;
  } catch (const NotMultiplicative& ex) {
    std::cout << "euler : not available (" << ex.what() << ")\n";
    return 0;
  }
}

int cmd_verify(u64 xmax, u64 seed) {
  bool ok = true;
  auto report = [&](const std::string& name, const OracleReport& rep) {
    std::cout << (rep.ok() ? "[PASS] " : "[FAIL] ") << name << " (" << rep.checked << " primes)\n";
    for (const auto& f : rep.failures) std::cout << "    " << f << "\n";
    ok = ok && rep.ok();
  };
  for (const auto& curve : oracle_test_curves()) {
    report("structure vs brute force, " + curve.label() + ", p <= " + std::to_string(std::min<u64>(xmax, 5000)),
           check_structures_against_bruteforce(curve, xmax, seed));
    report("naive vs bsgs traces, " + curve.label() + ", 229 <= p <= " + std::to_string(xmax),
           check_traces_naive_vs_bsgs(curve, 229, xmax, seed));
  }
  report("a_p = 0 at p = 3 mod 4 for y^2=x^3-x, p <= " + std::to_string(xmax), check_supersingular_cm_i(xmax));
  return ok ? 0 : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Average exponent of elliptic curves modulo p"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Compute per-prime records and checkpoint statistics");
  auto* curve_opt = run->add_option("--curve", ro.curve, "Curve coefficients a4,a6 for y^2 = x^3 + a4 x + a6");
  auto* preset_opt = run->add_option("--preset", ro.preset, "Named curve: generic1, cm-i, cm-3")
                         ->check(CLI::IsMember({"generic1", "cm-i", "cm-3"}));
  curve_opt->excludes(preset_opt);
  run->add_option("--xmax", ro.xmax, "Largest prime considered")->required()->check(CLI::Range(u64{100}, u64{1} << 40));
  run->add_option("--checkpoints", ro.checkpoints, "Comma-separated ascending checkpoints (default: powers of 10)");
  run->add_option("--seed", ro.seed, "Random seed");
  run->add_option("--workers", ro.workers, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--trace-threshold", ro.trace_threshold, "Use the naive trace below this prime");
  run->add_option("--stability", ro.stability, "Exponent sampling stability window")->check(CLI::PositiveNumber);
  run->add_option("--model", ro.model, "Degree model (auto: empirical for CM curves, else gl2)")
      ->check(CLI::IsMember({"auto", "gl2", "empirical"}));
  run->add_option("--overrides", ro.overrides, "Degree overrides file ('k n' per line)");
  run->add_option("--kmax-diag", ro.kmax_diag, "Largest k in the pi_E table")->check(CLI::PositiveNumber);
  run->add_option("--cache", ro.cache, "Binary record cache path");
  run->add_option("--out", ro.out, "Output format")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--outfile", ro.outfile, "Output directory (csv) or file (json; default stdout)");
  run->add_option("--precision", ro.precision, "Digits printed for C_E");

  std::string c_model = "gl2", c_overrides;
  u64 series_y = 10000, euler_pmax = 10000;
  int c_digits = 30;
  auto* constant = app.add_subcommand("constant", "Evaluate C_E by series and Euler product");
  constant->add_option("--model", c_model, "Degree model")->check(CLI::IsMember({"gl2", "empirical"}));
  constant->add_option("--overrides", c_overrides, "Degree overrides file");
  constant->add_option("--series-y", series_y, "Series truncation y")->check(CLI::PositiveNumber);
  constant->add_option("--euler-pmax", euler_pmax, "Euler product truncation")->check(CLI::Range(u64{2}, u64{1} << 32));
  constant->add_option("--precision", c_digits, "Digits printed");

  u64 verify_xmax = 2000, verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "Run the brute-force oracle suite");
  verify->add_option("--xmax", verify_xmax, "Upper bound for the oracle checks")->required();
  verify->add_option("--seed", verify_seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (ro.curve.empty() && ro.preset.empty()) throw std::invalid_argument("run: give --curve or --preset");
      return cmd_run(ro);
    }
    if (*constant) return cmd_constant(c_model, c_overrides, series_y, euler_pmax, c_digits);
    if (*verify) return cmd_verify(verify_xmax, verify_seed);
  } catch (const InvariantViolation& ex) {
    std::cerr << "invariant violation: " << ex.what() << "\n";
    return kExitInvariant;
  } catch (const CacheError& ex) {
    std::cerr << "cache error: " << ex.what() << "\n";
    return kExitCache;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
