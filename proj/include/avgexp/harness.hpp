#pragma once

// Experiment driver: per-prime records over p <= x_max, checkpoint averages
// compared with C_E x / 2, pi_E(x;k) diagnostics and an error-trend fit.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "avgexp/cache.hpp"
#include "avgexp/constants.hpp"
#include "avgexp/counting.hpp"
#include "avgexp/curve.hpp"
#include "avgexp/record.hpp"
#include "avgexp/structure.hpp"

namespace avgexp {

using BigRational = boost::multiprecision::cpp_rational;

struct ExperimentConfig {
  explicit ExperimentConfig(GlobalCurve c) : curve(std::move(c)) {}

  GlobalCurve curve;
  u64 x_max = 1000000;
  std::vector<u64> checkpoints;  // empty: powers of ten from 10^3, plus x_max
  u64 seed = 1;
  unsigned workers = 1;
  u64 trace_threshold = kDefaultTraceThreshold;
  int stability = kDefaultStability;
  DegreeKind model = DegreeKind::gl2_generic;
  std::map<u64, Real> overrides;
  u64 k_max_diag = 20;
  u64 constant_cutoff = 10000;  // p_max (Euler) or y (series) for c_model
  std::optional<std::string> cache_path;
};

/// Powers of ten from 10^3 up to x_max, with x_max appended when it is not one.
inline std::vector<u64> default_checkpoints(u64 x_max) {
  std::vector<u64> out;
  for (u64 c = 1000; c <= x_max; c *= 10) out.push_back(c);
  if (out.empty() || out.back() != x_max) out.push_back(x_max);
  return out;
}

struct CheckpointRow {
  u64 x = 0;
  u64 pi_x = 0;  // good primes <= x
  u64 sum_e = 0;
  BigRational sum_p_over_d;
  double avg_e = 0;
  double c_hat = 0;  // 2 sum_e / (pi_x x)
  double c_model = 0;
  double rel_dev = 0;  // c_hat / c_model - 1
  double main_term_dev = 0;  // |sum_p_over_d - c_model li(x^2)|
};

struct ExperimentResult {
  std::vector<PrimeRecord> records;
  std::vector<CheckpointRow> rows;
  u64 bad_primes = 0;  // primes <= x_max skipped as bad reduction
  DegreeModel model;
  ConstantEstimate constant;
  std::string constant_provenance;
  bool from_cache = false;
};

inline constexpr u64 kTraceSalt = 0x5452414345000000ULL;

/// The full pipeline for one good prime.
inline PrimeRecord compute_record(const GlobalCurve& curve, u64 p, u64 seed, u64 trace_threshold, int stability) {
  const auto C = reduce(curve, p);
  if (!C) throw std::invalid_argument("compute_record: bad prime " + std::to_string(p));
  Rng rng = make_stream(seed, p, kTraceSalt);
  const TraceResult t = trace(*C, rng, trace_threshold);
  return PrimeRecord::from(group_structure(*C, t, seed, stability));
}

/// Records for `primes` (ascending, all good) using a pool of `workers`
/// threads over contiguous chunks. Output order and content do not depend on
/// the worker count. The first failure (lowest chunk) is rethrown.
inline std::vector<PrimeRecord> compute_records(const GlobalCurve& curve, std::span<const u64> primes, u64 seed,
                                                unsigned workers, u64 trace_threshold, int stability) {
  constexpr std::size_t kChunk = 2048;
  const std::size_t chunks = (primes.size() + kChunk - 1) / kChunk;
  std::vector<PrimeRecord> out(primes.size());
  std::vector<std::exception_ptr> errors(chunks);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};

  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks || abort.load()) return;
      try {
        const std::size_t end = std::min(primes.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
          out[i] = compute_record(curve, primes[i], seed, trace_threshold, stability);
        }
      } catch (...) {
        errors[c] = std::current_exception();
        abort.store(true);
      }
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(chunks, 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

/// Throws InvariantViolation naming the first record that breaks a structure
/// invariant.
inline void verify_records(std::span<const PrimeRecord> records) {
  for (const auto& r : records) {
    if (auto v = structure_violation(r.structure())) {
      throw InvariantViolation("record p = " + std::to_string(r.p) + " violates " + *v);
    }
  }
}

/// Exact accounting of sum_p p/d_p against sum_p e_p.
struct MainTermConsistency {
  bool identity_holds = false;  // sum p/d - sum e == sum (a_p - 1)/d exactly
  bool bound_holds = false;     // |difference| <= sum (|a_p|+1)/d <= sum (2 sqrt p + 1)
  bool product_identity = false;  // sum e d == sum (p + 1 - a_p)
  BigRational difference;
};

inline MainTermConsistency main_term_consistency(std::span<const PrimeRecord> records) {
  using boost::multiprecision::cpp_int;
  std::map<u64, cpp_int> p_by_d, a_minus_1_by_d, abs_a_plus_1_by_d;
  cpp_int sum_e = 0, sum_ed = 0, sum_n = 0;
  double hasse_budget = 0;
  for (const auto& r : records) {
    p_by_d[r.d_p] += r.p;
    a_minus_1_by_d[r.d_p] += cpp_int(r.a_p) - 1;
    abs_a_plus_1_by_d[r.d_p] += cpp_int(r.a_p < 0 ? -r.a_p : r.a_p) + 1;
    sum_e += r.e_p;
    sum_ed += cpp_int(r.e_p) * r.d_p;
    sum_n += cpp_int(r.p) + 1 - r.a_p;
    hasse_budget += 2 * std::sqrt(static_cast<double>(r.p)) + 1;
  }
  auto collect = [](const std::map<u64, cpp_int>& by_d) {
    BigRational s = 0;
    for (const auto& [d, v] : by_d) s += BigRational(v, cpp_int(d));
    return s;
  };
  MainTermConsistency out;
  out.difference = collect(p_by_d) - BigRational(sum_e);
  out.identity_holds = out.difference == collect(a_minus_1_by_d);
  const BigRational budget = collect(abs_a_plus_1_by_d);
  out.bound_holds = abs(out.difference) <= budget && budget.convert_to<double>() <= hasse_budget * (1 + 1e-12);
  out.product_identity = sum_ed == sum_n;
  return out;
}

/// Checkpoint rows from records sorted by p. Sums are exact; floating point
/// only enters the reported ratios.
inline std::vector<CheckpointRow> checkpoint_rows(std::span<const PrimeRecord> records,
                                                  std::span<const u64> checkpoints, double c_model) {
  std::vector<CheckpointRow> rows;
  std::map<u64, u128> p_by_d;
  u64 pi_x = 0, sum_e = 0;
  std::size_t i = 0;
  for (u64 x : checkpoints) {
    for (; i < records.size() && records[i].p <= x; ++i) {
      const auto& r = records[i];
      ++pi_x;
      if (__builtin_add_overflow(sum_e, r.e_p, &sum_e)) throw std::overflow_error("sum_e overflow");
      p_by_d[r.d_p] += r.p;
    }
    if (pi_x == 0) throw std::invalid_argument("checkpoint " + std::to_string(x) + " has no good primes");
    CheckpointRow row;
    row.x = x;
    row.pi_x = pi_x;
    row.sum_e = sum_e;
    row.sum_p_over_d = 0;
    for (const auto& [d, s] : p_by_d) {
      using boost::multiprecision::cpp_int;
      const cpp_int num = (cpp_int(static_cast<u64>(s >> 64)) << 64) + static_cast<u64>(s);
      row.sum_p_over_d += BigRational(num, cpp_int(d));
    }
    const double xd = static_cast<double>(x);
    row.avg_e = static_cast<double>(sum_e) / static_cast<double>(pi_x);
    row.c_hat = 2.0 * static_cast<double>(sum_e) / (static_cast<double>(pi_x) * xd);
    row.c_model = c_model;
    row.rel_dev = row.c_hat / c_model - 1.0;
    row.main_term_dev = std::abs(row.sum_p_over_d.convert_to<double>() - c_model * li(xd * xd));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct PiERow {
  u64 k = 0;
  u64 count = 0;
  std::optional<double> predicted;  // li(x) / n_k when the model covers k
};

inline std::vector<PiERow> pi_E_table(std::span<const PrimeRecord> records, u64 x, u64 k_max,
                                      const DegreeModel& model) {
  const auto counts = split_counts(records, x, k_max);
  const double lix = li(static_cast<double>(x));
  std::vector<PiERow> rows;
  for (u64 k = 1; k <= k_max; ++k) {
    PiERow row{k, counts[k], std::nullopt};
    try {
      row.predicted = lix / degree(model, k).convert_to<double>();
    } catch (const MissingDegree&) {
    }
    rows.push_back(row);
  }
  return rows;
}

struct TrendFit {
  double slope = 0;
  double intercept = 0;
  struct Decade {
    u64 x;
    double dev;
    double fitted;
    double residual;  // log(dev) - fitted log
  };
  std::vector<Decade> table;
  std::string label = "diagnostic, not a verification of the theorem's exponent";
};

/// Least-squares slope of log(main_term_dev) against log(x). Needs at least 4
/// rows with positive deviation spanning at least two decades.
inline TrendFit error_trend(std::span<const CheckpointRow> rows) {
  std::vector<std::pair<double, double>> pts;
  std::vector<const CheckpointRow*> used;
  for (const auto& r : rows) {
    if (r.main_term_dev > 0 && r.x > 0) {
      pts.emplace_back(std::log(static_cast<double>(r.x)), std::log(r.main_term_dev));
      used.push_back(&r);
    }
  }
  if (pts.size() < 4) throw InsufficientCheckpoints("error_trend needs at least 4 checkpoints with nonzero deviation");
  const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end());
  if (hi->first - lo->first < 2 * std::log(10.0) - 1e-12) {
    throw InsufficientCheckpoints("error_trend needs checkpoints spanning at least two decades");
  }
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  TrendFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double f = fit.intercept + fit.slope * pts[i].first;
    fit.table.push_back({used[i]->x, used[i]->main_term_dev, std::exp(f), pts[i].second - f});
  }
  return fit;
}

namespace detail {

// Largest y <= k_max with the model defined on all of 1..y.
inline u64 covered_prefix(const DegreeModel& model, u64 k_max) {
  u64 y = 0;
  while (y < k_max && model.overrides.contains(y + 1)) ++y;
  return y;
}

}  // namespace detail

/// Runs the whole experiment described by `cfg`.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.x_max < 100) throw std::invalid_argument("x_max must be at least 100");
  if (cfg.model == DegreeKind::gl2_generic && has_cm(cfg.curve)) {
    throw std::invalid_argument("curve has CM: C_E is only available from the empirical degree model");
  }
  const std::vector<u64> checkpoints = cfg.checkpoints.empty() ? default_checkpoints(cfg.x_max) : cfg.checkpoints;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] > cfg.x_max || (i > 0 && checkpoints[i] <= checkpoints[i - 1])) {
      throw std::invalid_argument("checkpoints must be strictly ascending and <= x_max");
    }
  }

  ExperimentResult res;
  std::vector<u64> good;
  for_each_prime(2, cfg.x_max, [&](u64 p) {
    if (cfg.curve.is_bad(p)) {
      ++res.bad_primes;
    } else {
      good.push_back(p);
    }
  });

  if (cfg.cache_path && std::filesystem::exists(*cfg.cache_path)) {
    auto cached = cache_load(*cfg.cache_path, cfg.curve);
    const bool covers = cached.size() == good.size() &&
                        std::equal(good.begin(), good.end(), cached.begin(),
                                   [](u64 p, const PrimeRecord& r) { return p == r.p; });
    if (covers) {
      try {
        verify_records(cached);
      } catch (const InvariantViolation& ex) {
        throw CorruptCache(std::string("cached records fail invariants: ") + ex.what());
      }
      res.records = std::move(cached);
      res.from_cache = true;
    }
  }
  if (!res.from_cache) {
    res.records = compute_records(cfg.curve, good, cfg.seed, cfg.workers, cfg.trace_threshold, cfg.stability);
    if (cfg.cache_path) cache_store(*cfg.cache_path, cfg.curve, res.records);
  }
  verify_records(res.records);

  if (cfg.model == DegreeKind::gl2_generic) {
    res.model = DegreeModel::gl2(cfg.overrides);
    try {
      res.constant = constant_euler(res.model, cfg.constant_cutoff);
      res.constant_provenance = "gl2 degree model, Euler product to p_max = " + std::to_string(cfg.constant_cutoff);
    } catch (const NotMultiplicative&) {
      res.constant = constant_series(res.model, cfg.constant_cutoff);
      res.constant_provenance = "gl2 degree model with composite overrides, series to y = " +
                                std::to_string(cfg.constant_cutoff);
    }
  } else {
    res.model = estimate_degrees(res.records, cfg.x_max, cfg.k_max_diag);
    const u64 y = detail::covered_prefix(res.model, cfg.k_max_diag);
    if (y == 0) throw MissingDegree("empirical model covers no k");
    res.constant = constant_series(res.model, y);
    res.constant_provenance = "empirical degrees li(x)/pi_E(x;k) at x = " + std::to_string(cfg.x_max) +
                              ", series to y = " + std::to_string(y);
  }
  res.rows = checkpoint_rows(res.records, checkpoints, res.constant.value.convert_to<double>());
  return res;
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_records_csv(std::ostream& out, std::span<const PrimeRecord> records) {
  out << "p,a_p,d_p,e_p\n";
  for (const auto& r : records) out << r.p << ',' << r.a_p << ',' << r.d_p << ',' << r.e_p << '\n';
}

inline void write_checkpoints_csv(std::ostream& out, std::span<const CheckpointRow> rows) {
  out << "x,pi_x,sum_e,sum_p_over_d,avg_e,c_hat,c_model,rel_dev,main_term_dev\n";
  std::ostringstream line;
  for (const auto& r : rows) {
    line.str({});
    line << std::setprecision(17) << r.x << ',' << r.pi_x << ',' << r.sum_e << ','
         << r.sum_p_over_d.convert_to<double>() << ',' << r.avg_e << ',' << r.c_hat << ',' << r.c_model << ','
         << r.rel_dev << ',' << r.main_term_dev << '\n';
    out << line.str();
  }
}

inline void write_pi_e_csv(std::ostream& out, std::span<const PiERow> rows) {
  out << "k,count,model_prediction\n";
  for (const auto& r : rows) {
    out << r.k << ',' << r.count << ',';
    if (r.predicted) out << std::setprecision(12) << *r.predicted;
    out << '\n';
  }
}

}  // namespace avgexp
