#pragma once

// Oracle comparisons shared by the CLI `verify` command and the test suites.

#include <string>
#include <vector>

#include "avgexp/counting.hpp"
#include "avgexp/curve.hpp"
#include "avgexp/structure.hpp"

namespace avgexp {

struct OracleReport {
  u64 checked = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

/// group_structure (naive trace) against structure_bruteforce for every good
/// p <= p_max (capped at 5000).
inline OracleReport check_structures_against_bruteforce(const GlobalCurve& curve, u64 p_max, u64 seed = 1,
                                                        int stability = kDefaultStability) {
  OracleReport rep;
  for_each_prime(5, std::min<u64>(p_max, 5000), [&](u64 p) {
    const auto C = reduce(curve, p);
    if (!C) return;
    ++rep.checked;
    const GroupStructure brute = structure_bruteforce(*C);
    const GroupStructure fast = group_structure(*C, trace_naive(*C), seed, stability);
    if (!(brute == fast)) {
      rep.failures.push_back("p = " + std::to_string(p) + ": brute (d,e,a) = (" + std::to_string(brute.d_p) + "," +
                             std::to_string(brute.e_p) + "," + std::to_string(brute.a_p) + "), sampled = (" +
                             std::to_string(fast.d_p) + "," + std::to_string(fast.e_p) + "," +
                             std::to_string(fast.a_p) + ")");
    }
  });
  return rep;
}

/// trace_naive against order_bsgs for every good p in [max(lo, 229), hi].
inline OracleReport check_traces_naive_vs_bsgs(const GlobalCurve& curve, u64 lo, u64 hi, u64 seed = 1) {
  OracleReport rep;
  for_each_prime(std::max<u64>(lo, 229), hi, [&](u64 p) {
    const auto C = reduce(curve, p);
    if (!C) return;
    ++rep.checked;
    Rng rng = make_stream(seed, p);
    const TraceResult naive = trace_naive(*C);
    const TraceResult bsgs = order_bsgs(*C, rng);
    if (naive.N != bsgs.N) {
      rep.failures.push_back("p = " + std::to_string(p) + ": naive N = " + std::to_string(naive.N) +
                             ", bsgs N = " + std::to_string(bsgs.N));
    }
  });
  return rep;
}

/// For y^2 = x^3 - x: a_p = 0 at every good p = 3 (mod 4) up to hi.
inline OracleReport check_supersingular_cm_i(u64 hi) {
  OracleReport rep;
  const GlobalCurve curve(-1, 0, "cm-i");
  for_each_prime(5, hi, [&](u64 p) {
    if (p % 4 != 3) return;
    const auto C = reduce(curve, p);
    if (!C) return;
    ++rep.checked;
    const TraceResult t = trace_naive(*C);
    if (t.a_p != 0) rep.failures.push_back("p = " + std::to_string(p) + ": a_p = " + std::to_string(t.a_p));
  });
  return rep;
}

/// The three curves used by the oracle suites.
inline std::vector<GlobalCurve> oracle_test_curves() {
  return {GlobalCurve(1, 1, "y^2=x^3+x+1"), GlobalCurve(-1, 0, "y^2=x^3-x"), GlobalCurve(0, 6, "y^2=x^3+6")};
}

}  // namespace avgexp
