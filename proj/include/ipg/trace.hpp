#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipg/evaluation.hpp"
#include "ipg/game.hpp"

namespace ipg {

/// One evaluated iterate of a learner.
struct TraceRecord {
  int iteration = 0;  // 1-based t
  JointPolicy policy;
  NashGapReport gaps;
};

/// Evaluated iterates of a run, in increasing iteration order.
struct LearnTrace {
  std::vector<TraceRecord> records;
  JointPolicy final_policy;
  std::vector<std::string> warnings;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
};

/// Mean of max_gap over the recorded iterates.
inline double nash_regret(const LearnTrace& trace) {
  if (trace.empty()) throw std::invalid_argument("nash_regret: empty trace");
  double total = 0.0;
  for (const auto& rec : trace.records) total += rec.gaps.max_gap;
  return total / static_cast<double>(trace.size());
}

/// Index into `records` of the iterate with the smallest max_gap (first on ties).
inline std::size_t best_iterate(const LearnTrace& trace) {
  if (trace.empty()) throw std::invalid_argument("best_iterate: empty trace");
  std::size_t best = 0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace.records[k].gaps.max_gap < trace.records[best].gaps.max_gap) best = k;
  }
  return best;
}

/// Iteration index t* of the best iterate.
inline int best_iteration(const LearnTrace& trace) { return trace.records[best_iterate(trace)].iteration; }

/// Gap evaluation schedule: iteration 1, every `cadence`-th iteration after it, and the last.
inline bool is_evaluation_step(int t, int total, int cadence) {
  return t == 1 || t == total || (cadence > 0 && (t - 1) % cadence == 0);
}

/// Default cadence: every iteration for small games, every 100 otherwise.
inline int default_cadence(const MarkovGame& game) {
  const double size = static_cast<double>(game.num_states()) * static_cast<double>(game.num_joint_actions());
  return size <= 1e4 ? 1 : 100;
}

}  // namespace ipg
