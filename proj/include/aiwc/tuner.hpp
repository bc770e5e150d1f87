#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aiwc/csv.hpp"
#include "aiwc/dataset.hpp"
#include "aiwc/error.hpp"
#include "aiwc/forest.hpp"
#include "aiwc/rng.hpp"

namespace aiwc {

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t span() const { return hi - lo; }
  bool contains(std::int64_t v) const { return v >= lo && v <= hi; }
  std::int64_t clamp(std::int64_t v) const {
    return v < lo ? lo : v > hi ? hi : v;
  }
};

// (num_trees, mtry, min_node_size) triple.
struct ParamsPoint {
  std::int64_t num_trees = 0;
  std::int64_t mtry = 0;
  std::int64_t min_node_size = 0;

  bool operator==(const ParamsPoint&) const = default;

  ForestParams to_forest_params(std::uint64_t seed) const {
    return {static_cast<std::uint32_t>(num_trees),
            static_cast<std::uint32_t>(mtry),
            static_cast<std::uint32_t>(min_node_size), seed};
  }

  std::string str() const {
    return "(" + std::to_string(num_trees) + ", " + std::to_string(mtry) +
           ", " + std::to_string(min_node_size) + ")";
  }
};

struct SearchSpace {
  IntRange num_trees{10, 10000};
  IntRange mtry{1, 34};
  IntRange min_node_size{1, 50};

  void validate() const {
    for (const IntRange& r : {num_trees, mtry, min_node_size})
      if (r.lo > r.hi)
        throw ExecutionError("search range lower bound exceeds upper bound");
  }
  bool contains(const ParamsPoint& p) const {
    return num_trees.contains(p.num_trees) && mtry.contains(p.mtry) &&
           min_node_size.contains(p.min_node_size);
  }
  bool single_point() const {
    return num_trees.span() == 0 && mtry.span() == 0 &&
           min_node_size.span() == 0;
  }
};

// Annealing schedule. initial_temperature <= 0 means "10% of the objective
// at the start point (floor 1.0)"; stop_temperature <= 0 means "1% of the
// resolved initial temperature".
struct Schedule {
  double initial_temperature = 0;
  double cooling_factor = 0.85;
  std::uint64_t steps_per_temperature = 10;
  double stop_temperature = 0;
  std::uint64_t max_evaluations = 1000;

  void validate() const {
    if (cooling_factor <= 0 || cooling_factor >= 1)
      throw ExecutionError("cooling factor must be in (0, 1)");
    if (steps_per_temperature < 1)
      throw ExecutionError("steps_per_temperature must be >= 1");
    if (max_evaluations < 1)
      throw ExecutionError("max_evaluations must be >= 1");
    if (initial_temperature > 0 && stop_temperature > 0 &&
        stop_temperature >= initial_temperature)
      throw ExecutionError("stop temperature must be below initial");
  }
};

struct TuneEntry {
  std::uint64_t eval = 0;  // 1-based
  ParamsPoint params;
  double error_pct = 0;
  bool accepted = false;
  double temperature = 0;
};

struct TuneTrace {
  std::vector<TuneEntry> entries;

  const TuneEntry& best() const {
    const TuneEntry* b = &entries.front();
    for (const TuneEntry& e : entries)
      if (e.error_pct < b->error_pct) b = &e;
    return *b;
  }
};

struct TuneResult {
  ParamsPoint best;
  double best_error_pct = 0;
  TuneTrace trace;
};

inline constexpr std::string_view kTuneTraceHeader =
    "eval,num_trees,mtry,min_node_size,error_pct,accepted,temperature";

inline std::string tune_trace_csv(const TuneTrace& trace) {
  std::string out = std::string(kTuneTraceHeader) + "\n";
  for (const TuneEntry& e : trace.entries) {
    out += std::to_string(e.eval) + "," + std::to_string(e.params.num_trees) +
           "," + std::to_string(e.params.mtry) + "," +
           std::to_string(e.params.min_node_size) + "," + fmt9(e.error_pct) +
           "," + (e.accepted ? "true" : "false") + "," + fmt9(e.temperature) +
           "\n";
  }
  return out;
}

inline void write_tune_trace_csv(const std::string& path,
                                 const TuneTrace& trace) {
  write_text_file(path, tune_trace_csv(trace));
}

// Classic simulated annealing over the integer triple. Neighbors perturb each
// dimension by a step drawn uniformly in +-(T/T0)*range, rounded half away
// from zero and clamped to the space; worse moves are accepted with
// probability exp(-delta/T). Returns the best point ever visited plus the
// full evaluation trace.
inline TuneResult tune(const std::function<double(const ParamsPoint&)>& objective,
                       const SearchSpace& space, const ParamsPoint& start,
                       const Schedule& schedule, std::uint64_t seed) {
  space.validate();
  schedule.validate();
  if (!space.contains(start))
    throw ExecutionError("start point " + start.str() +
                         " lies outside the search space");

  Rng rng(derive_seed(seed, "sa"));
  auto evaluate = [&](const ParamsPoint& p) {
    try {
      return objective(p);
    } catch (const Error& e) {
      throw ExecutionError("objective failed at " + p.str() + ": " + e.what());
    }
  };

  TuneResult result;
  TuneTrace& trace = result.trace;

  const double start_error = evaluate(start);
  const double t0 = schedule.initial_temperature > 0
                        ? schedule.initial_temperature
                        : std::max(1.0, 0.10 * start_error);
  const double stop = schedule.stop_temperature > 0
                          ? schedule.stop_temperature
                          : 0.01 * t0;
  double temperature = t0;
  std::uint64_t evals = 1;
  trace.entries.push_back({evals, start, start_error, true, temperature});

  ParamsPoint current = start;
  double current_error = start_error;
  result.best = start;
  result.best_error_pct = start_error;

  if (space.single_point()) return result;

  // Each dimension is perturbed independently with probability 1/2 per
  // proposal; the step is uniform in +-(T/T0)*range, rounded half away from
  // zero, clamped. The inclusion coin keeps widely mismatched ranges from
  // holding the narrow dimensions hostage: a pure full-dimensional move
  // almost always carries a rejecting num_trees jump once the chain is near
  // its optimum, which freezes mtry and min_node_size mid-schedule.
  auto perturb = [&](const ParamsPoint& p) {
    const double scale = temperature / t0;
    auto step = [&](std::int64_t v, const IntRange& r) {
      if (r.span() == 0) return r.lo;
      if (rng.uniform() >= 0.5) return v;
      const double magnitude = scale * static_cast<double>(r.span());
      const double u = rng.uniform(-magnitude, magnitude);
      return r.clamp(v + static_cast<std::int64_t>(std::llround(u)));
    };
    ParamsPoint q;
    q.num_trees = step(p.num_trees, space.num_trees);
    q.mtry = step(p.mtry, space.mtry);
    q.min_node_size = step(p.min_node_size, space.min_node_size);
    return q;
  };

  while (temperature >= stop && evals < schedule.max_evaluations) {
    for (std::uint64_t s = 0;
         s < schedule.steps_per_temperature && evals < schedule.max_evaluations;
         ++s) {
      ParamsPoint candidate = current;
      for (int redraw = 0; redraw < 5 && candidate == current; ++redraw)
        candidate = perturb(current);
      if (candidate == current) {
        // null move: nothing new to evaluate, but it counts and is logged
        ++evals;
        trace.entries.push_back(
            {evals, current, current_error, true, temperature});
        continue;
      }
      const double error = evaluate(candidate);
      ++evals;
      bool accepted = error <= current_error;
      if (!accepted) {
        const double p = std::exp(-(error - current_error) / temperature);
        accepted = rng.uniform() < p;
      }
      trace.entries.push_back({evals, candidate, error, accepted, temperature});
      if (accepted) {
        current = candidate;
        current_error = error;
        if (error < result.best_error_pct) {
          result.best = candidate;
          result.best_error_pct = error;
        }
      }
    }
    temperature *= schedule.cooling_factor;
  }
  return result;
}

// Objective wrapper around the forest: OOB prediction error as a function of
// the parameter triple, with the forest seed held fixed so the objective is
// deterministic. Optionally persists the full trace as CSV.
inline TuneResult tune_forest(const PreparedDataset& prepared,
                              const ParamsPoint& start,
                              const SearchSpace& space,
                              const Schedule& schedule,
                              std::uint64_t forest_seed, std::uint64_t sa_seed,
                              const std::string& trace_path = "",
                              unsigned jobs = 1) {
  auto objective = [&](const ParamsPoint& p) {
    const Forest forest = fit(prepared, p.to_forest_params(forest_seed), jobs);
    if (forest.oob.degenerate)
      throw DegenerateResponseError(
          "out-of-bag error is undefined: response variance is zero");
    return forest.oob.error_pct;
  };
  TuneResult result = tune(objective, space, start, schedule, sa_seed);
  if (!trace_path.empty()) write_tune_trace_csv(trace_path, result.trace);
  return result;
}

inline TuneResult tune_forest(const Dataset& data, const ParamsPoint& start,
                              const SearchSpace& space,
                              const Schedule& schedule,
                              std::uint64_t forest_seed, std::uint64_t sa_seed,
                              ResponseTransform response = ResponseTransform::Log10,
                              const std::string& trace_path = "",
                              unsigned jobs = 1) {
  return tune_forest(PreparedDataset(data, response), start, space, schedule,
                     forest_seed, sa_seed, trace_path, jobs);
}

}  // namespace aiwc
