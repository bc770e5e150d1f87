#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "aiwc/csv.hpp"
#include "aiwc/dataset.hpp"
#include "aiwc/error.hpp"
#include "aiwc/forest.hpp"
#include "aiwc/parallel.hpp"
#include "aiwc/rng.hpp"
#include "aiwc/tuner.hpp"

namespace aiwc {

// ---- min.node.size scan ----

struct MinNodeScanRow {
  std::int64_t min_node_size = 0;
  double error_pct = 0;
};

// One fit per min_node_size value with (num_trees, mtry) held fixed.
inline std::vector<MinNodeScanRow> min_node_scan(
    const PreparedDataset& prepared, std::uint32_t num_trees,
    std::uint32_t mtry, std::int64_t lo, std::int64_t hi, std::uint64_t seed,
    unsigned jobs = 1) {
  if (lo < 1 || hi < lo) throw ExecutionError("bad min_node_size range");
  std::vector<MinNodeScanRow> rows(static_cast<std::size_t>(hi - lo + 1));
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    const auto mns = static_cast<std::uint32_t>(lo + static_cast<std::int64_t>(i));
    const Forest f = fit(prepared, {num_trees, mtry, mns, seed});
    if (f.oob.degenerate)
      throw DegenerateResponseError("response variance is zero");
    rows[i] = {lo + static_cast<std::int64_t>(i), f.oob.error_pct};
  });
  return rows;
}

inline std::string min_node_scan_csv(const std::vector<MinNodeScanRow>& rows) {
  std::string out = "min_node_size,error_pct\n";
  for (const auto& r : rows)
    out += std::to_string(r.min_node_size) + "," + fmt9(r.error_pct) + "\n";
  return out;
}

// ---- multi-start heatmap over (num_trees, mtry) ----

struct HeatmapConfig {
  SearchSpace space;  // min_node_size is forced to the fixed value below
  std::int64_t fixed_min_node_size = 9;
  Schedule schedule;
  std::size_t random_starts = 8;
  std::uint64_t forest_seed = 1;
  std::uint64_t sa_seed = 1;
  unsigned jobs = 1;
};

struct HeatmapCell {
  std::int64_t num_trees = 0;
  std::int64_t mtry = 0;
  double error_pct = 0;
};

struct HeatmapResult {
  std::vector<ParamsPoint> starts;
  std::vector<TuneTrace> chains;   // one per start
  std::vector<HeatmapCell> cells;  // duplicate (num_trees, mtry) averaged
};

// Anneals from the 4 outermost corners of the (num_trees, mtry) plane plus
// random interior points, then concatenates the traces into plot-ready cells.
inline HeatmapResult heatmap_scan(const PreparedDataset& prepared,
                                  const HeatmapConfig& config) {
  SearchSpace space = config.space;
  space.min_node_size = {config.fixed_min_node_size,
                         config.fixed_min_node_size};
  space.validate();

  HeatmapResult result;
  const IntRange& nt = space.num_trees;
  const IntRange& mt = space.mtry;
  const std::int64_t mns = config.fixed_min_node_size;
  result.starts = {{nt.lo, mt.lo, mns},
                   {nt.lo, mt.hi, mns},
                   {nt.hi, mt.lo, mns},
                   {nt.hi, mt.hi, mns}};
  Rng rng(derive_seed(config.sa_seed, "heatmap-starts"));
  for (std::size_t i = 0; i < config.random_starts; ++i) {
    auto interior = [&](const IntRange& r) {
      if (r.span() < 2) return r.lo;
      return rng.bounded(r.lo + 1, r.hi - 1);
    };
    result.starts.push_back({interior(nt), interior(mt), mns});
  }

  result.chains.resize(result.starts.size());
  parallel_for(result.starts.size(), config.jobs, [&](std::size_t i) {
    const TuneResult r =
        tune_forest(prepared, result.starts[i], space, config.schedule,
                    config.forest_seed,
                    derive_seed(config.sa_seed, "chain", i), "", 1);
    result.chains[i] = r.trace;
  });

  std::map<std::pair<std::int64_t, std::int64_t>, std::pair<double, std::uint64_t>>
      agg;
  for (const TuneTrace& trace : result.chains)
    for (const TuneEntry& e : trace.entries) {
      auto& [sum, count] = agg[{e.params.num_trees, e.params.mtry}];
      sum += e.error_pct;
      ++count;
    }
  for (const auto& [key, sc] : agg)
    result.cells.push_back(
        {key.first, key.second, sc.first / static_cast<double>(sc.second)});
  return result;
}

inline std::string heatmap_csv(const std::vector<HeatmapCell>& cells) {
  std::string out = "num_trees,mtry,error_pct\n";
  for (const auto& c : cells)
    out += std::to_string(c.num_trees) + "," + std::to_string(c.mtry) + "," +
           fmt9(c.error_pct) + "\n";
  return out;
}

// ---- leave-one-kernel-out tuning study ----

struct LokoRow {
  std::string kernel_omitted;
  std::int64_t num_trees = 0;
  std::int64_t mtry = 0;
  double error_pct = 0;
};

struct LokoResult {
  std::vector<LokoRow> rows;
  double median_num_trees = 0;
  double median_mtry = 0;
  double median_min_node_size = 0;
  double median_error_pct = 0;
};

namespace detail {

inline double median_double(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0;
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace detail

// Retunes from the same start with each kernel omitted in turn; the
// per-column medians of the optima are the model-selection rule.
inline LokoResult loko(const Dataset& data, const ParamsPoint& start,
                       const SearchSpace& space, const Schedule& schedule,
                       std::uint64_t forest_seed, std::uint64_t sa_seed,
                       ResponseTransform response = ResponseTransform::Log10,
                       unsigned jobs = 1) {
  const std::vector<std::string> kernels = data.kernels();
  if (kernels.size() < 2)
    throw ExecutionError("leave-one-kernel-out needs at least 2 kernels");

  LokoResult result;
  result.rows.resize(kernels.size());
  parallel_for(kernels.size(), jobs, [&](std::size_t k) {
    Dataset subset = data.without_kernel(kernels[k]);
    const TuneResult r =
        tune_forest(PreparedDataset(subset, response), start, space, schedule,
                    forest_seed, derive_seed(sa_seed, "loko", k), "", 1);
    result.rows[k] = {kernels[k], r.best.num_trees, r.best.mtry,
                      r.best_error_pct};
  });

  std::vector<double> nts, mts, errs;
  for (const LokoRow& r : result.rows) {
    nts.push_back(static_cast<double>(r.num_trees));
    mts.push_back(static_cast<double>(r.mtry));
    errs.push_back(r.error_pct);
  }
  result.median_num_trees = detail::median_double(nts);
  result.median_mtry = detail::median_double(mts);
  result.median_min_node_size = static_cast<double>(start.min_node_size);
  result.median_error_pct = detail::median_double(errs);
  return result;
}

inline std::string loko_csv(const LokoResult& r) {
  std::string out = "kernel_omitted,num_trees,mtry,error_pct\n";
  for (const LokoRow& row : r.rows)
    out += row.kernel_omitted + "," + std::to_string(row.num_trees) + "," +
           std::to_string(row.mtry) + "," + fmt9(row.error_pct) + "\n";
  return out;
}

inline std::string loko_medians_csv(const LokoResult& r) {
  return "num_trees,mtry,min_node_size,error_pct\n" +
         fmt9(r.median_num_trees) + "," + fmt9(r.median_mtry) + "," +
         fmt9(r.median_min_node_size) + "," + fmt9(r.median_error_pct) + "\n";
}

// ---- learning curve over the number of training kernels ----

struct LearningCurvePoint {
  std::size_t kernel_count = 0;
  double mae = 0;           // response space; meaningless when empty_test
  bool empty_test = false;  // i = |k| leaves nothing to predict
  std::size_t samples_used = 0;
};

// For each i: train on the rows of i shuffled kernels, predict the rest,
// pool |predicted - measured| in response space across samples. Duplicate
// kernel subsets produced by shuffling collisions are sampled once and
// samples_used records the distinct count. Identifier columns (application,
// kernel, size) are never part of the predictor schema.
inline std::vector<LearningCurvePoint> learning_curve(
    const Dataset& data, std::size_t s, const ForestParams& base,
    std::uint64_t seed, ResponseTransform response = ResponseTransform::Log10,
    unsigned jobs = 1) {
  if (s < 1) throw ExecutionError("sample count must be >= 1");
  const std::vector<std::string> kernels = data.kernels();
  const std::size_t k = kernels.size();
  std::vector<LearningCurvePoint> points(k);

  for (std::size_t i = 1; i <= k; ++i) {
    LearningCurvePoint& point = points[i - 1];
    point.kernel_count = i;
    if (i == k) {
      point.empty_test = true;  // no held-out kernels remain
      continue;
    }

    // distinct subsets out of s shuffles
    std::set<std::vector<std::uint32_t>> seen;
    std::vector<std::vector<std::uint32_t>> subsets;
    for (std::size_t j = 0; j < s; ++j) {
      Rng rng(derive_seed(seed, "lc", i * 1000003ull + j));
      std::vector<std::uint32_t> order(k);
      for (std::size_t q = 0; q < k; ++q)
        order[q] = static_cast<std::uint32_t>(q);
      rng.shuffle(order);
      std::vector<std::uint32_t> subset(order.begin(),
                                        order.begin() + static_cast<long>(i));
      std::sort(subset.begin(), subset.end());
      if (seen.insert(subset).second) subsets.push_back(std::move(subset));
    }
    point.samples_used = subsets.size();

    std::vector<double> abs_sum(subsets.size(), 0.0);
    std::vector<std::uint64_t> count(subsets.size(), 0);
    parallel_for(subsets.size(), jobs, [&](std::size_t j) {
      std::set<std::string> train_kernels;
      for (std::uint32_t idx : subsets[j]) train_kernels.insert(kernels[idx]);
      Dataset train = data.subset(
          [&](const DataRow& r) { return train_kernels.count(r.kernel) > 0; });
      const Forest forest =
          fit(train, base, response, 1);
      for (std::size_t row = 0; row < data.rows.size(); ++row) {
        if (train_kernels.count(data.rows[row].kernel)) continue;
        const double predicted =
            forest.predict_response(data.predictor_row(row));
        const double measured =
            to_response(response, data.rows[row].measured_time_s);
        abs_sum[j] += std::abs(predicted - measured);
        ++count[j];
      }
    });

    double total = 0;
    std::uint64_t n = 0;
    for (std::size_t j = 0; j < subsets.size(); ++j) {
      total += abs_sum[j];
      n += count[j];
    }
    point.mae = n ? total / static_cast<double>(n) : 0.0;
  }
  return points;
}

inline std::string learning_curve_csv(
    const std::vector<LearningCurvePoint>& points, ResponseTransform response) {
  std::string unit =
      response == ResponseTransform::Log10 ? "log10_seconds" : "seconds";
  std::string out = "kernel_count,mean_absolute_error_" + unit +
                    ",samples_used\n";
  for (const auto& p : points) {
    out += std::to_string(p.kernel_count) + ",";
    if (!p.empty_test) out += fmt9(p.mae);
    out += "," + std::to_string(p.samples_used) + "\n";
  }
  return out;
}

// ---- hold-one-kernel-out evaluation, error heatmap and device ranking ----

struct RankDeviceEntry {
  std::string device;
  double mean_measured_s = 0;
  double mean_predicted_s = 0;
};

struct RankCell {
  std::string application;
  std::string kernel;
  ProblemSize size = ProblemSize::Tiny;
  std::vector<RankDeviceEntry> devices;  // ascending predicted time
  std::uint64_t pairs = 0;
  std::uint64_t pairs_correct = 0;
};

struct RankReport {
  std::vector<RankCell> cells;
  std::uint64_t pairs = 0;
  std::uint64_t pairs_correct = 0;
  double accuracy() const {
    return pairs ? static_cast<double>(pairs_correct) /
                       static_cast<double>(pairs)
                 : 1.0;
  }
};

// Pairwise device-ordering accuracy given per-row predicted times (aligned
// with data.rows). Pure: testable with stub predictors.
inline RankReport rank_report(const Dataset& data,
                              const std::vector<double>& predicted_times) {
  if (predicted_times.size() != data.rows.size())
    throw ExecutionError("predicted_times must align with dataset rows");
  std::map<std::tuple<std::string, std::string, ProblemSize>,
           std::vector<std::size_t>>
      groups;
  for (std::size_t i = 0; i < data.rows.size(); ++i)
    groups[{data.rows[i].application, data.rows[i].kernel, data.rows[i].size}]
        .push_back(i);

  RankReport report;
  for (const auto& [key, rows] : groups) {
    RankCell cell;
    cell.application = std::get<0>(key);
    cell.kernel = std::get<1>(key);
    cell.size = std::get<2>(key);
    for (std::size_t i : rows)
      cell.devices.push_back({data.rows[i].device,
                              data.rows[i].measured_time_s,
                              predicted_times[i]});
    std::sort(cell.devices.begin(), cell.devices.end(),
              [](const RankDeviceEntry& a, const RankDeviceEntry& b) {
                if (a.mean_predicted_s != b.mean_predicted_s)
                  return a.mean_predicted_s < b.mean_predicted_s;
                return a.device < b.device;
              });
    auto sign = [](double d) { return d < 0 ? -1 : d > 0 ? 1 : 0; };
    for (std::size_t a = 0; a < cell.devices.size(); ++a)
      for (std::size_t b = a + 1; b < cell.devices.size(); ++b) {
        ++cell.pairs;
        const int mp = sign(cell.devices[a].mean_predicted_s -
                            cell.devices[b].mean_predicted_s);
        const int mm = sign(cell.devices[a].mean_measured_s -
                            cell.devices[b].mean_measured_s);
        if (mp == mm) ++cell.pairs_correct;
      }
    report.pairs += cell.pairs;
    report.pairs_correct += cell.pairs_correct;
    report.cells.push_back(std::move(cell));
  }
  return report;
}

struct EvaluateResult {
  std::vector<double> predicted_time_s;  // aligned with data.rows
  RankReport rank;
};

// Every row is predicted by a forest that never saw its kernel.
inline EvaluateResult evaluate(const Dataset& data, const ForestParams& params,
                               std::uint64_t seed,
                               ResponseTransform response = ResponseTransform::Log10,
                               unsigned jobs = 1) {
  if (data.devices.size() < 2)
    throw ExecutionError("evaluation needs at least 2 devices");
  const std::vector<std::string> kernels = data.kernels();
  EvaluateResult result;
  result.predicted_time_s.assign(data.rows.size(), 0.0);

  parallel_for(kernels.size(), jobs, [&](std::size_t k) {
    const std::string& kernel = kernels[k];
    Dataset train = data.without_kernel(kernel);
    ForestParams p = params;
    p.seed = derive_seed(seed, "holdout", k);
    const Forest forest = fit(train, p, response, 1);
    for (std::size_t row = 0; row < data.rows.size(); ++row) {
      if (data.rows[row].kernel != kernel) continue;
      result.predicted_time_s[row] =
          forest.predict_time(data.predictor_row(row));
    }
  });

  result.rank = rank_report(data, result.predicted_time_s);
  return result;
}

inline std::string predicted_vs_measured_csv(
    const Dataset& data, const std::vector<double>& predicted) {
  std::string out = "application,kernel,size,device,measured_s,predicted_s\n";
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const DataRow& r = data.rows[i];
    out += r.application + "," + r.kernel + "," + problem_size_name(r.size) +
           "," + r.device + "," + fmt9(r.measured_time_s) + "," +
           fmt9(predicted[i]) + "\n";
  }
  return out;
}

// relative error per (kernel, size, device) cell as a percentage of measured
inline std::string error_heatmap_csv(const Dataset& data,
                                     const std::vector<double>& predicted) {
  std::string out = "application,kernel,size,device,error_pct\n";
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const DataRow& r = data.rows[i];
    const double err =
        100.0 * std::abs(predicted[i] - r.measured_time_s) / r.measured_time_s;
    out += r.application + "," + r.kernel + "," + problem_size_name(r.size) +
           "," + r.device + "," + fmt9(err) + "\n";
  }
  return out;
}

inline std::string rank_report_csv(const RankReport& report) {
  std::string out =
      "application,kernel,size,device,mean_measured_s,mean_predicted_s,"
      "cell_pairs,cell_pairs_correct\n";
  for (const RankCell& c : report.cells)
    for (const RankDeviceEntry& d : c.devices)
      out += c.application + "," + c.kernel + "," + problem_size_name(c.size) +
             "," + d.device + "," + fmt9(d.mean_measured_s) + "," +
             fmt9(d.mean_predicted_s) + "," + std::to_string(c.pairs) + "," +
             std::to_string(c.pairs_correct) + "\n";
  return out;
}

inline std::string rank_summary_csv(const RankReport& report) {
  return "pairs,pairs_correct,pairwise_accuracy\n" +
         std::to_string(report.pairs) + "," +
         std::to_string(report.pairs_correct) + "," + fmt9(report.accuracy()) +
         "\n";
}

}  // namespace aiwc
