#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aiwc/csv.hpp"
#include "aiwc/dataset.hpp"
#include "aiwc/error.hpp"
#include "aiwc/parallel.hpp"
#include "aiwc/rng.hpp"

namespace aiwc {

struct ForestParams {
  std::uint32_t num_trees = 500;
  std::uint32_t mtry = 1;
  std::uint32_t min_node_size = 1;
  std::uint64_t seed = 1;

  bool operator==(const ForestParams&) const = default;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0;  // leaf mean
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const {
    std::int32_t i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const TreeNode& nd = nodes[static_cast<std::size_t>(i)];
      i = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                    : nd.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }
};

// Out-of-bag statistics. error_pct = 100 * MSE_oob / Var(response), which is
// 100 * (1 - R^2); values above 100% mean the model is worse than the mean
// predictor. A constant response column makes the ratio undefined; that is
// the degenerate marker, never a division by zero.
struct OobStats {
  bool degenerate = false;
  double mse = 0;
  double response_variance = 0;
  double error_pct = 0;
  double r_squared = 0;
  std::uint64_t rows_evaluated = 0;
};

class Forest {
 public:
  ForestParams params;
  ResponseTransform response = ResponseTransform::Log10;
  std::vector<std::string> columns;  // predictor schema, fixed order
  std::uint64_t fingerprint = 0;
  std::vector<Tree> trees;
  std::vector<std::vector<std::uint32_t>> inbag;  // per tree, the n draws
  OobStats oob;

  // mean over trees of the leaf value reached, in response space
  double predict_response(std::span<const double> row) const {
    double sum = 0;
    for (const Tree& t : trees) sum += t.predict(row);
    return sum / static_cast<double>(trees.size());
  }

  // inverse of the response transform: seconds
  double predict_time(std::span<const double> row) const {
    return from_response(response, predict_response(row));
  }

  void check_schema(const std::vector<std::string>& predictor_names,
                    ResponseTransform t) const {
    if (schema_fingerprint(predictor_names, t) != fingerprint)
      throw SchemaError("model schema fingerprint " +
                        fingerprint_hex(fingerprint) +
                        " does not match input schema " +
                        fingerprint_hex(schema_fingerprint(predictor_names, t)));
  }

  // predictor row for an arbitrary feature vector + device, in model schema
  std::vector<double> make_row(const FeatureVector& features,
                               const std::string& device) const {
    std::vector<double> row(columns.size(), 0.0);
    const auto f = features.to_array();
    std::copy(f.begin(), f.end(), row.begin());
    const std::string want = "device=" + device;
    bool found = false;
    for (std::size_t i = kFeatureCount; i < columns.size(); ++i) {
      if (columns[i] == want) {
        row[i] = 1.0;
        found = true;
        break;
      }
    }
    if (!found)
      throw SchemaError("device '" + device + "' is not part of the model");
    return row;
  }

  std::vector<std::string> devices() const {
    std::vector<std::string> out;
    for (std::size_t i = kFeatureCount; i < columns.size(); ++i)
      out.push_back(columns[i].substr(std::string("device=").size()));
    return out;
  }

  nlohmann::ordered_json to_json() const;
  static Forest from_json(const nlohmann::json& j);
  void save(const std::string& path) const {
    write_text_file(path, to_json().dump() + "\n");
  }
  static Forest load(const std::string& path);
};

namespace detail {

struct FitContext {
  std::size_t n = 0, p = 0;
  std::vector<std::vector<double>> col;          // p columns of n values
  std::vector<double> y;                         // response
  std::vector<std::vector<std::uint32_t>> order; // p argsorts (value, row) asc

  FitContext(const Dataset& data, ResponseTransform t) {
    n = data.rows.size();
    p = data.predictor_count();
    col.assign(p, std::vector<double>(n));
    for (std::size_t c = 0; c < p; ++c)
      for (std::size_t i = 0; i < n; ++i)
        col[c][i] = data.predictor_value(i, c);
    y = data.responses(t);
    order.assign(p, {});
    for (std::size_t c = 0; c < p; ++c) {
      auto& ord = order[c];
      ord.resize(n);
      std::iota(ord.begin(), ord.end(), 0u);
      const auto& values = col[c];
      std::sort(ord.begin(), ord.end(),
                [&](std::uint32_t a, std::uint32_t b) {
                  if (values[a] != values[b]) return values[a] < values[b];
                  return a < b;
                });
    }
  }
};

// Grows trees on bootstrap samples. Rows stay presorted per column; each
// level stably partitions the per-column row lists into child buckets, so
// split scans see values in ascending order without re-sorting. One grower
// instance serves many trees; scratch buffers are reused across calls.
class TreeGrower {
 public:
  explicit TreeGrower(const FitContext& ctx, const ForestParams& params)
      : ctx_(ctx), params_(params) {
    mult_.resize(ctx.n);
    slot_of_row_.resize(ctx.n);
    rows_.resize(ctx.p);
    rows_next_.resize(ctx.p);
    weighted_y_.resize(ctx.n);
    col_pool_.resize(ctx.p);
  }

  Tree grow(std::uint64_t tree_index, std::vector<std::uint32_t>& draws_out) {
    const std::size_t n = ctx_.n;
    const std::size_t p = ctx_.p;
    Rng rng(derive_seed(params_.seed, "tree", tree_index));

    // bootstrap: n draws with replacement
    auto& mult = mult_;
    std::fill(mult.begin(), mult.end(), 0u);
    draws_out.clear();
    draws_out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto r = static_cast<std::uint32_t>(rng.bounded(std::uint64_t{n}));
      draws_out.push_back(r);
      ++mult[r];
    }
    for (std::size_t i = 0; i < n; ++i)
      weighted_y_[i] = static_cast<double>(mult[i]) * ctx_.y[i];

    // per-column lists of in-bag rows, in value order
    auto& rows = rows_;
    auto& rows_next = rows_next_;
    std::size_t active = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mult[i]) ++active;
    for (std::size_t c = 0; c < p; ++c) {
      rows[c].clear();
      rows[c].reserve(active);
      for (std::uint32_t r : ctx_.order[c])
        if (mult[r]) rows[c].push_back(r);
      rows_next[c].resize(active);
    }

    struct NodeWork {
      std::int32_t id;
      std::size_t begin, end;  // bucket range in the per-column row lists
      double weight, sum, sumsq;
    };

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<NodeWork> frontier;
    {
      double s = 0, s2 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!mult[i]) continue;
        s += weighted_y_[i];
        s2 += weighted_y_[i] * ctx_.y[i];
      }
      frontier.push_back({0, 0, active, static_cast<double>(n), s, s2});
    }

    auto& slot_of_row = slot_of_row_;
    std::fill(slot_of_row.begin(), slot_of_row.end(), -1);

    while (!frontier.empty()) {
      struct Split {
        bool split = false;
        std::int32_t column = -1;
        double threshold = 0;
        std::int32_t left_slot = -1, right_slot = -1;
      };
      std::vector<Split> decisions(frontier.size());
      std::vector<NodeWork> next_frontier;

      for (std::size_t f = 0; f < frontier.size(); ++f) {
        NodeWork& nw = frontier[f];
        TreeNode& node = tree.nodes[static_cast<std::size_t>(nw.id)];
        const double sse = nw.sumsq - nw.sum * nw.sum / nw.weight;
        const bool too_small =
            nw.weight < 2.0 * static_cast<double>(params_.min_node_size);
        const bool pure = sse <= 1e-12 * std::max(1.0, nw.sumsq);
        if (too_small || pure) {
          node.value = nw.sum / nw.weight;
          continue;
        }

        // mtry columns without replacement: partial Fisher-Yates over a
        // persistent pool, sampled columns sorted so the (column, threshold)
        // tie-break is ascending-lexicographic
        for (std::size_t c = 0; c < p; ++c)
          col_pool_[c] = static_cast<std::uint32_t>(c);
        const std::size_t mtry = std::min<std::size_t>(params_.mtry, p);
        for (std::size_t i = 0; i < mtry; ++i) {
          const std::size_t j =
              i + static_cast<std::size_t>(rng.bounded(std::uint64_t{p - i}));
          std::swap(col_pool_[i], col_pool_[j]);
        }
        std::sort(col_pool_.begin(), col_pool_.begin() + static_cast<long>(mtry));

        double best_gain = -std::numeric_limits<double>::infinity();
        std::int32_t best_col = -1;
        double best_thr = 0;
        for (std::size_t ci = 0; ci < mtry; ++ci) {
          const std::uint32_t c = col_pool_[ci];
          const std::uint32_t* bucket = rows[c].data();
          const double* values = ctx_.col[c].data();
          double wl = 0, sl = 0;
          double prev = values[bucket[nw.begin]];
          for (std::size_t i = nw.begin; i < nw.end; ++i) {
            const std::uint32_t r = bucket[i];
            const double v = values[r];
            if (v != prev) {
              // candidate boundary between prev and v
              double thr = prev + (v - prev) / 2.0;
              if (thr >= v) thr = prev;  // keep both sides non-empty
              const double wr = nw.weight - wl;
              const double gain = sl * sl / wl +
                                  (nw.sum - sl) * (nw.sum - sl) / wr;
              if (gain > best_gain) {
                best_gain = gain;
                best_col = static_cast<std::int32_t>(c);
                best_thr = thr;
              }
              prev = v;
            }
            wl += static_cast<double>(mult[r]);
            sl += weighted_y_[r];
          }
        }

        if (best_col < 0) {  // all sampled columns constant in this node
          node.value = nw.sum / nw.weight;
          continue;
        }

        Split& d = decisions[f];
        d.split = true;
        d.column = best_col;
        d.threshold = best_thr;
        node.feature = best_col;
        node.threshold = best_thr;
        node.left = static_cast<std::int32_t>(tree.nodes.size());
        node.right = node.left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();

        d.left_slot = static_cast<std::int32_t>(next_frontier.size());
        d.right_slot = d.left_slot + 1;
        next_frontier.push_back({node.left, 0, 0, 0, 0, 0});
        next_frontier.push_back({node.right, 0, 0, 0, 0, 0});
      }

      if (next_frontier.empty()) break;

      // route every row of the level to its child slot (column 0 enumerates
      // each bucket's rows; any column would do)
      std::vector<std::size_t> child_count(next_frontier.size(), 0);
      for (std::size_t f = 0; f < frontier.size(); ++f) {
        const NodeWork& nw = frontier[f];
        const Split& d = decisions[f];
        for (std::size_t i = nw.begin; i < nw.end; ++i) {
          const std::uint32_t r = rows[0][i];
          if (!d.split) {
            slot_of_row[r] = -1;
            continue;
          }
          const bool left = ctx_.col[d.column][r] <= d.threshold;
          const std::int32_t slot = left ? d.left_slot : d.right_slot;
          slot_of_row[r] = slot;
          NodeWork& child = next_frontier[static_cast<std::size_t>(slot)];
          child.weight += static_cast<double>(mult[r]);
          child.sum += weighted_y_[r];
          child.sumsq += weighted_y_[r] * ctx_.y[r];
          ++child_count[static_cast<std::size_t>(slot)];
        }
      }

      std::vector<std::size_t> offsets(next_frontier.size() + 1, 0);
      for (std::size_t sN = 0; sN < next_frontier.size(); ++sN)
        offsets[sN + 1] = offsets[sN] + child_count[sN];
      for (std::size_t sN = 0; sN < next_frontier.size(); ++sN) {
        next_frontier[sN].begin = offsets[sN];
        next_frontier[sN].end = offsets[sN + 1];
      }
      const std::size_t next_active = offsets.back();

      // stable partition of every column's row list
      std::vector<std::size_t> cursor;
      for (std::size_t c = 0; c < p; ++c) {
        cursor.assign(offsets.begin(), offsets.end() - 1);
        auto& src = rows[c];
        auto& dst = rows_next[c];
        dst.resize(next_active);
        for (std::size_t f = 0; f < frontier.size(); ++f) {
          const NodeWork& nw = frontier[f];
          for (std::size_t i = nw.begin; i < nw.end; ++i) {
            const std::uint32_t r = src[i];
            const std::int32_t slot = slot_of_row[r];
            if (slot >= 0) dst[cursor[static_cast<std::size_t>(slot)]++] = r;
          }
        }
        std::swap(rows[c], rows_next[c]);
      }

      frontier = std::move(next_frontier);
    }
    return tree;
  }

 private:
  const FitContext& ctx_;
  ForestParams params_;
  // scratch reused across trees
  std::vector<std::uint32_t> mult_;
  std::vector<std::int32_t> slot_of_row_;
  std::vector<std::vector<std::uint32_t>> rows_, rows_next_;
  std::vector<double> weighted_y_;
  std::vector<std::uint32_t> col_pool_;
};

}  // namespace detail

// Computes OOB statistics for a forest against the dataset it was trained on:
// each row is predicted by the trees whose bootstrap excluded it.
inline OobStats compute_oob(const Forest& forest, const detail::FitContext& ctx) {
  const std::size_t n = ctx.n;

  double mean = 0;
  for (double v : ctx.y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0;
  bool constant = true;
  for (double v : ctx.y) {
    var += (v - mean) * (v - mean);
    if (v != ctx.y[0]) constant = false;
  }
  var /= static_cast<double>(n);

  OobStats stats;
  stats.response_variance = var;
  if (constant) {
    stats.degenerate = true;
    return stats;
  }

  std::vector<double> sum(n, 0.0);
  std::vector<std::uint32_t> count(n, 0);
  std::vector<char> inbag(n);
  std::vector<double> row(ctx.p);
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    std::fill(inbag.begin(), inbag.end(), 0);
    for (std::uint32_t r : forest.inbag[t]) inbag[r] = 1;
    const Tree& tree = forest.trees[t];
    for (std::size_t i = 0; i < n; ++i) {
      if (inbag[i]) continue;
      // walk the tree against the column store directly
      std::int32_t node = 0;
      while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
        node = ctx.col[static_cast<std::size_t>(nd.feature)][i] <= nd.threshold
                   ? nd.left
                   : nd.right;
      }
      sum[i] += tree.nodes[static_cast<std::size_t>(node)].value;
      ++count[i];
    }
  }

  double mse = 0;
  std::uint64_t evaluated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!count[i]) continue;
    const double pred = sum[i] / static_cast<double>(count[i]);
    mse += (pred - ctx.y[i]) * (pred - ctx.y[i]);
    ++evaluated;
  }
  if (evaluated == 0)
    throw ExecutionError("no out-of-bag rows: every row was in every bag");
  mse /= static_cast<double>(evaluated);

  stats.mse = mse;
  stats.rows_evaluated = evaluated;
  stats.error_pct = 100.0 * mse / var;
  stats.r_squared = 1.0 - mse / var;
  return stats;
}

// Column store + argsorts for repeated fits on one dataset (tuning loops
// re-fit hundreds of times; the presort work is shared).
class PreparedDataset {
 public:
  PreparedDataset(const Dataset& data, ResponseTransform response)
      : ctx_(data, response),
        response_(response),
        columns_(data.predictor_names()) {}

  const detail::FitContext& context() const { return ctx_; }
  ResponseTransform response() const { return response_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return ctx_.n; }
  std::size_t predictor_count() const { return ctx_.p; }

 private:
  detail::FitContext ctx_;
  ResponseTransform response_;
  std::vector<std::string> columns_;
};

// Fits a random-forest regressor. Deterministic in params.seed: per-tree
// generators are keyed by (seed, tree index), so growing trees in parallel
// yields results identical to sequential growth.
inline Forest fit(const PreparedDataset& prepared, const ForestParams& params,
                  unsigned jobs = 1) {
  if (prepared.rows() < 2)
    throw ExecutionError("dataset must have at least 2 rows");
  if (params.num_trees < 1) throw ExecutionError("num_trees must be >= 1");
  if (params.min_node_size < 1)
    throw ExecutionError("min_node_size must be >= 1");
  if (params.mtry < 1 || params.mtry > prepared.predictor_count())
    throw ExecutionError("mtry must be in [1, " +
                         std::to_string(prepared.predictor_count()) +
                         "], got " + std::to_string(params.mtry));

  Forest forest;
  forest.params = params;
  forest.response = prepared.response();
  forest.columns = prepared.columns();
  forest.fingerprint = schema_fingerprint(forest.columns, forest.response);
  forest.trees.resize(params.num_trees);
  forest.inbag.resize(params.num_trees);

  parallel_for_with_state(
      params.num_trees, jobs,
      [&] { return detail::TreeGrower(prepared.context(), params); },
      [&](detail::TreeGrower& grower, std::size_t t) {
        forest.trees[t] = grower.grow(t, forest.inbag[t]);
      });

  forest.oob = compute_oob(forest, prepared.context());
  return forest;
}

inline Forest fit(const Dataset& data, const ForestParams& params,
                  ResponseTransform response = ResponseTransform::Log10,
                  unsigned jobs = 1) {
  return fit(PreparedDataset(data, response), params, jobs);
}

// Recomputes OOB statistics from the stored trees + in-bag lists.
inline OobStats oob_error(const Forest& forest, const Dataset& data) {
  const detail::FitContext ctx(data, forest.response);
  forest.check_schema(data.predictor_names(), forest.response);
  return compute_oob(forest, ctx);
}

// ---- model file (canonical JSON; identical forests serialize to identical
// bytes) ----

inline nlohmann::ordered_json Forest::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "aiwc-forest";
  j["version"] = 1;
  j["response"] = response_name(response);
  j["columns"] = columns;
  j["schema_fingerprint"] = fingerprint_hex(fingerprint);
  j["params"] = {{"num_trees", params.num_trees},
                 {"mtry", params.mtry},
                 {"min_node_size", params.min_node_size},
                 {"seed", params.seed}};
  j["oob"] = {{"degenerate", oob.degenerate},
              {"mse", oob.mse},
              {"response_variance", oob.response_variance},
              {"error_pct", oob.error_pct},
              {"r_squared", oob.r_squared},
              {"rows_evaluated", oob.rows_evaluated}};
  nlohmann::ordered_json jtrees = nlohmann::ordered_json::array();
  for (const Tree& t : trees) {
    nlohmann::ordered_json jnodes = nlohmann::ordered_json::array();
    for (const TreeNode& nd : t.nodes)
      jnodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value});
    jtrees.push_back(std::move(jnodes));
  }
  j["trees"] = std::move(jtrees);
  j["inbag"] = inbag;
  return j;
}

inline Forest Forest::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "aiwc-forest" || j.value("version", 0) != 1)
    throw ParseError("model file: unknown format or version");
  Forest f;
  f.response = parse_response(j["response"].get<std::string>());
  f.columns = j["columns"].get<std::vector<std::string>>();
  f.fingerprint = schema_fingerprint(f.columns, f.response);
  const std::string stored = j["schema_fingerprint"].get<std::string>();
  if (stored != fingerprint_hex(f.fingerprint))
    throw ParseError("model file: schema fingerprint does not match columns");
  f.params.num_trees = j["params"]["num_trees"].get<std::uint32_t>();
  f.params.mtry = j["params"]["mtry"].get<std::uint32_t>();
  f.params.min_node_size = j["params"]["min_node_size"].get<std::uint32_t>();
  f.params.seed = j["params"]["seed"].get<std::uint64_t>();
  f.oob.degenerate = j["oob"]["degenerate"].get<bool>();
  f.oob.mse = j["oob"]["mse"].get<double>();
  f.oob.response_variance = j["oob"]["response_variance"].get<double>();
  f.oob.error_pct = j["oob"]["error_pct"].get<double>();
  f.oob.r_squared = j["oob"]["r_squared"].get<double>();
  f.oob.rows_evaluated = j["oob"]["rows_evaluated"].get<std::uint64_t>();
  for (const auto& jt : j["trees"]) {
    Tree t;
    for (const auto& jn : jt) {
      TreeNode nd;
      nd.feature = jn[0].get<std::int32_t>();
      nd.threshold = jn[1].get<double>();
      nd.left = jn[2].get<std::int32_t>();
      nd.right = jn[3].get<std::int32_t>();
      nd.value = jn[4].get<double>();
      t.nodes.push_back(nd);
    }
    f.trees.push_back(std::move(t));
  }
  f.inbag = j["inbag"].get<std::vector<std::vector<std::uint32_t>>>();
  if (f.trees.size() != f.params.num_trees ||
      f.inbag.size() != f.trees.size())
    throw ParseError("model file: tree/inbag counts disagree with params");
  return f;
}

inline Forest Forest::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model file: " + std::string(e.what()));
  }
  return from_json(j);
}

}  // namespace aiwc
