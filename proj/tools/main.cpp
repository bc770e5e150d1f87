// aiwc-predict: characterize kernels, train/tune execution-time models,
// predict and rank devices, and run the evaluation experiments.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aiwc/csv.hpp"
#include "aiwc/dataset.hpp"
#include "aiwc/error.hpp"
#include "aiwc/experiments.hpp"
#include "aiwc/features.hpp"
#include "aiwc/forest.hpp"
#include "aiwc/interpreter.hpp"
#include "aiwc/kernel.hpp"
#include "aiwc/svg.hpp"
#include "aiwc/synth.hpp"
#include "aiwc/trace.hpp"
#include "aiwc/tuner.hpp"

namespace {

using namespace aiwc;

// exit codes: 2 parse, 3 execution, 4 i/o, 5 schema mismatch
constexpr int kExitParse = 2;
constexpr int kExitExecution = 3;
constexpr int kExitIo = 4;
constexpr int kExitSchema = 5;

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("AIWC_PREDICT_SEED")) {
    try {
      return parse_u64(env);
    } catch (const Error&) {
      throw ParseError("AIWC_PREDICT_SEED is not an integer");
    }
  }
  return 1;
}

std::array<std::uint64_t, 3> parse_triple_u64(const std::string& s,
                                              const char* what) {
  auto fields = split_csv_line(s);
  if (fields.size() != 3)
    throw ParseError(std::string(what) + " must be three comma-separated "
                     "integers, got '" + s + "'");
  return {parse_u64(fields[0]), parse_u64(fields[1]), parse_u64(fields[2])};
}

ParamsPoint parse_params_point(const std::string& s, const char* what) {
  auto v = parse_triple_u64(s, what);
  return {static_cast<std::int64_t>(v[0]), static_cast<std::int64_t>(v[1]),
          static_cast<std::int64_t>(v[2])};
}

IntRange parse_range(const std::string& s, const char* what) {
  auto fields = split_csv_line(s);
  if (fields.size() != 2)
    throw ParseError(std::string(what) +
                     " must be 'lo,hi', got '" + s + "'");
  return {static_cast<std::int64_t>(parse_u64(fields[0])),
          static_cast<std::int64_t>(parse_u64(fields[1]))};
}

std::map<std::string, std::int64_t> parse_args(
    const std::vector<std::string>& raw) {
  std::map<std::string, std::int64_t> out;
  for (const std::string& kv : raw) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError("--arg expects name=value, got '" + kv + "'");
    const std::string name = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (end != value.c_str() + value.size())
      throw ParseError("--arg value for '" + name + "' is not an integer");
    out[name] = v;
  }
  return out;
}

// ---- characterize ----

struct CharacterizeOpts {
  std::string kernel_path;
  std::string trace_path;
  std::string global = "1,1,1";
  std::string local = "1,1,1";
  std::vector<std::string> args;
  unsigned history = kDefaultBranchHistory;
  std::uint64_t fuel = kDefaultFuel;
  std::string application = "unknown";
  std::string size = "tiny";
  std::string out;
  std::string trace_out;
  bool embed = false;
  std::string kernel_name;  // override for the CSV column
};

constexpr std::string_view kEmbedPrefix = "# aiwc: v1 ";

std::string embed_block(const FeatureVector& features,
                        const CharacterizeOpts& opts) {
  nlohmann::ordered_json j;
  j["ndrange"] = {{"global", parse_triple_u64(opts.global, "--global")},
                  {"local", parse_triple_u64(opts.local, "--local")}};
  j["history"] = opts.history;
  nlohmann::ordered_json f;
  const auto values = features.to_array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    // parse back the 9-digit form so embedded values match the CSV exactly
    f[FeatureVector::names()[i]] =
        std::strtod(fmt9(values[i]).c_str(), nullptr);
  }
  j["features"] = std::move(f);
  return std::string(kEmbedPrefix) + j.dump();
}

int cmd_characterize(const CharacterizeOpts& opts) {
  parse_problem_size(opts.size);  // validate early
  FeatureVector features;
  std::string kernel_label = opts.kernel_name;

  if (!opts.trace_path.empty()) {
    if (!opts.kernel_path.empty())
      throw ParseError("pass either a kernel file or --trace, not both");
    if (opts.embed) throw ParseError("--embed needs a kernel file");
    const Trace trace = read_trace(opts.trace_path);
    features = characterize(trace, opts.history);
    if (kernel_label.empty())
      kernel_label = std::filesystem::path(opts.trace_path).stem().string();
  } else {
    if (opts.kernel_path.empty())
      throw ParseError("pass a kernel file or --trace");
    const Kernel kernel = parse_kernel(read_text_file(opts.kernel_path));
    NDRange ndrange;
    const auto g = parse_triple_u64(opts.global, "--global");
    const auto l = parse_triple_u64(opts.local, "--local");
    ndrange.global_size = {g[0], g[1], g[2]};
    ndrange.local_size = {l[0], l[1], l[2]};
    const Trace trace =
        execute(kernel, ndrange, parse_args(opts.args), opts.fuel);
    if (!opts.trace_out.empty()) write_trace(trace, opts.trace_out);
    features = characterize(trace, opts.history);
    if (kernel_label.empty()) kernel_label = kernel.name;

    if (opts.embed) {
      std::string source = read_text_file(opts.kernel_path);
      std::string stripped;
      std::size_t start = 0;
      while (start <= source.size()) {  // drop previous embedded blocks
        std::size_t nl = source.find('\n', start);
        const std::string line = source.substr(
            start, nl == std::string::npos ? std::string::npos : nl - start);
        if (line.rfind("# aiwc:", 0) != 0) {
          stripped += line;
          if (nl != std::string::npos) stripped += '\n';
        }
        if (nl == std::string::npos) break;
        start = nl + 1;
      }
      write_text_file(opts.kernel_path,
                      embed_block(features, opts) + "\n" + stripped);
    }
  }

  const std::string row =
      feature_csv_row(opts.application, kernel_label, opts.size, features);
  if (opts.out.empty()) {
    std::cout << feature_csv_header() << "\n" << row << "\n";
  } else {
    const bool fresh = !std::filesystem::exists(opts.out);
    std::ofstream f(opts.out, std::ios::app | std::ios::binary);
    if (!f) throw IoError("cannot write '" + opts.out + "'");
    if (fresh) f << feature_csv_header() << "\n";
    f << row << "\n";
  }
  return 0;
}

// ---- dataset plumbing shared by train/tune/experiments ----

Dataset load_with_report(const std::string& features_csv,
                         const std::string& runtimes_csv) {
  JoinReport report;
  Dataset data = load_dataset(features_csv, runtimes_csv, &report);
  for (const std::string& key : report.orphan_features)
    std::cerr << "warning: feature row without runtimes: " << key << "\n";
  for (const std::string& key : report.orphan_runtimes)
    std::cerr << "warning: runtime row without features: " << key << "\n";
  return data;
}

// ---- train / tune / predict / rank ----

struct TrainOpts {
  std::string features_csv, runtimes_csv, out;
  std::uint32_t num_trees = 505, mtry = 30, min_node_size = 9;
  std::optional<std::uint64_t> seed;
  std::string response = "log10";
  unsigned jobs = 0;
};

int cmd_train(const TrainOpts& opts) {
  const Dataset data = load_with_report(opts.features_csv, opts.runtimes_csv);
  const std::uint64_t seed = resolve_seed(opts.seed);
  const Forest forest =
      fit(data, {opts.num_trees, opts.mtry, opts.min_node_size,
                 derive_seed(seed, "forest")},
          parse_response(opts.response), opts.jobs);
  forest.save(opts.out);
  if (forest.oob.degenerate) {
    std::cout << "oob: degenerate (zero response variance)\n";
  } else {
    std::cout << "oob_error_pct=" << fmt9(forest.oob.error_pct)
              << " r_squared=" << fmt9(forest.oob.r_squared)
              << " rows=" << data.rows.size() << "\n";
  }
  std::cout << "model written to " << opts.out << "\n";
  return 0;
}

struct TuneOpts {
  std::string features_csv, runtimes_csv, trace_out, model_out;
  std::string start = "500,32,9";
  std::string nt_range = "10,10000";
  std::string mtry_range;  // default 1..schema width
  std::string mns_range = "1,50";
  std::vector<std::string> fix;
  double t0 = 0, cooling = 0.85, stop = 0;
  std::uint64_t steps = 10, max_evals = 1000;
  std::optional<std::uint64_t> seed;
  std::string response = "log10";
  unsigned jobs = 0;
};

SearchSpace build_space(const TuneOpts& opts, std::size_t width) {
  SearchSpace space;
  space.num_trees = parse_range(opts.nt_range, "--nt-range");
  space.mtry = opts.mtry_range.empty()
                   ? IntRange{1, static_cast<std::int64_t>(width)}
                   : parse_range(opts.mtry_range, "--mtry-range");
  space.min_node_size = parse_range(opts.mns_range, "--mns-range");
  for (const std::string& kv : opts.fix) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ParseError("--fix expects dim=value, got '" + kv + "'");
    const std::string dim = kv.substr(0, eq);
    const auto value = static_cast<std::int64_t>(parse_u64(kv.substr(eq + 1)));
    if (dim == "num_trees") space.num_trees = {value, value};
    else if (dim == "mtry") space.mtry = {value, value};
    else if (dim == "min_node_size") space.min_node_size = {value, value};
    else throw ParseError("--fix: unknown dimension '" + dim + "'");
  }
  return space;
}

int cmd_tune(const TuneOpts& opts) {
  const Dataset data = load_with_report(opts.features_csv, opts.runtimes_csv);
  const std::uint64_t seed = resolve_seed(opts.seed);
  const SearchSpace space = build_space(opts, data.predictor_count());
  ParamsPoint start = parse_params_point(opts.start, "--start");
  if (space.min_node_size.span() == 0)
    start.min_node_size = space.min_node_size.lo;
  const Schedule schedule{opts.t0, opts.cooling, opts.steps, opts.stop,
                          opts.max_evals};
  const ResponseTransform response = parse_response(opts.response);
  const PreparedDataset prepared(data, response);
  const TuneResult result =
      tune_forest(prepared, start, space, schedule, derive_seed(seed, "forest"),
                  derive_seed(seed, "sa-master"), opts.trace_out, opts.jobs);
  std::cout << "best num_trees=" << result.best.num_trees
            << " mtry=" << result.best.mtry
            << " min_node_size=" << result.best.min_node_size
            << " oob_error_pct=" << fmt9(result.best_error_pct)
            << " evals=" << result.trace.entries.size() << "\n";
  if (!opts.model_out.empty()) {
    const Forest forest =
        fit(prepared, result.best.to_forest_params(derive_seed(seed, "forest")),
            opts.jobs);
    forest.save(opts.model_out);
    std::cout << "model written to " << opts.model_out << "\n";
  }
  return 0;
}

struct SelectOpts {
  std::string features_csv;
  std::string application, kernel, size;
};

FeatureRecord select_feature_row(const SelectOpts& sel) {
  const auto records = read_feature_csv(sel.features_csv);
  std::vector<FeatureRecord> matches;
  for (const FeatureRecord& r : records) {
    if (!sel.application.empty() && r.application != sel.application) continue;
    if (!sel.kernel.empty() && r.kernel != sel.kernel) continue;
    if (!sel.size.empty() && problem_size_name(r.size) != sel.size) continue;
    matches.push_back(r);
  }
  if (matches.empty())
    throw ExecutionError("no feature row matches the given selectors");
  if (matches.size() > 1)
    throw ExecutionError(
        "selectors match " + std::to_string(matches.size()) +
        " feature rows; narrow with --application/--kernel/--size");
  return matches.front();
}

void check_feature_columns(const Forest& forest) {
  const auto& names = FeatureVector::names();
  if (forest.columns.size() < kFeatureCount ||
      !std::equal(names.begin(), names.end(), forest.columns.begin()))
    throw SchemaError("model feature columns do not match this tool's schema");
}

int cmd_predict(const std::string& model_path, const SelectOpts& sel,
                const std::string& device) {
  const Forest forest = Forest::load(model_path);
  check_feature_columns(forest);
  const FeatureRecord row = select_feature_row(sel);
  const double seconds =
      forest.predict_time(forest.make_row(row.features, device));
  std::cout << fmt9(seconds) << "\n";
  return 0;
}

int cmd_rank(const std::string& model_path, const SelectOpts& sel) {
  const Forest forest = Forest::load(model_path);
  check_feature_columns(forest);
  const FeatureRecord row = select_feature_row(sel);
  std::vector<std::pair<double, std::string>> ranking;
  for (const std::string& device : forest.devices())
    ranking.emplace_back(
        forest.predict_time(forest.make_row(row.features, device)), device);
  std::sort(ranking.begin(), ranking.end());
  for (const auto& [seconds, device] : ranking)
    std::cout << device << "," << fmt9(seconds) << "\n";
  return 0;
}

// ---- experiments ----

struct ExperimentCommon {
  std::string features_csv, runtimes_csv, out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string response = "log10";
  unsigned jobs = 0;
  std::string plot;  // "svg" or empty
};

std::filesystem::path out_path(const ExperimentCommon& common,
                               const std::string& name) {
  std::filesystem::create_directories(common.out_dir);
  return std::filesystem::path(common.out_dir) / name;
}

int cmd_exp_synth(const ExperimentCommon& common, std::uint64_t kernels,
                  std::uint64_t devices, const std::string& sizes_flag,
                  double noise, std::uint64_t iterations) {
  SynthConfig config;
  config.kernel_count = kernels;
  config.device_count = devices;
  config.noise = noise;
  config.iterations = iterations;
  config.seed = resolve_seed(common.seed);
  if (!sizes_flag.empty()) {
    config.sizes.clear();
    for (const std::string& s : split_csv_line(sizes_flag))
      config.sizes.push_back(parse_problem_size(s));
  }
  const SynthResult result = synthesize(config);
  write_feature_csv(out_path(common, "features.csv").string(), result.features);
  write_runtime_csv(out_path(common, "runtimes.csv").string(), result.runtimes);
  write_latent_json(out_path(common, "latent.json").string(), result.latent);
  std::cout << "wrote " << result.features.size() << " feature rows, "
            << result.runtimes.size() << " runtime rows to " << common.out_dir
            << "\n";
  return 0;
}

int cmd_exp_min_node_scan(const ExperimentCommon& common,
                          std::uint32_t num_trees, std::uint32_t mtry,
                          const std::string& range_flag) {
  const Dataset data = load_with_report(common.features_csv,
                                        common.runtimes_csv);
  const IntRange range = parse_range(range_flag, "--range");
  const std::uint64_t seed = resolve_seed(common.seed);
  const PreparedDataset prepared(data, parse_response(common.response));
  const auto rows = min_node_scan(prepared, num_trees, mtry, range.lo,
                                  range.hi, derive_seed(seed, "forest"),
                                  common.jobs);
  write_text_file(out_path(common, "min_node_scan.csv").string(),
                  min_node_scan_csv(rows));
  if (common.plot == "svg") {
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
      xs.push_back(static_cast<double>(r.min_node_size));
      ys.push_back(r.error_pct);
    }
    svg::line_chart(out_path(common, "min_node_scan.svg").string(), xs, ys,
                    "OOB error vs min node size", "min_node_size",
                    "error_pct");
  }
  std::cout << "wrote " << rows.size() << " scan rows to " << common.out_dir
            << "\n";
  return 0;
}

int cmd_exp_heatmap(const ExperimentCommon& common,
                    const std::string& nt_range_flag,
                    const std::string& mtry_range_flag,
                    std::int64_t min_node_size, double cooling,
                    std::uint64_t steps, std::uint64_t max_evals) {
  const Dataset data = load_with_report(common.features_csv,
                                        common.runtimes_csv);
  const std::uint64_t seed = resolve_seed(common.seed);
  const PreparedDataset prepared(data, parse_response(common.response));

  HeatmapConfig config;
  config.space.num_trees = parse_range(nt_range_flag, "--nt-range");
  config.space.mtry =
      mtry_range_flag.empty()
          ? IntRange{1, static_cast<std::int64_t>(data.predictor_count())}
          : parse_range(mtry_range_flag, "--mtry-range");
  config.fixed_min_node_size = min_node_size;
  config.schedule = {0, cooling, steps, 0, max_evals};
  config.forest_seed = derive_seed(seed, "forest");
  config.sa_seed = derive_seed(seed, "sa-master");
  config.jobs = common.jobs;

  const HeatmapResult result = heatmap_scan(prepared, config);
  write_text_file(out_path(common, "heatmap.csv").string(),
                  heatmap_csv(result.cells));
  std::string raw;
  for (std::size_t i = 0; i < result.chains.size(); ++i) {
    TuneTrace combined;  // chain column prefixed per trace row
    raw += i == 0 ? "chain," + std::string(kTuneTraceHeader) + "\n" : "";
    for (const TuneEntry& e : result.chains[i].entries)
      raw += std::to_string(i) + "," + std::to_string(e.eval) + "," +
             std::to_string(e.params.num_trees) + "," +
             std::to_string(e.params.mtry) + "," +
             std::to_string(e.params.min_node_size) + "," +
             fmt9(e.error_pct) + "," + (e.accepted ? "true" : "false") + "," +
             fmt9(e.temperature) + "\n";
  }
  write_text_file(out_path(common, "heatmap_trace.csv").string(), raw);
  std::cout << "wrote " << result.cells.size() << " cells from "
            << result.chains.size() << " chains to " << common.out_dir << "\n";
  return 0;
}

int cmd_exp_loko(const ExperimentCommon& common, const std::string& start_flag,
                 const std::string& nt_range_flag, std::int64_t min_node_size,
                 double cooling, std::uint64_t steps, std::uint64_t max_evals) {
  const Dataset data = load_with_report(common.features_csv,
                                        common.runtimes_csv);
  const std::uint64_t seed = resolve_seed(common.seed);

  SearchSpace space;
  space.num_trees = parse_range(nt_range_flag, "--nt-range");
  space.mtry = {1, static_cast<std::int64_t>(data.predictor_count())};
  space.min_node_size = {min_node_size, min_node_size};
  ParamsPoint start = parse_params_point(start_flag, "--start");
  start.min_node_size = min_node_size;
  const Schedule schedule{0, cooling, steps, 0, max_evals};

  const LokoResult result =
      loko(data, start, space, schedule, derive_seed(seed, "forest"),
           derive_seed(seed, "sa-master"), parse_response(common.response),
           common.jobs);
  write_text_file(out_path(common, "loko.csv").string(), loko_csv(result));
  write_text_file(out_path(common, "loko_medians.csv").string(),
                  loko_medians_csv(result));
  std::cout << "wrote " << result.rows.size() << " omission rows; medians "
            << "num_trees=" << fmt9(result.median_num_trees)
            << " mtry=" << fmt9(result.median_mtry)
            << " min_node_size=" << fmt9(result.median_min_node_size)
            << " error_pct=" << fmt9(result.median_error_pct) << "\n";
  return 0;
}

int cmd_exp_learning_curve(const ExperimentCommon& common, std::size_t samples,
                           std::uint32_t num_trees, std::uint32_t mtry,
                           std::uint32_t min_node_size) {
  const Dataset data = load_with_report(common.features_csv,
                                        common.runtimes_csv);
  const std::uint64_t seed = resolve_seed(common.seed);
  const ResponseTransform response = parse_response(common.response);
  const auto points = learning_curve(
      data, samples,
      {num_trees, mtry, min_node_size, derive_seed(seed, "forest")},
      derive_seed(seed, "lc-master"), response, common.jobs);
  write_text_file(out_path(common, "learning_curve.csv").string(),
                  learning_curve_csv(points, response));
  if (common.plot == "svg") {
    std::vector<double> xs, ys;
    for (const auto& p : points)
      if (!p.empty_test) {
        xs.push_back(static_cast<double>(p.kernel_count));
        ys.push_back(p.mae);
      }
    svg::line_chart(out_path(common, "learning_curve.svg").string(), xs, ys,
                    "Prediction error vs training kernels", "kernel_count",
                    "mean_absolute_error");
  }
  std::cout << "wrote " << points.size() << " learning-curve points to "
            << common.out_dir << "\n";
  return 0;
}

int cmd_exp_evaluate(const ExperimentCommon& common, std::uint32_t num_trees,
                     std::uint32_t mtry, std::uint32_t min_node_size) {
  const Dataset data = load_with_report(common.features_csv,
                                        common.runtimes_csv);
  const std::uint64_t seed = resolve_seed(common.seed);
  const EvaluateResult result = evaluate(
      data, {num_trees, mtry, min_node_size, 0}, derive_seed(seed, "forest"),
      parse_response(common.response), common.jobs);
  write_text_file(out_path(common, "predicted_vs_measured.csv").string(),
                  predicted_vs_measured_csv(data, result.predicted_time_s));
  write_text_file(out_path(common, "error_heatmap.csv").string(),
                  error_heatmap_csv(data, result.predicted_time_s));
  write_text_file(out_path(common, "rank_report.csv").string(),
                  rank_report_csv(result.rank));
  write_text_file(out_path(common, "rank_summary.csv").string(),
                  rank_summary_csv(result.rank));
  if (common.plot == "svg") {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      xs.push_back(data.rows[i].measured_time_s);
      ys.push_back(result.predicted_time_s[i]);
    }
    svg::loglog_scatter(out_path(common, "predicted_vs_measured.svg").string(),
                        xs, ys, "Predicted vs measured execution time",
                        "measured_s", "predicted_s");
  }
  std::cout << "pairwise_accuracy=" << fmt9(result.rank.accuracy())
            << " pairs=" << result.rank.pairs << "\n";
  return 0;
}

void add_common_experiment_flags(CLI::App* cmd, ExperimentCommon& common,
                                 bool needs_data = true) {
  if (needs_data) {
    cmd->add_option("--features", common.features_csv,
                    "Feature CSV (characterizer schema)")
        ->required();
    cmd->add_option("--runtimes", common.runtimes_csv,
                    "Runtime CSV (application,kernel,size,device,...)")
        ->required();
  }
  cmd->add_option("--out-dir", common.out_dir, "Output directory");
  cmd->add_option("--seed", common.seed,
                  "Master seed (fallback: AIWC_PREDICT_SEED, then 1)");
  cmd->add_option("--response", common.response,
                  "Response transform: log10 or raw");
  cmd->add_option("--jobs", common.jobs, "Worker threads (0 = all cores)");
  cmd->add_option("--plot", common.plot, "Emit simple plots: svg");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "aiwc-predict: architecture-independent kernel characterization and "
      "execution-time prediction"};
  app.require_subcommand(1);

  // characterize
  CharacterizeOpts ch;
  CLI::App* characterize = app.add_subcommand(
      "characterize", "Compute the feature vector of a kernel or trace");
  characterize->add_option("kernel", ch.kernel_path,
                           "Kernel source file (.mk)");
  characterize->add_option("--trace", ch.trace_path,
                           "Characterize an existing trace file instead");
  characterize->add_option("--global", ch.global, "Global NDRange X,Y,Z");
  characterize->add_option("--local", ch.local, "Local NDRange X,Y,Z");
  characterize->add_option("--arg", ch.args,
                           "Kernel scalar argument name=value (repeatable)");
  characterize->add_option("--history", ch.history,
                           "Branch history length (1..24)");
  characterize->add_option("--fuel", ch.fuel,
                           "Instruction budget per work-item");
  characterize->add_option("--application", ch.application,
                           "Application label for the CSV row");
  characterize->add_option("--size", ch.size,
                           "Problem size label: tiny|small|medium|large");
  characterize->add_option("--kernel-name", ch.kernel_name,
                           "Kernel label override for the CSV row");
  characterize->add_option("--out", ch.out,
                           "Append the CSV row to this file");
  characterize->add_option("--trace-out", ch.trace_out,
                           "Also write the executed trace to this file");
  characterize->add_flag("--embed", ch.embed,
                         "Rewrite the kernel source with an embedded "
                         "'# aiwc: v1' feature comment");

  // train
  TrainOpts tr;
  CLI::App* train = app.add_subcommand("train", "Fit a random forest model");
  train->add_option("--features", tr.features_csv, "Feature CSV")->required();
  train->add_option("--runtimes", tr.runtimes_csv, "Runtime CSV")->required();
  train->add_option("--out", tr.out, "Model file to write")->required();
  train->add_option("--num-trees", tr.num_trees, "Trees in the forest");
  train->add_option("--mtry", tr.mtry, "Features tried per split");
  train->add_option("--min-node-size", tr.min_node_size,
                    "Minimal node size per tree");
  train->add_option("--seed", tr.seed,
                    "Master seed (fallback: AIWC_PREDICT_SEED, then 1)");
  train->add_option("--response", tr.response,
                    "Response transform: log10 or raw");
  train->add_option("--jobs", tr.jobs, "Worker threads (0 = all cores)");

  // tune
  TuneOpts tu;
  CLI::App* tune_cmd = app.add_subcommand(
      "tune", "Simulated-annealing search over forest parameters");
  tune_cmd->add_option("--features", tu.features_csv, "Feature CSV")
      ->required();
  tune_cmd->add_option("--runtimes", tu.runtimes_csv, "Runtime CSV")
      ->required();
  tune_cmd->add_option("--start", tu.start,
                       "Start point num_trees,mtry,min_node_size");
  tune_cmd->add_option("--nt-range", tu.nt_range, "num_trees range lo,hi");
  tune_cmd->add_option("--mtry-range", tu.mtry_range,
                       "mtry range lo,hi (default 1,<schema width>)");
  tune_cmd->add_option("--mns-range", tu.mns_range,
                       "min_node_size range lo,hi");
  tune_cmd->add_option("--fix", tu.fix,
                       "Freeze a dimension, e.g. --fix min_node_size=9");
  tune_cmd->add_option("--t0", tu.t0,
                       "Initial temperature (0 = 10% of start objective)");
  tune_cmd->add_option("--cooling", tu.cooling, "Cooling factor in (0,1)");
  tune_cmd->add_option("--steps", tu.steps, "Proposals per temperature");
  tune_cmd->add_option("--stop", tu.stop,
                       "Stop temperature (0 = 1% of initial)");
  tune_cmd->add_option("--max-evals", tu.max_evals, "Evaluation budget");
  tune_cmd->add_option("--seed", tu.seed,
                       "Master seed (fallback: AIWC_PREDICT_SEED, then 1)");
  tune_cmd->add_option("--response", tu.response,
                       "Response transform: log10 or raw");
  tune_cmd->add_option("--trace-out", tu.trace_out,
                       "Write the full tuning trace CSV here");
  tune_cmd->add_option("--model-out", tu.model_out,
                       "Also fit and save a model at the best parameters");
  tune_cmd->add_option("--jobs", tu.jobs, "Worker threads (0 = all cores)");

  // predict / rank
  SelectOpts sel;
  std::string model_path, device;
  CLI::App* predict = app.add_subcommand(
      "predict", "Predict execution time for one feature row on one device");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--features", sel.features_csv, "Feature CSV")
      ->required();
  predict->add_option("--application", sel.application,
                      "Select rows by application");
  predict->add_option("--kernel", sel.kernel, "Select rows by kernel");
  predict->add_option("--size", sel.size, "Select rows by size");
  predict->add_option("--device", device, "Device id")->required();

  SelectOpts rsel;
  std::string rmodel;
  CLI::App* rank = app.add_subcommand(
      "rank", "Rank all modelled devices by predicted time, fastest first");
  rank->add_option("--model", rmodel, "Model file")->required();
  rank->add_option("--features", rsel.features_csv, "Feature CSV")->required();
  rank->add_option("--application", rsel.application,
                   "Select rows by application");
  rank->add_option("--kernel", rsel.kernel, "Select rows by kernel");
  rank->add_option("--size", rsel.size, "Select rows by size");

  // experiment
  CLI::App* experiment =
      app.add_subcommand("experiment", "Evaluation procedures");
  experiment->require_subcommand(1);

  ExperimentCommon synth_common;
  std::uint64_t synth_kernels = 37, synth_devices = 15, synth_iterations = 50;
  double synth_noise = 0.02;
  std::string synth_sizes;
  CLI::App* exp_synth = experiment->add_subcommand(
      "synth", "Generate a synthetic dataset with a persisted latent model");
  add_common_experiment_flags(exp_synth, synth_common, false);
  exp_synth->add_option("--kernels", synth_kernels, "Kernel count");
  exp_synth->add_option("--devices", synth_devices, "Device count");
  exp_synth->add_option("--sizes", synth_sizes,
                        "Comma-separated subset of tiny,small,medium,large");
  exp_synth->add_option("--noise", synth_noise,
                        "Lognormal noise sigma in decades (0 = none)");
  exp_synth->add_option("--iterations", synth_iterations,
                        "Iterations column value");

  ExperimentCommon mns_common;
  std::uint32_t mns_num_trees = 300, mns_mtry = 30;
  std::string mns_range = "1,50";
  CLI::App* exp_mns = experiment->add_subcommand(
      "min-node-scan", "OOB error for each min_node_size value");
  add_common_experiment_flags(exp_mns, mns_common);
  exp_mns->add_option("--num-trees", mns_num_trees, "Fixed num_trees");
  exp_mns->add_option("--mtry", mns_mtry, "Fixed mtry");
  exp_mns->add_option("--range", mns_range, "min_node_size range lo,hi");

  ExperimentCommon hm_common;
  std::string hm_nt_range = "1,500", hm_mtry_range;
  std::int64_t hm_mns = 9;
  double hm_cooling = 0.85;
  std::uint64_t hm_steps = 4, hm_max_evals = 32;
  CLI::App* exp_hm = experiment->add_subcommand(
      "heatmap", "Multi-start annealing scan over (num_trees, mtry)");
  add_common_experiment_flags(exp_hm, hm_common);
  exp_hm->add_option("--nt-range", hm_nt_range,
                     "num_trees range lo,hi (paper scale: 1,10000)");
  exp_hm->add_option("--mtry-range", hm_mtry_range,
                     "mtry range lo,hi (default 1,<schema width>)");
  exp_hm->add_option("--min-node-size", hm_mns, "Fixed min_node_size");
  exp_hm->add_option("--cooling", hm_cooling, "Cooling factor");
  exp_hm->add_option("--steps", hm_steps, "Proposals per temperature");
  exp_hm->add_option("--max-evals", hm_max_evals,
                     "Evaluation budget per chain");

  ExperimentCommon loko_common;
  std::string loko_start = "500,32,9", loko_nt_range = "10,1000";
  std::int64_t loko_mns = 9;
  double loko_cooling = 0.85;
  std::uint64_t loko_steps = 3, loko_max_evals = 6;
  CLI::App* exp_loko = experiment->add_subcommand(
      "loko", "Leave-one-kernel-out retuning study");
  add_common_experiment_flags(exp_loko, loko_common);
  exp_loko->add_option("--start", loko_start,
                       "Start point num_trees,mtry,min_node_size");
  exp_loko->add_option("--nt-range", loko_nt_range, "num_trees range lo,hi");
  exp_loko->add_option("--min-node-size", loko_mns, "Fixed min_node_size");
  exp_loko->add_option("--cooling", loko_cooling, "Cooling factor");
  exp_loko->add_option("--steps", loko_steps, "Proposals per temperature");
  exp_loko->add_option("--max-evals", loko_max_evals,
                       "Evaluation budget per omission");

  ExperimentCommon lc_common;
  std::size_t lc_samples = 50;
  std::uint32_t lc_num_trees = 505, lc_mtry = 30, lc_mns = 9;
  CLI::App* exp_lc = experiment->add_subcommand(
      "learning-curve", "Prediction error vs number of training kernels");
  add_common_experiment_flags(exp_lc, lc_common);
  exp_lc->add_option("--samples", lc_samples,
                     "Shuffled samples per kernel count (paper scale: 500)");
  exp_lc->add_option("--num-trees", lc_num_trees, "Forest num_trees");
  exp_lc->add_option("--mtry", lc_mtry, "Forest mtry");
  exp_lc->add_option("--min-node-size", lc_mns, "Forest min_node_size");

  ExperimentCommon ev_common;
  std::uint32_t ev_num_trees = 505, ev_mtry = 30, ev_mns = 9;
  CLI::App* exp_ev = experiment->add_subcommand(
      "evaluate",
      "Hold-one-kernel-out predictions, error heatmap and device ranking");
  add_common_experiment_flags(exp_ev, ev_common);
  exp_ev->add_option("--num-trees", ev_num_trees, "Forest num_trees");
  exp_ev->add_option("--mtry", ev_mtry, "Forest mtry");
  exp_ev->add_option("--min-node-size", ev_mns, "Forest min_node_size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (*characterize) return cmd_characterize(ch);
    if (*train) return cmd_train(tr);
    if (*tune_cmd) return cmd_tune(tu);
    if (*predict) return cmd_predict(model_path, sel, device);
    if (*rank) return cmd_rank(rmodel, rsel);
    if (*experiment) {
      if (*exp_synth)
        return cmd_exp_synth(synth_common, synth_kernels, synth_devices,
                             synth_sizes, synth_noise, synth_iterations);
      if (*exp_mns)
        return cmd_exp_min_node_scan(mns_common, mns_num_trees, mns_mtry,
                                     mns_range);
      if (*exp_hm)
        return cmd_exp_heatmap(hm_common, hm_nt_range, hm_mtry_range, hm_mns,
                               hm_cooling, hm_steps, hm_max_evals);
      if (*exp_loko)
        return cmd_exp_loko(loko_common, loko_start, loko_nt_range, loko_mns,
                            loko_cooling, loko_steps, loko_max_evals);
      if (*exp_lc)
        return cmd_exp_learning_curve(lc_common, lc_samples, lc_num_trees,
                                      lc_mtry, lc_mns);
      if (*exp_ev)
        return cmd_exp_evaluate(ev_common, ev_num_trees, ev_mtry, ev_mns);
    }
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ExecutionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitExecution;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
