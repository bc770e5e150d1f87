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
#include "aiwc/error.hpp"
#include "aiwc/features.hpp"
#include "aiwc/rng.hpp"

namespace aiwc {

enum class ProblemSize { Tiny = 0, Small = 1, Medium = 2, Large = 3 };

inline const char* problem_size_name(ProblemSize s) {
  switch (s) {
    case ProblemSize::Tiny: return "tiny";
    case ProblemSize::Small: return "small";
    case ProblemSize::Medium: return "medium";
    case ProblemSize::Large: return "large";
  }
  return "?";
}

inline ProblemSize parse_problem_size(const std::string& s, int line = 0) {
  if (s == "tiny") return ProblemSize::Tiny;
  if (s == "small") return ProblemSize::Small;
  if (s == "medium") return ProblemSize::Medium;
  if (s == "large") return ProblemSize::Large;
  throw ParseError("unknown problem size '" + s + "'", line);
}

inline const std::vector<ProblemSize>& all_problem_sizes() {
  static const std::vector<ProblemSize> kSizes = {
      ProblemSize::Tiny, ProblemSize::Small, ProblemSize::Medium,
      ProblemSize::Large};
  return kSizes;
}

// One characterized kernel invocation. Features are architecture-independent,
// so one feature row serves every device.
struct FeatureRecord {
  std::string application;
  std::string kernel;
  ProblemSize size = ProblemSize::Tiny;
  FeatureVector features;
};

struct RuntimeRecord {
  std::string application;
  std::string kernel;
  ProblemSize size = ProblemSize::Tiny;
  std::string device;
  std::uint64_t iterations = 1;
  double mean_time_s = 0;
};

struct DataRow {
  std::string application;
  std::string kernel;
  ProblemSize size = ProblemSize::Tiny;
  std::string device;
  FeatureVector features;
  double measured_time_s = 0;
};

enum class ResponseTransform { Log10, Raw };

inline const char* response_name(ResponseTransform t) {
  return t == ResponseTransform::Log10 ? "log10" : "raw";
}

inline ResponseTransform parse_response(const std::string& s) {
  if (s == "log10") return ResponseTransform::Log10;
  if (s == "raw") return ResponseTransform::Raw;
  throw ParseError("unknown response transform '" + s + "'");
}

inline double to_response(ResponseTransform t, double seconds) {
  return t == ResponseTransform::Log10 ? std::log10(seconds) : seconds;
}

inline double from_response(ResponseTransform t, double response) {
  return t == ResponseTransform::Log10 ? std::pow(10.0, response) : response;
}

// Joined rows plus the device universe that defines the one-hot predictor
// columns. Rows are kept in canonical order (kernel, size, device,
// application) so that every seeded computation downstream is reproducible
// regardless of input file ordering.
struct Dataset {
  std::vector<DataRow> rows;
  std::vector<std::string> devices;  // sorted unique

  void finalize() {
    std::set<std::string> device_set;
    for (const DataRow& r : rows) {
      if (r.kernel.empty()) throw ParseError("kernel id must be non-empty");
      if (!(r.measured_time_s > 0))
        throw ParseError("measured time must be positive (kernel '" +
                         r.kernel + "')");
      device_set.insert(r.device);
    }
    devices.assign(device_set.begin(), device_set.end());
    std::sort(rows.begin(), rows.end(), [](const DataRow& a, const DataRow& b) {
      return std::tie(a.kernel, a.size, a.device, a.application) <
             std::tie(b.kernel, b.size, b.device, b.application);
    });
  }

  std::size_t predictor_count() const {
    return kFeatureCount + devices.size();
  }

  std::vector<std::string> predictor_names() const {
    std::vector<std::string> names(FeatureVector::names().begin(),
                                   FeatureVector::names().end());
    for (const std::string& d : devices) names.push_back("device=" + d);
    return names;
  }

  int device_index(const std::string& device) const {
    auto it = std::lower_bound(devices.begin(), devices.end(), device);
    if (it == devices.end() || *it != device) return -1;
    return static_cast<int>(it - devices.begin());
  }

  double predictor_value(std::size_t row, std::size_t col) const {
    const DataRow& r = rows[row];
    if (col < kFeatureCount) return r.features.to_array()[col];
    return devices[col - kFeatureCount] == r.device ? 1.0 : 0.0;
  }

  std::vector<double> predictor_row(std::size_t row) const {
    std::vector<double> v(predictor_count());
    const auto f = rows[row].features.to_array();
    std::copy(f.begin(), f.end(), v.begin());
    const int d = device_index(rows[row].device);
    for (std::size_t i = kFeatureCount; i < v.size(); ++i) v[i] = 0.0;
    if (d >= 0) v[kFeatureCount + static_cast<std::size_t>(d)] = 1.0;
    return v;
  }

  std::vector<double> responses(ResponseTransform t) const {
    std::vector<double> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      y[i] = to_response(t, rows[i].measured_time_s);
    return y;
  }

  // sorted unique kernel ids
  std::vector<std::string> kernels() const {
    std::set<std::string> k;
    for (const DataRow& r : rows) k.insert(r.kernel);
    return {k.begin(), k.end()};
  }

  // Row subsets keep the parent's device universe so the predictor schema
  // (and with it, model/schema fingerprints) stays identical across splits.
  template <typename Predicate>
  Dataset subset(Predicate keep) const {
    Dataset d;
    for (const DataRow& r : rows)
      if (keep(r)) d.rows.push_back(r);
    d.devices = devices;
    return d;
  }

  Dataset without_kernel(const std::string& kernel) const {
    return subset([&](const DataRow& r) { return r.kernel != kernel; });
  }
};

inline std::uint64_t schema_fingerprint(
    const std::vector<std::string>& predictor_names, ResponseTransform t) {
  std::string blob;
  for (const std::string& n : predictor_names) {
    blob += n;
    blob += '|';
  }
  blob += "response:";
  blob += response_name(t);
  return fnv1a64(blob);
}

inline std::string fingerprint_hex(std::uint64_t fp) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(fp));
  return buf;
}

// ---- CSV I/O ----

inline std::vector<FeatureRecord> read_feature_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto expected = split_csv_line(feature_csv_header());
  if (t.header != expected)
    throw ParseError("'" + path + "': feature CSV header mismatch", 1);
  std::vector<FeatureRecord> records;
  records.reserve(t.rows.size());
  int line = 1;
  for (const auto& row : t.rows) {
    ++line;
    FeatureRecord r;
    r.application = row[0];
    r.kernel = row[1];
    r.size = parse_problem_size(row[2], line);
    std::array<double, kFeatureCount> a{};
    for (std::size_t i = 0; i < kFeatureCount; ++i)
      a[i] = parse_double(row[3 + i], line);
    r.features = FeatureVector::from_array(a);
    records.push_back(std::move(r));
  }
  return records;
}

inline void write_feature_csv(const std::string& path,
                              const std::vector<FeatureRecord>& records) {
  std::string out = feature_csv_header() + "\n";
  for (const FeatureRecord& r : records)
    out += feature_csv_row(r.application, r.kernel, problem_size_name(r.size),
                           r.features) +
           "\n";
  write_text_file(path, out);
}

inline constexpr std::string_view kRuntimeCsvHeader =
    "application,kernel,size,device,iterations,mean_time_s";

inline std::vector<RuntimeRecord> read_runtime_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header != split_csv_line(std::string(kRuntimeCsvHeader)))
    throw ParseError("'" + path + "': runtime CSV header mismatch", 1);
  std::vector<RuntimeRecord> records;
  records.reserve(t.rows.size());
  int line = 1;
  for (const auto& row : t.rows) {
    ++line;
    RuntimeRecord r;
    r.application = row[0];
    r.kernel = row[1];
    r.size = parse_problem_size(row[2], line);
    r.device = row[3];
    r.iterations = parse_u64(row[4], line);
    r.mean_time_s = parse_double(row[5], line);
    if (r.iterations < 1)
      throw ParseError("iterations must be >= 1", line);
    if (!(r.mean_time_s > 0))
      throw ParseError("mean_time_s must be positive", line);
    records.push_back(std::move(r));
  }
  return records;
}

inline void write_runtime_csv(const std::string& path,
                              const std::vector<RuntimeRecord>& records) {
  std::string out = std::string(kRuntimeCsvHeader) + "\n";
  for (const RuntimeRecord& r : records) {
    out += r.application + "," + r.kernel + "," + problem_size_name(r.size) +
           "," + r.device + "," + std::to_string(r.iterations) + "," +
           fmt9(r.mean_time_s) + "\n";
  }
  write_text_file(path, out);
}

struct JoinReport {
  std::vector<std::string> orphan_features;  // feature keys with no runtimes
  std::vector<std::string> orphan_runtimes;  // runtime keys with no features
};

// Inner join on (application, kernel, size). Rows lacking a partner are
// reported through the JoinReport, never silently dropped.
inline Dataset make_dataset(const std::vector<FeatureRecord>& features,
                            const std::vector<RuntimeRecord>& runtimes,
                            JoinReport* report = nullptr) {
  std::map<std::string, const FeatureRecord*> by_key;
  auto key3 = [](const std::string& a, const std::string& k, ProblemSize s) {
    return a + "|" + k + "|" + problem_size_name(s);
  };
  for (const FeatureRecord& f : features) {
    const std::string key = key3(f.application, f.kernel, f.size);
    if (!by_key.emplace(key, &f).second)
      throw ParseError("duplicate feature key (" + key + ")");
  }

  std::set<std::string> runtime_keys;
  std::set<std::string> matched;
  Dataset dataset;
  for (const RuntimeRecord& r : runtimes) {
    const std::string key = key3(r.application, r.kernel, r.size);
    const std::string full_key = key + "|" + r.device;
    if (!runtime_keys.insert(full_key).second)
      throw ParseError("duplicate runtime key (" + full_key + ")");
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      if (report) report->orphan_runtimes.push_back(full_key);
      continue;
    }
    matched.insert(key);
    dataset.rows.push_back({r.application, r.kernel, r.size, r.device,
                            it->second->features, r.mean_time_s});
  }
  if (report) {
    for (const auto& [key, f] : by_key)
      if (!matched.count(key)) report->orphan_features.push_back(key);
  }
  if (dataset.rows.empty())
    throw ParseError("join produced zero rows");
  dataset.finalize();
  return dataset;
}

inline Dataset load_dataset(const std::string& features_csv,
                            const std::string& runtimes_csv,
                            JoinReport* report = nullptr) {
  return make_dataset(read_feature_csv(features_csv),
                      read_runtime_csv(runtimes_csv), report);
}

}  // namespace aiwc
