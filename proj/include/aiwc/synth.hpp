#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "aiwc/csv.hpp"
#include "aiwc/dataset.hpp"
#include "aiwc/error.hpp"
#include "aiwc/features.hpp"
#include "aiwc/rng.hpp"

namespace aiwc {

// Checks every structural invariant a feature vector must satisfy; returns a
// description of the first violation, or empty when clean. Shared by the
// fuzz suites and the synthetic-data checks.
inline std::string feature_invariant_violation(const FeatureVector& f) {
  auto bad = [](const std::string& m) { return m; };
  for (double v : f.to_array())
    if (!std::isfinite(v)) return bad("non-finite feature value");
  if (f.min_itb > f.median_itb || f.median_itb > f.max_itb)
    return bad("itb ordering violated");
  if (f.ninety_memory_footprint > f.total_memory_footprint)
    return bad("ninety_memory_footprint exceeds total_memory_footprint");
  if (f.ninety_branch_instructions > f.total_unique_branch_instructions)
    return bad("ninety_branch_instructions exceeds unique branches");
  for (std::size_t i = 1; i < kLocalEntropyLevels; ++i)
    if (f.local_memory_address_entropy[i] >
        f.local_memory_address_entropy[i - 1] + 1e-9)
      return bad("local memory address entropy not non-increasing");
  if (f.global_memory_address_entropy < -1e-12)
    return bad("negative global memory address entropy");
  if (f.total_memory_footprint > 0 &&
      f.global_memory_address_entropy >
          std::log2(f.total_memory_footprint) + 1e-9)
    return bad("global memory address entropy exceeds log2(footprint)");
  if (f.mean_simd_width > f.max_simd_width + 1e-9)
    return bad("mean_simd_width exceeds max_simd_width");
  if (f.sd_simd_width < 0) return bad("negative sd_simd_width");
  if (f.average_linear_branch_entropy < -1e-12 ||
      f.average_linear_branch_entropy > 1.0 + 1e-12)
    return bad("average_linear_branch_entropy outside [0,1]");
  return {};
}

struct SynthConfig {
  std::uint64_t kernel_count = 37;
  std::uint64_t device_count = 15;
  std::vector<ProblemSize> sizes = all_problem_sizes();
  double noise = 0.02;  // lognormal sigma in decades; 0 = exact latent times
  std::uint64_t iterations = 50;
  std::uint64_t seed = 1;

  void validate() const {
    if (kernel_count < 1 || device_count < 1 || sizes.empty())
      throw ExecutionError("synth config counts must be >= 1");
    if (noise < 0) throw ExecutionError("synth noise must be >= 0");
  }
};

// Ground truth behind the synthetic runtimes:
//
//   time(f, device, size) = size_base(size) * device_factor(device) * g(f)
//                           * (1 + branch_affinity(device) * f.avg_linear
//                              + simd_affinity(device) * f.mean_simd/16)
//                           * 10^(noise * z)
//
// with g a fixed function of five features (instruction count, global memory
// address entropy, average linear branch entropy, mean SIMD width, memory
// footprint). Persisted to JSON so experiments can audit predictions against
// the truth.
struct LatentModel {
  std::vector<std::string> devices;
  std::vector<double> device_factor;
  std::vector<double> branch_affinity;
  std::vector<double> simd_affinity;
  std::array<double, 4> size_base{};  // indexed by ProblemSize
  double noise = 0;
  std::uint64_t seed = 0;

  static double g(const FeatureVector& f) {
    return std::pow(f.total_instruction_count / 4e6, 0.72) *
           (1.0 + 0.22 * f.global_memory_address_entropy) *
           (1.0 + 0.9 * f.average_linear_branch_entropy) *
           std::pow(std::max(f.mean_simd_width, 1.0), -0.45) *
           (1.0 + 0.15 * std::log10(1.0 + f.total_memory_footprint));
  }

  // noise_z is a standard normal draw; pass 0 for the noiseless latent time
  double time_for(const FeatureVector& f, std::size_t device_idx,
                  ProblemSize size, double noise_z) const {
    const double interact =
        1.0 + branch_affinity[device_idx] * f.average_linear_branch_entropy +
        simd_affinity[device_idx] * (f.mean_simd_width / 16.0);
    return size_base[static_cast<std::size_t>(size)] *
           device_factor[device_idx] * g(f) * interact *
           std::pow(10.0, noise * noise_z);
  }
};

struct SynthResult {
  std::vector<FeatureRecord> features;
  std::vector<RuntimeRecord> runtimes;
  LatentModel latent;
};

namespace detail {

// quantize to the 9-significant-digit CSV representation so that written
// files round-trip exactly
inline double quant9(double x) { return std::strtod(fmt9(x).c_str(), nullptr); }

inline std::string two_digits(std::uint64_t n) {
  std::string s = std::to_string(n);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace detail

inline SynthResult synthesize(const SynthConfig& config) {
  config.validate();
  SynthResult out;

  LatentModel& latent = out.latent;
  latent.noise = config.noise;
  latent.seed = config.seed;
  latent.size_base = {2.0e-3, 2.4e-3, 2.9e-3, 3.5e-3};
  for (std::uint64_t d = 0; d < config.device_count; ++d) {
    Rng dr(derive_seed(config.seed, "device", d));
    latent.devices.push_back("dev" + detail::two_digits(d));
    latent.device_factor.push_back(detail::quant9(
        std::pow(10.0, -0.9 + 0.13 * static_cast<double>(d) +
                           dr.uniform(-0.015, 0.015))));
    latent.branch_affinity.push_back(detail::quant9(dr.uniform(-0.25, 0.25)));
    latent.simd_affinity.push_back(detail::quant9(dr.uniform(-0.18, 0.18)));
  }

  for (std::uint64_t k = 0; k < config.kernel_count; ++k) {
    Rng kr(derive_seed(config.seed, "kernel", k));
    const std::string kernel = "kern" + detail::two_digits(k);
    const std::string application =
        "app" + detail::two_digits(k % 11);

    const double base_instr =
        std::pow(10.0, kr.uniform(std::log10(3e3), std::log10(3e5)));
    const std::int64_t opdiv = kr.bounded(2, 8);
    const double mem_frac = kr.uniform(0.05, 0.35);
    const double uniq_frac = kr.uniform(0.02, 0.8);
    const double locality = kr.uniform(0.45, 0.98);
    const double lmae_slope = kr.uniform(0.04, 0.10);
    const std::int64_t phases =
        kr.uniform() < 0.45 ? 0 : kr.bounded(std::int64_t{1}, std::int64_t{6});
    static const double kSimdChoices[5] = {1, 2, 4, 8, 16};
    const double simd_max = kSimdChoices[kr.bounded(std::uint64_t{5})];
    const bool branchy = kr.uniform() >= 0.2;
    const std::int64_t branch_sites =
        branchy ? kr.bounded(std::int64_t{2}, std::int64_t{40}) : 0;
    const double yokota_base = kr.uniform(0.05, 0.95);
    const double wi_base = std::pow(2.0, kr.bounded(std::int64_t{6}, std::int64_t{10}));

    for (std::size_t si = 0; si < config.sizes.size(); ++si) {
      const ProblemSize size = config.sizes[si];
      const auto size_idx = static_cast<std::uint64_t>(size);
      Rng sr(derive_seed(config.seed, "ks", k * 8 + size_idx));

      const double instr_mult = std::pow(8.0, static_cast<double>(size_idx));
      const double wi_mult = std::pow(4.0, static_cast<double>(size_idx));

      FeatureVector f;
      f.total_instruction_count = std::round(
          base_instr * instr_mult * std::pow(10.0, sr.uniform(-0.05, 0.05)));
      f.work_items = std::min(std::round(wi_base * wi_mult),
                              f.total_instruction_count);
      f.opcode_diversity_90 = static_cast<double>(opdiv);

      const double ipw = f.total_instruction_count / f.work_items;
      if (phases == 0) {
        f.total_barriers_hit = 0;
        f.min_itb = f.max_itb = f.median_itb = std::round(ipw);
      } else {
        f.total_barriers_hit =
            f.work_items * static_cast<double>(phases);
        const double med = ipw / static_cast<double>(phases + 1);
        f.median_itb = std::round(med * 2.0) / 2.0;
        f.min_itb =
            std::min(std::floor(med * sr.uniform(0.5, 0.95)), f.median_itb);
        f.max_itb =
            std::max(std::ceil(med * sr.uniform(1.05, 2.0)), f.median_itb);
      }

      f.max_simd_width = simd_max;
      if (simd_max <= 1.0) {
        f.mean_simd_width = 1.0;
        f.sd_simd_width = 0.0;
      } else {
        f.mean_simd_width =
            detail::quant9(sr.uniform(1.0 + 0.3 * (simd_max - 1.0), simd_max));
        // Bhatia-Davis bound keeps the sd feasible for a [1, max] support
        const double sd_cap = std::sqrt((simd_max - f.mean_simd_width) *
                                        (f.mean_simd_width - 1.0));
        f.sd_simd_width = detail::quant9(sr.uniform(0.0, sd_cap));
      }

      const double accesses = f.total_instruction_count * mem_frac;
      f.total_memory_footprint = std::max(1.0, std::round(accesses * uniq_frac));
      f.ninety_memory_footprint = std::max(
          1.0, std::round(f.total_memory_footprint * sr.uniform(0.2, 0.9)));
      f.global_memory_address_entropy = detail::quant9(
          locality * std::log2(std::max(f.total_memory_footprint, 1.0)));
      if (f.total_memory_footprint <= 1.0)
        f.global_memory_address_entropy = 0.0;
      for (std::size_t lvl = 0; lvl < kLocalEntropyLevels; ++lvl)
        f.local_memory_address_entropy[lvl] = detail::quant9(
            f.global_memory_address_entropy *
            std::max(0.0, 1.0 - lmae_slope * static_cast<double>(lvl + 1)));

      if (branch_sites == 0) {
        f.total_unique_branch_instructions = 0;
        f.ninety_branch_instructions = 0;
        f.yokota_branch_entropy = 0;
        f.average_linear_branch_entropy = 0;
      } else {
        f.total_unique_branch_instructions =
            static_cast<double>(branch_sites);
        f.ninety_branch_instructions = std::max(
            1.0, std::round(static_cast<double>(branch_sites) *
                            sr.uniform(0.3, 0.95)));
        const double yok = std::clamp(
            yokota_base + sr.uniform(-0.05, 0.05), 0.0, 1.0);
        f.yokota_branch_entropy = detail::quant9(yok);
        f.average_linear_branch_entropy =
            detail::quant9(yok * sr.uniform(0.55, 0.95));
      }

      out.features.push_back({application, kernel, size, f});

      for (std::size_t d = 0; d < latent.devices.size(); ++d) {
        const std::uint64_t row_index =
            (k * config.sizes.size() + si) * latent.devices.size() + d;
        Rng rr(derive_seed(config.seed, "noise", row_index));
        const double z = config.noise > 0 ? rr.normal() : 0.0;
        const double t =
            detail::quant9(latent.time_for(f, d, size, z));
        out.runtimes.push_back({application, kernel, size,
                                latent.devices[d], config.iterations, t});
      }
    }
  }
  return out;
}

// ---- latent model JSON ----

inline void write_latent_json(const std::string& path,
                              const LatentModel& latent) {
  nlohmann::ordered_json j;
  j["format"] = "aiwc-latent";
  j["version"] = 1;
  j["seed"] = latent.seed;
  j["noise"] = latent.noise;
  j["size_base"] = {{"tiny", latent.size_base[0]},
                    {"small", latent.size_base[1]},
                    {"medium", latent.size_base[2]},
                    {"large", latent.size_base[3]}};
  j["devices"] = latent.devices;
  j["device_factor"] = latent.device_factor;
  j["branch_affinity"] = latent.branch_affinity;
  j["simd_affinity"] = latent.simd_affinity;
  j["g"] =
      "(total_instruction_count/4e6)^0.85 * (1 + 0.12*gmae) * "
      "(1 + 0.5*average_linear_branch_entropy) * mean_simd_width^-0.3 * "
      "(1 + 0.08*log10(1 + total_memory_footprint))";
  write_text_file(path, j.dump(2) + "\n");
}

inline LatentModel read_latent_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("latent model: " + std::string(e.what()));
  }
  if (j.value("format", "") != "aiwc-latent" || j.value("version", 0) != 1)
    throw ParseError("latent model: unknown format or version");
  LatentModel latent;
  latent.seed = j["seed"].get<std::uint64_t>();
  latent.noise = j["noise"].get<double>();
  latent.size_base = {j["size_base"]["tiny"].get<double>(),
                      j["size_base"]["small"].get<double>(),
                      j["size_base"]["medium"].get<double>(),
                      j["size_base"]["large"].get<double>()};
  latent.devices = j["devices"].get<std::vector<std::string>>();
  latent.device_factor = j["device_factor"].get<std::vector<double>>();
  latent.branch_affinity = j["branch_affinity"].get<std::vector<double>>();
  latent.simd_affinity = j["simd_affinity"].get<std::vector<double>>();
  return latent;
}

}  // namespace aiwc
