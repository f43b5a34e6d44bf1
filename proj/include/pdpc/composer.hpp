#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdpc/curve.hpp"
#include "pdpc/partition.hpp"

namespace pdpc {

enum class ScheduleMode { kCurriculum, kRandom, kSequentialAsc, kSequentialDesc };

ScheduleMode schedule_mode_from_string(std::string_view s);
std::string_view to_string(ScheduleMode m);

/// Per-step proportions are quantized to multiples of 2^-32 before
/// apportionment so that cumulative bookkeeping is exact integer arithmetic.
inline constexpr std::uint64_t kProportionScale = std::uint64_t{1} << 32;

/// Low-PD share f(p) as a numerator over kProportionScale.
std::uint64_t quantize_proportion(double f);

struct BatchPlan {
  ScheduleMode mode = ScheduleMode::kCurriculum;
  std::optional<PreferenceCurve> curve;  // curriculum only
  std::size_t batch_size = 0;            // N
  std::size_t steps = 0;                 // K, the progress denominator
  /// Columns of `counts`. Random mode plans over one merged pool.
  std::vector<std::size_t> part_sizes;
  std::vector<std::size_t> batch_sizes;           // per batch; all N except possibly the last
  std::vector<std::vector<std::size_t>> counts;   // [batch][part]
  std::vector<std::vector<double>> targets;       // real-valued alpha_i(p_k) * batch size
  std::vector<bool> constrained;                  // budget clamping changed this batch
  std::optional<std::size_t> first_constrained;   // start of the budget-exhaustion tail

  std::size_t batches() const noexcept { return batch_sizes.size(); }
  /// p_k = k / K, capped at 1 for a trailing partial batch.
  double progress(std::size_t k) const;
};

struct ScheduleSpec {
  ScheduleMode mode = ScheduleMode::kCurriculum;
  PreferenceCurve curve = SShapeCurve{10.0};
};

/// Builds the per-batch draw counts.
///
/// K defaults to floor(total / N); a trailing partial batch (progress 1)
/// takes the remainder. An explicit K must be floor(total / N) or
/// ceil(total / N) (in the latter case the partial batch is step K-1).
///
/// Curriculum mode (1 or 2 parts) targets f(p_k) * b_k low-PD draws per
/// batch. Counts are the largest-remainder rounding of the cumulative
/// targets, so each batch is within 1 of its target and rounding error never
/// accumulates. A part's cumulative count never exceeds its size; a shortfall
/// is reassigned to the part with the most remaining budget (lowest index on
/// ties). Every part is exhausted exactly at the end.
BatchPlan plan_batches(std::span<const std::size_t> part_sizes, std::size_t batch_size,
                       std::optional<std::size_t> steps, const ScheduleSpec& spec);

struct ManifestHeader {
  int version = 1;
  std::uint64_t seed = 0;
  ScheduleMode mode = ScheduleMode::kCurriculum;
  std::optional<PreferenceCurve> curve;
  std::size_t steps = 0;
  std::size_t batch_size = 0;
  std::vector<std::size_t> part_sizes;  // partition part sizes
  std::size_t total = 0;
  std::size_t batches = 0;
  std::string lineage;            // this manifest's config hash
  std::string partition_lineage;  // partition it was composed from
};

struct Manifest {
  ManifestHeader header;
  std::vector<std::vector<std::string>> batches;
};

/// Draws ids per plan. Curriculum: every part is shuffled once with a seed
/// derived from (seed, part index) and consumed in order; each batch is then
/// shuffled with a seed derived from (seed, batch index). Random: one seeded
/// permutation of all ids, chunked. Sequential: ascending score order (or its
/// reverse), no shuffling.
Manifest compose(const BatchPlan& plan, const PartitionedDataset& parts, std::uint64_t seed);

/// Header JSON on the first line, then "step id id ..." per batch.
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);
std::string serialize_manifest(const Manifest& manifest);
/// Throws InputError with a line number on truncation or corruption.
Manifest load_manifest(const std::filesystem::path& path);

struct StepCheck {
  std::size_t step = 0;
  double progress = 0;
  std::size_t batch_size = 0;
  std::size_t low_count = 0;  // ids drawn from part 0
  double target = 0;          // f(p_k) * batch size (curriculum only, else NaN)
  double deviation = 0;       // low_count - target
  std::size_t cum_low = 0;
  double cum_target = 0;
  double cum_low_share = 0;     // cum_low / (N * K)
  double integral_share = 0;    // integral of f over [0, (k+1)/K]
  bool in_tail = false;         // inside the budget-exhaustion tail
  std::size_t tokens = 0;       // total tokens in the batch, when lengths are known
};

struct VerificationReport {
  bool multiset_ok = false;
  std::vector<std::string> missing_ids;
  std::vector<std::string> duplicate_ids;
  std::vector<std::string> unknown_ids;
  bool batch_sizes_ok = false;
  bool plan_ok = false;  // per-part counts equal a fresh plan from the header
  std::optional<std::size_t> plan_mismatch_step;
  std::vector<StepCheck> steps;
  double max_step_deviation = 0;        // outside the tail
  double max_cumulative_deviation = 0;  // outside the tail
  double max_share_gap = 0;             // |cum_low_share - integral_share|

  bool passed() const noexcept { return multiset_ok && batch_sizes_ok && plan_ok; }
  std::string to_text() const;
  std::string steps_csv() const;
};

/// Checks a manifest against the partition it claims to come from. Never
/// throws for content problems; they are report entries.
VerificationReport verify_manifest(const Manifest& manifest, const PartitionedDataset& parts,
                                   const std::unordered_map<std::string, std::size_t>* token_lengths = nullptr);

}  // namespace pdpc
