#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdpc/refmodel.hpp"

namespace pdpc {

/// Perplexity Difference: 1 - ppl_strong / ppl_weak. Throws ValidationError
/// for non-positive or non-finite inputs.
double compute_pd(double ppl_weak, double ppl_strong);

struct PdRecord {
  std::string doc_id;
  double ppl_weak = 0;
  double ppl_strong = 0;
  double pd = 0;
  bool clamped = false;  // raw PD was negative and was raised to 0
  bool operator==(const PdRecord&) const = default;
};

enum class NegativePolicy { kClampToZero, kDrop };

NegativePolicy negative_policy_from_string(std::string_view s);
std::string_view to_string(NegativePolicy p);

inline constexpr std::array<double, 7> kStatQuantiles = {0.01, 0.10, 0.25, 0.50, 0.75, 0.90, 0.99};

struct PdStats {
  std::size_t count = 0;        // records after the negative-PD policy
  std::size_t input_count = 0;  // records before it
  double mean = 0;
  double stddev = 0;  // population
  std::array<double, kStatQuantiles.size()> quantiles{};
  std::size_t negative_count = 0;  // raw PD < 0, counted before the policy
  double negative_fraction = 0;    // negative_count / input_count
};

/// Linear-interpolation quantile (numpy's default) using selection rather
/// than a full sort. `values` is reordered.
double quantile_select(std::vector<double>& values, double q);

/// Stats over post-policy PD values. negative_count/input_count are taken
/// from the caller.
PdStats compute_stats(std::span<const double> pds, std::size_t input_count, std::size_t negative_count);

struct ScoredDataset {
  std::vector<PdRecord> records;  // sorted by doc_id
  PdStats stats;
};

/// Joins weak and strong perplexities by id. Both inputs must cover the same
/// id set (ValidationError listing up to 10 offenders otherwise); duplicate
/// ids within one input are rejected. Output order is independent of input
/// order.
ScoredDataset score_dataset(std::span<const PplRecord> weak, std::span<const PplRecord> strong,
                            NegativePolicy policy = NegativePolicy::kClampToZero);

struct JoinOptions {
  std::size_t memory_budget = std::size_t{256} << 20;
  std::filesystem::path tmp_dir = std::filesystem::temp_directory_path();
};

/// Streaming variant of score_dataset over two score files: each side is
/// externally sorted by id, merge-joined and written straight to `out_path`
/// as a PD file. Only PD values are held in memory (for the stats).
PdStats score_files(const std::filesystem::path& weak_path, ScoreFormat weak_format,
                    const std::filesystem::path& strong_path, ScoreFormat strong_format,
                    NegativePolicy policy, const std::filesystem::path& out_path, std::string_view lineage,
                    const JoinOptions& options = {});

/// CSV "doc_id,ppl_weak,ppl_strong,pd,flag" with flag in {ok, clamped}.
void save_pd(const std::filesystem::path& path, std::span<const PdRecord> records, std::string_view lineage);
std::vector<PdRecord> load_pd(const std::filesystem::path& path, std::string* lineage = nullptr);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman between the PD columns of two record sets with identical ids.
double spearman_pd(std::span<const PdRecord> a, std::span<const PdRecord> b);

struct DomainStatsRow {
  std::string domain;
  PdStats stats;
};

inline constexpr std::string_view kOverallDomain = "__overall__";
inline constexpr std::string_view kUnknownDomain = "unknown";

/// One row per domain (sorted by name) plus the overall row last. Records
/// without a domain entry (or with an empty tag) go to "unknown".
std::vector<DomainStatsRow> domain_stats(std::span<const PdRecord> records,
                                         const std::unordered_map<std::string, std::string>& domains);

std::string stats_csv_header();
std::string stats_csv_row(std::string_view label, const PdStats& s);
void save_stats_table(const std::filesystem::path& path, std::span<const DomainStatsRow> rows,
                      std::string_view lineage);

struct HistogramBin {
  double lo = 0;
  double hi = 0;
  std::size_t count = 0;
};

/// Equal-width bins over [min, max] of the PD values; the max lands in the
/// last bin.
std::vector<HistogramBin> pd_histogram(std::span<const PdRecord> records, std::size_t bins);

}  // namespace pdpc
