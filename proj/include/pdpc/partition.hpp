#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdpc/pdscore.hpp"

namespace pdpc {

/// How to cut the PD-sorted dataset. With no explicit quantiles the cuts are
/// at i/n. Quantiles must be strictly increasing within [0, 1]; 0 or 1 yield
/// an empty first or last part (used when a fitted curve's integral is 0 or 1).
struct PartitionSpec {
  std::size_t n = 2;
  std::vector<double> split_quantiles;

  void validate() const;
  /// Part boundaries for a dataset of `total` records: n+1 indices, first 0,
  /// last `total`. Each cut is floor(q * total); the last part takes the rest.
  std::vector<std::size_t> boundaries(std::size_t total) const;
};

/// A scalar-scored document. PD is the usual score; any per-sample metric can
/// stand in (an imported PPL or quality rating) for baseline orderings.
struct ScoredId {
  std::string doc_id;
  double score = 0;
};

struct Part {
  std::vector<ScoredId> members;  // ascending (score, doc_id)
  std::optional<double> score_min;
  std::optional<double> score_max;

  std::size_t size() const noexcept { return members.size(); }
};

struct PartitionedDataset {
  PartitionSpec spec;
  std::vector<Part> parts;

  std::vector<std::size_t> sizes() const;
  std::size_t total() const;
  /// All ids in ascending score order (concatenation of the parts).
  std::vector<std::string> sorted_ids() const;
};

/// Sorts ascending by (score, doc_id) and cuts at the spec's boundaries.
/// Throws ValidationError on empty input, invalid spec or duplicate ids.
PartitionedDataset partition_by_score(std::vector<ScoredId> records, const PartitionSpec& spec);
PartitionedDataset partition_by_pd(std::span<const PdRecord> records, const PartitionSpec& spec);

/// First line: JSON header (format, version, lineage, n, split quantiles,
/// per-part size and score range). Then one "part<TAB>doc_id<TAB>score"
/// line per record in part order.
void save_partition(const std::filesystem::path& path, const PartitionedDataset& data, std::string_view lineage);
PartitionedDataset load_partition(const std::filesystem::path& path, std::string* lineage = nullptr);

}  // namespace pdpc
