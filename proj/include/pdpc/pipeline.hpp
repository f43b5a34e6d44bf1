#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdpc/anneal.hpp"
#include "pdpc/composer.hpp"
#include "pdpc/curve.hpp"
#include "pdpc/partition.hpp"
#include "pdpc/pdscore.hpp"
#include "pdpc/refmodel.hpp"

namespace pdpc {

/// Parsed pipeline configuration. See README for the JSON schema. Relative
/// paths resolve against the config file's directory.
struct PipelineConfig {
  std::vector<std::filesystem::path> corpus;
  std::filesystem::path workdir = "work";
  unsigned workers = 0;  // 0: hardware concurrency

  std::size_t min_count = 2;

  NgramConfig weak{2, {}, 0.1};
  NgramConfig strong{4, {}, 0.1};
  double rm_subset_fraction = 0.5;
  std::uint64_t rm_seed = 1;

  NegativePolicy negative_policy = NegativePolicy::kClampToZero;
  std::size_t memory_budget = std::size_t{256} << 20;
  std::optional<std::filesystem::path> weak_scores;    // imported instead of `score`
  std::optional<std::filesystem::path> strong_scores;

  PartitionSpec partition;
  std::optional<std::filesystem::path> metric_file;  // "doc_id,score" in place of PD

  PreferenceCurve curve = SShapeCurve{10.0};
  std::size_t batch_size = 64;
  std::optional<std::size_t> steps;
  ScheduleMode mode = ScheduleMode::kCurriculum;
  std::uint64_t compose_seed = 1;

  std::size_t anneal_set_size = 1000;
  std::uint64_t anneal_seed = 1;
  AnnealingGrid anneal_grid = AnnealingGrid::defaults();
  double anneal_epsilon = 0.01;
  std::size_t anneal_max_rounds = 5;
  bool anneal_enforce_non_increasing = false;
  std::optional<std::filesystem::path> anneal_results;
  std::optional<std::string> anneal_command;

  std::size_t stats_bins = 50;
  std::vector<std::filesystem::path> stats_compare;  // extra PD files for the Spearman matrix

  nlohmann::json raw;  // normalized sections, hashed into lineages

  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  /// Reads the file and applies PDPC_WORKDIR / PDPC_WORKERS overrides.
  static PipelineConfig load(const std::filesystem::path& path);
};

/// Generic per-document scalar metric: CSV "doc_id,<name>" (header optional).
std::vector<ScoredId> read_metric_file(const std::filesystem::path& path);

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, std::ostream* log = nullptr);

  const PipelineConfig& config() const noexcept { return config_; }
  std::filesystem::path artifact(std::string_view name) const { return config_.workdir / name; }

  void ingest();
  void train_rm();
  void score();
  void pd();
  void partition();
  BatchPlan schedule_plan();
  Manifest compose();
  /// Throws LineageError when the manifest, partition and config disagree.
  VerificationReport verify();
  LoopResult anneal();
  void stats();
  /// Writes "p,f" rows for the configured curve (or `curve`) to `out`.
  void emit_curve(std::size_t points, const std::optional<PreferenceCurve>& curve,
                  const std::optional<std::filesystem::path>& out);
  /// ingest through verify.
  VerificationReport run_all();

 private:
  void note(const std::string& line) const;
  unsigned workers() const;
  std::filesystem::path require(std::string_view name, std::string_view producer) const;
  std::string read_lineage(const std::filesystem::path& path) const;
  std::string lineage(std::string_view stage, std::initializer_list<std::string_view> parts) const;
  std::string section(std::string_view key) const;
  std::string partition_source_lineage() const;
  std::string compose_lineage(const std::string& partition_lineage) const;

  PipelineConfig config_;
  std::ostream* log_;
};

}  // namespace pdpc
