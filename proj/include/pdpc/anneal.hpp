#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdpc/curve.hpp"
#include "pdpc/partition.hpp"

namespace pdpc {

struct AnnealingGrid {
  std::vector<double> proportions;  // beta values, default 0, 0.1, ..., 1
  double supplement_fraction = 0.30;
  std::vector<double> checkpoints;  // progress values, default 0, 0.125, ..., 1

  static AnnealingGrid defaults();
  void validate() const;
};

/// One annealing dataset: core draws from the low and high parts plus the
/// supplement shared by every set.
struct AnnealingSet {
  double beta = 0;
  std::vector<std::string> low_ids;
  std::vector<std::string> high_ids;
  std::vector<std::string> supplement_ids;

  std::size_t size() const noexcept { return low_ids.size() + high_ids.size() + supplement_ids.size(); }
};

/// For a set of size S: supplement = round(fraction * S) ids drawn without
/// replacement from the whole dataset (one draw reused by every set);
/// core = S - supplement, of which round(beta * core) come from part 0 and the
/// rest from part 1, drawn without replacement and disjoint from the
/// supplement. Needs a 2-part partition.
std::vector<AnnealingSet> build_annealing_sets(const PartitionedDataset& parts, const AnnealingGrid& grid,
                                               std::size_t set_size, std::uint64_t seed);

/// One file per beta in `dir` ("anneal-beta-0.3.txt"): header line, then
/// "low|high|supplement<TAB>id" lines. Returns the written paths.
std::vector<std::filesystem::path> save_annealing_sets(const std::filesystem::path& dir,
                                                       std::span<const AnnealingSet> sets,
                                                       std::string_view lineage);

struct EvalResult {
  double p = 0;
  double beta = 0;
  double metric = 0;  // higher is better
};

/// b = argmax over beta of the metric; ties go to the smaller beta.
PreferencePoint select_preference(std::span<const EvalResult> results);

struct FitResult {
  PchipCurve curve;
  double alpha = 0;  // integral of the fitted curve over [0, 1]
  PartitionSpec spec;  // 2 parts split at alpha
};

FitResult fit_and_correct(std::vector<PreferencePoint> points, const PchipOptions& options = {});

struct EvalRequest {
  std::size_t round = 0;
  const PreferenceCurve* curve = nullptr;  // schedule the checkpoints came from
  const AnnealingGrid* grid = nullptr;
};

using Evaluator = std::function<std::vector<EvalResult>(const EvalRequest&)>;

/// Evaluation results from a CSV "round,p,beta,metric" (header optional);
/// rows of the requested round are returned.
Evaluator results_file_evaluator(std::filesystem::path path);

/// Runs a shell command per round. "{round}", "{curve}" and "{out}" in the
/// template are replaced by the round number, a JSON file holding the current
/// curve and grid, and the CSV path the command must write.
Evaluator command_evaluator(std::string command_template, std::filesystem::path work_dir);

std::vector<EvalResult> read_eval_results(const std::filesystem::path& path, std::optional<std::size_t> round);

struct IterationState {
  std::size_t round = 0;
  PreferenceCurve curve;     // after this round's refit
  PreferenceCurve previous;  // the curve the round started from
  double epsilon = 0.01;
  double deviation = 0;  // L-inf between previous and curve
  double alpha = 0.5;
  std::vector<PreferencePoint> points;
  PartitionSpec spec;
};

struct LoopOptions {
  double epsilon = 0.01;
  std::size_t max_rounds = 5;
  std::size_t deviation_points = 1001;
  AnnealingGrid grid = AnnealingGrid::defaults();
  PchipOptions pchip;
  /// Called at the start of each round with the curve to schedule.
  std::function<void(std::size_t round, const PreferenceCurve&, const PartitionSpec&)> on_schedule;
};

struct LoopResult {
  std::vector<IterationState> history;  // history[0] is the initial state
  bool converged = false;
};

/// Round r >= 1: schedule with the current curve, evaluate every
/// (checkpoint, beta) cell, select preferences, refit and compare against the
/// previous curve. Stops once the deviation drops below epsilon or after
/// max_rounds rounds. Missing cells raise InputError listing them.
LoopResult run_iteration_loop(const PreferenceCurve& initial, const Evaluator& evaluator, const LoopOptions& options);

/// "round,deviation,alpha" CSV; the initial row has an empty deviation.
std::string loop_log_csv(const LoopResult& result);

}  // namespace pdpc
