#include "pdpc/anneal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_set>

#include <json.hpp>

#include "pdpc/error.hpp"
#include "pdpc/io.hpp"
#include "pdpc/random.hpp"

namespace pdpc {
namespace {

constexpr double kCellTolerance = 1e-9;

std::vector<std::string> draw(std::vector<std::string> pool, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

void check_increasing(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw ValidationError(std::string(what) + " must not be empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw ValidationError(std::string(what) + " must lie in [0, 1]");
    if (i && !(v[i] > v[i - 1])) throw ValidationError(std::string(what) + " must be strictly increasing");
  }
}

std::string cell_name(double p, double beta) {
  return "(p=" + format_double(p) + ", beta=" + format_double(beta) + ")";
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

}  // namespace

AnnealingGrid AnnealingGrid::defaults() {
  AnnealingGrid g;
  for (int i = 0; i <= 10; ++i) g.proportions.push_back(i / 10.0);
  for (int j = 0; j <= 8; ++j) g.checkpoints.push_back(j / 8.0);
  return g;
}

void AnnealingGrid::validate() const {
  check_increasing(proportions, "annealing proportions");
  check_increasing(checkpoints, "annealing checkpoints");
  if (!(supplement_fraction >= 0.0 && supplement_fraction < 1.0))
    throw ValidationError("supplement fraction must lie in [0, 1)");
}

std::vector<AnnealingSet> build_annealing_sets(const PartitionedDataset& parts, const AnnealingGrid& grid,
                                               std::size_t set_size, std::uint64_t seed) {
  grid.validate();
  if (parts.parts.size() != 2) throw ValidationError("annealing sets need a 2-part (low/high PD) partition");
  if (set_size == 0) throw ValidationError("annealing set size must be >= 1");
  const std::size_t supplement =
      static_cast<std::size_t>(std::llround(grid.supplement_fraction * static_cast<double>(set_size)));
  const std::size_t core = set_size - supplement;
  if (supplement > parts.total())
    throw ValidationError("supplement needs " + std::to_string(supplement) + " ids but the dataset has " +
                          std::to_string(parts.total()));

  Rng supplement_rng(derive_seed(seed, "anneal-supplement"));
  const auto shared = draw(parts.sorted_ids(), supplement, supplement_rng);
  const std::unordered_set<std::string> in_supplement(shared.begin(), shared.end());

  std::vector<std::string> pools[2];
  for (int side = 0; side < 2; ++side) {
    for (const auto& m : parts.parts[side].members)
      if (!in_supplement.contains(m.doc_id)) pools[side].push_back(m.doc_id);
  }

  std::vector<AnnealingSet> sets;
  for (std::size_t i = 0; i < grid.proportions.size(); ++i) {
    const double beta = grid.proportions[i];
    const auto low = static_cast<std::size_t>(std::llround(beta * static_cast<double>(core)));
    const std::size_t high = core - low;
    const std::size_t need[2] = {low, high};
    for (int side = 0; side < 2; ++side) {
      if (need[side] > pools[side].size())
        throw ValidationError("beta=" + format_double(beta) + " needs " + std::to_string(need[side]) + " " +
                              (side ? "high" : "low") + "-PD ids but only " + std::to_string(pools[side].size()) +
                              " are available outside the supplement (short by " +
                              std::to_string(need[side] - pools[side].size()) + ")");
    }
    Rng rng(derive_seed(seed, "anneal-set", i));
    AnnealingSet set;
    set.beta = beta;
    set.low_ids = draw(pools[0], low, rng);
    set.high_ids = draw(pools[1], high, rng);
    set.supplement_ids = shared;
    sets.push_back(std::move(set));
  }
  return sets;
}

std::vector<std::filesystem::path> save_annealing_sets(const std::filesystem::path& dir,
                                                       std::span<const AnnealingSet> sets,
                                                       std::string_view lineage) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& set : sets) {
    const auto path = dir / ("anneal-beta-" + format_double(set.beta) + ".txt");
    AtomicFile file(path);
    auto& out = file.stream();
    out << ArtifactHeader{"anneal-set", 1, std::string(lineage)}.to_line() << '\n';
    for (const auto& id : set.low_ids) out << "low\t" << id << '\n';
    for (const auto& id : set.high_ids) out << "high\t" << id << '\n';
    for (const auto& id : set.supplement_ids) out << "supplement\t" << id << '\n';
    file.commit();
    paths.push_back(path);
  }
  return paths;
}

PreferencePoint select_preference(std::span<const EvalResult> results) {
  if (results.empty()) throw ValidationError("no evaluation results to select a preference from");
  std::vector<EvalResult> sorted(results.begin(), results.end());
  for (const auto& r : sorted) {
    if (r.p != sorted.front().p) throw ValidationError("evaluation results span more than one progress value");
    if (!std::isfinite(r.metric)) throw InputError("non-finite metric at " + cell_name(r.p, r.beta));
  }
  std::sort(sorted.begin(), sorted.end(), [](const EvalResult& a, const EvalResult& b) { return a.beta < b.beta; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].beta == sorted[i - 1].beta) throw InputError("duplicate result for " + cell_name(sorted[i].p, sorted[i].beta));
  }
  if (sorted.size() < 2) throw ValidationError("preference selection needs at least 2 distinct proportions");
  const EvalResult* best = &sorted.front();
  for (const auto& r : sorted) {
    if (r.metric > best->metric) best = &r;
  }
  return {best->p, best->beta};
}

FitResult fit_and_correct(std::vector<PreferencePoint> points, const PchipOptions& options) {
  FitResult out;
  out.curve = fit_pchip(std::move(points), options);
  out.alpha = std::clamp(integral(out.curve), 0.0, 1.0);
  out.spec.n = 2;
  out.spec.split_quantiles = {out.alpha};
  return out;
}

std::vector<EvalResult> read_eval_results(const std::filesystem::path& path, std::optional<std::size_t> round) {
  if (!std::filesystem::exists(path)) throw IoError("evaluation results file not found: " + path.string());
  LineReader reader(path);
  std::vector<EvalResult> out;
  std::string line;
  bool first = true;
  while (reader.next(line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (first && t.starts_with("round")) {
      first = false;
      continue;
    }
    first = false;
    const auto fields = split_csv(t);
    auto fail = [&] {
      throw InputError(path.string() + ":" + std::to_string(reader.line_number()) +
                       ": expected round,p,beta,metric");
    };
    if (!fields || fields->size() != 4) fail();
    const auto r = parse_u64(trim((*fields)[0]));
    const auto p = parse_double(trim((*fields)[1]));
    const auto b = parse_double(trim((*fields)[2]));
    const auto m = parse_double(trim((*fields)[3]));
    if (!r || !p || !b || !m) fail();
    if (!std::isfinite(*m))
      throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": non-finite metric");
    if (round && *r != *round) continue;
    out.push_back({*p, *b, *m});
  }
  return out;
}

Evaluator results_file_evaluator(std::filesystem::path path) {
  return [path = std::move(path)](const EvalRequest& req) { return read_eval_results(path, req.round); };
}

Evaluator command_evaluator(std::string command_template, std::filesystem::path work_dir) {
  return [tmpl = std::move(command_template), dir = std::move(work_dir)](const EvalRequest& req) {
    std::filesystem::create_directories(dir);
    const auto curve_path = dir / ("anneal-round-" + std::to_string(req.round) + "-curve.json");
    const auto out_path = dir / ("anneal-round-" + std::to_string(req.round) + "-results.csv");
    nlohmann::json j;
    j["round"] = req.round;
    j["curve"] = curve_to_json(*req.curve);
    j["proportions"] = req.grid->proportions;
    j["checkpoints"] = req.grid->checkpoints;
    j["supplement_fraction"] = req.grid->supplement_fraction;
    write_file(curve_path, j.dump() + '\n');
    std::filesystem::remove(out_path);
    std::string cmd = tmpl;
    replace_all(cmd, "{round}", std::to_string(req.round));
    replace_all(cmd, "{curve}", curve_path.string());
    replace_all(cmd, "{out}", out_path.string());
    const int status = std::system(cmd.c_str());
    if (status != 0) throw IoError("evaluator command failed (status " + std::to_string(status) + "): " + cmd);
    return read_eval_results(out_path, req.round);
  };
}

LoopResult run_iteration_loop(const PreferenceCurve& initial, const Evaluator& evaluator, const LoopOptions& options) {
  if (!(options.epsilon > 0)) throw ValidationError("convergence threshold epsilon must be > 0");
  options.grid.validate();
  validate(initial);
  const auto& grid = options.grid;

  LoopResult result;
  IterationState state;
  state.curve = initial;
  state.previous = initial;
  state.epsilon = options.epsilon;
  state.alpha = std::clamp(integral(initial), 0.0, 1.0);
  state.spec = PartitionSpec{2, {state.alpha}};
  result.history.push_back(state);

  for (std::size_t round = 1; round <= options.max_rounds; ++round) {
    const auto& current = result.history.back();
    if (options.on_schedule) options.on_schedule(round, current.curve, current.spec);
    const auto results = evaluator(EvalRequest{round, &current.curve, &grid});

    std::vector<std::vector<const EvalResult*>> cells(grid.checkpoints.size(),
                                                      std::vector<const EvalResult*>(grid.proportions.size()));
    for (const auto& r : results) {
      std::size_t pj = grid.checkpoints.size(), bi = grid.proportions.size();
      for (std::size_t j = 0; j < grid.checkpoints.size(); ++j)
        if (std::abs(grid.checkpoints[j] - r.p) <= kCellTolerance) pj = j;
      for (std::size_t i = 0; i < grid.proportions.size(); ++i)
        if (std::abs(grid.proportions[i] - r.beta) <= kCellTolerance) bi = i;
      if (pj == grid.checkpoints.size() || bi == grid.proportions.size()) continue;
      if (cells[pj][bi]) throw InputError("round " + std::to_string(round) + ": duplicate result for " + cell_name(r.p, r.beta));
      cells[pj][bi] = &r;
    }
    std::string missing;
    std::size_t missing_count = 0;
    for (std::size_t j = 0; j < grid.checkpoints.size(); ++j) {
      for (std::size_t i = 0; i < grid.proportions.size(); ++i) {
        if (cells[j][i]) continue;
        if (missing_count++ < 20) missing += ' ' + cell_name(grid.checkpoints[j], grid.proportions[i]);
      }
    }
    if (missing_count)
      throw InputError("round " + std::to_string(round) + ": " + std::to_string(missing_count) +
                       " evaluation cells missing:" + missing + (missing_count > 20 ? " ..." : ""));

    std::vector<PreferencePoint> points;
    for (std::size_t j = 0; j < grid.checkpoints.size(); ++j) {
      std::vector<EvalResult> row;
      for (const auto* r : cells[j]) row.push_back({grid.checkpoints[j], r->beta, r->metric});
      auto pt = select_preference(row);
      // Report the grid value, not the evaluator's rendering of it.
      for (std::size_t i = 0; i < grid.proportions.size(); ++i)
        if (cells[j][i]->beta == pt.b) pt.b = grid.proportions[i];
      points.push_back(pt);
    }
    auto fit = fit_and_correct(points, options.pchip);

    IterationState next;
    next.round = round;
    next.previous = current.curve;
    next.curve = fit.curve;
    next.epsilon = options.epsilon;
    next.deviation = max_deviation(next.previous, next.curve, options.deviation_points);
    next.alpha = fit.alpha;
    next.points = std::move(points);
    next.spec = fit.spec;
    result.history.push_back(std::move(next));
    if (result.history.back().deviation < options.epsilon) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::string loop_log_csv(const LoopResult& result) {
  std::string out = "round,deviation,alpha\n";
  for (const auto& s : result.history) {
    out += std::to_string(s.round) + ',' + (s.round ? format_double(s.deviation) : std::string()) + ',' +
           format_double(s.alpha) + '\n';
  }
  return out;
}

}  // namespace pdpc
