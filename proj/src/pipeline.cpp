#include "pdpc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <unordered_map>

#include "pdpc/corpus.hpp"
#include "pdpc/error.hpp"
#include "pdpc/io.hpp"
#include "pdpc/parallel.hpp"
#include "pdpc/random.hpp"

namespace pdpc {
namespace {

using json = nlohmann::json;

constexpr std::string_view kVocab = "vocab.tsv";
constexpr std::string_view kTokens = "tokens.tsv";
constexpr std::string_view kDomains = "domains.tsv";
constexpr std::string_view kIngestStats = "ingest-stats.json";
constexpr std::string_view kWeakModel = "rm-weak.model";
constexpr std::string_view kStrongModel = "rm-strong.model";
constexpr std::string_view kWeakPpl = "ppl-weak.csv";
constexpr std::string_view kStrongPpl = "ppl-strong.csv";
constexpr std::string_view kPd = "pd.csv";
constexpr std::string_view kPdStats = "pd-stats.json";
constexpr std::string_view kPartition = "partition.tsv";
constexpr std::string_view kPlan = "plan.csv";
constexpr std::string_view kManifest = "manifest.txt";
constexpr std::string_view kReport = "verify-report.txt";
constexpr std::string_view kReportSteps = "verify-steps.csv";
constexpr std::string_view kCurve = "curve.csv";

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::optional<std::filesystem::path> optional_path(const json& j, const char* key,
                                                   const std::filesystem::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return resolve(base, j[key].get<std::string>());
}

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError("config section " + std::string(section) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError("unknown config key " + std::string(section) + (section.empty() ? "" : ".") + key);
  }
}

NgramConfig ngram_from_json(const json& j, int default_order, std::string_view section) {
  check_keys(j, section, {"order", "weights", "k_add"});
  NgramConfig c;
  c.order = j.value("order", default_order);
  c.weights = j.value("weights", std::vector<double>{});
  c.k_add = j.value("k_add", 0.1);
  c.resolved_weights();
  return c;
}

json ngram_to_json(const NgramConfig& c) {
  return {{"order", c.order}, {"weights", c.resolved_weights()}, {"k_add", c.k_add}};
}

std::uint64_t hash_file(const std::filesystem::path& path, std::uint64_t h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a64(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
  }
  return h;
}

std::string with_header(std::string_view kind, std::string_view lineage, const std::string& body) {
  return ArtifactHeader{std::string(kind), 1, std::string(lineage)}.to_line() + '\n' + body;
}

std::string plan_csv(const BatchPlan& plan) {
  std::string out = "step,progress,batch_size";
  for (std::size_t i = 0; i < plan.part_sizes.size(); ++i) out += ",count_" + std::to_string(i);
  for (std::size_t i = 0; i < plan.part_sizes.size(); ++i) out += ",target_" + std::to_string(i);
  out += ",constrained\n";
  for (std::size_t k = 0; k < plan.batches(); ++k) {
    out += std::to_string(k) + ',' + format_double(plan.progress(k)) + ',' + std::to_string(plan.batch_sizes[k]);
    for (auto c : plan.counts[k]) out += ',' + std::to_string(c);
    for (auto t : plan.targets[k]) out += ',' + format_double(t);
    out += plan.constrained[k] ? ",1\n" : ",0\n";
  }
  return out;
}

json stats_to_json(const PdStats& s) {
  json q = json::object();
  for (std::size_t i = 0; i < kStatQuantiles.size(); ++i) q[format_double(kStatQuantiles[i])] = s.quantiles[i];
  return {{"count", s.count},
          {"input_count", s.input_count},
          {"mean", s.mean},
          {"stddev", s.stddev},
          {"quantiles", q},
          {"negative_count", s.negative_count},
          {"negative_fraction", s.negative_fraction}};
}

json curve_state_json(const IterationState& s) {
  json pts = json::array();
  for (const auto& p : s.points) pts.push_back({p.p, p.b});
  return {{"round", s.round},
          {"curve", curve_to_json(s.curve)},
          {"alpha", s.alpha},
          {"split_quantiles", s.spec.split_quantiles},
          {"deviation", s.round ? json(s.deviation) : json(nullptr)},
          {"points", pts}};
}

}  // namespace

// ---------------------------------------------------------------- config

PipelineConfig PipelineConfig::from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  PipelineConfig c;
  try {
    check_keys(j, "", {"corpus", "workdir", "workers", "vocab", "rm", "pd", "partition", "curve", "composer", "anneal",
                       "stats"});
    if (j.contains("corpus")) {
      const auto& corpus = j["corpus"];
      if (corpus.is_string()) {
        c.corpus.push_back(resolve(base, corpus.get<std::string>()));
      } else {
        for (const auto& p : corpus) c.corpus.push_back(resolve(base, p.get<std::string>()));
      }
    }
    c.workdir = resolve(base, j.value("workdir", std::string("work")));
    c.workers = j.value("workers", 0u);

    const json vocab = j.value("vocab", json::object());
    check_keys(vocab, "vocab", {"min_count"});
    c.min_count = vocab.value("min_count", std::size_t{2});

    const json rm = j.value("rm", json::object());
    check_keys(rm, "rm", {"weak", "strong", "subset_fraction", "seed"});
    c.weak = ngram_from_json(rm.value("weak", json::object()), 2, "rm.weak");
    c.strong = ngram_from_json(rm.value("strong", json::object()), 4, "rm.strong");
    c.rm_subset_fraction = rm.value("subset_fraction", 0.5);
    c.rm_seed = rm.value("seed", std::uint64_t{1});
    if (!(c.rm_subset_fraction > 0.0 && c.rm_subset_fraction <= 1.0))
      throw ValidationError("rm.subset_fraction must lie in (0, 1]");

    const json pd = j.value("pd", json::object());
    check_keys(pd, "pd", {"negative_policy", "memory_budget_mb", "weak_scores", "strong_scores"});
    c.negative_policy = negative_policy_from_string(pd.value("negative_policy", std::string("clamp_to_zero")));
    c.memory_budget = pd.value("memory_budget_mb", std::size_t{256}) << 20;
    c.weak_scores = optional_path(pd, "weak_scores", base);
    c.strong_scores = optional_path(pd, "strong_scores", base);
    if (c.weak_scores.has_value() != c.strong_scores.has_value())
      throw ValidationError("pd.weak_scores and pd.strong_scores must be given together");

    const json part = j.value("partition", json::object());
    check_keys(part, "partition", {"n", "split_quantiles", "metric_file"});
    c.partition.n = part.value("n", std::size_t{2});
    c.partition.split_quantiles = part.value("split_quantiles", std::vector<double>{});
    c.partition.validate();
    c.metric_file = optional_path(part, "metric_file", base);

    if (j.contains("curve")) c.curve = curve_from_json(j["curve"]);
    validate(c.curve);

    const json comp = j.value("composer", json::object());
    check_keys(comp, "composer", {"N", "K", "mode", "seed"});
    c.batch_size = comp.value("N", std::size_t{64});
    if (c.batch_size == 0) throw ValidationError("composer.N must be >= 1");
    if (comp.contains("K") && !comp["K"].is_null()) c.steps = comp["K"].get<std::size_t>();
    if (c.steps && *c.steps == 0) throw ValidationError("composer.K must be >= 1");
    c.mode = schedule_mode_from_string(comp.value("mode", std::string("curriculum")));
    c.compose_seed = comp.value("seed", std::uint64_t{1});

    const json an = j.value("anneal", json::object());
    check_keys(an, "anneal", {"set_size", "seed", "proportions", "checkpoints", "supplement_fraction", "epsilon",
                              "max_rounds", "enforce_non_increasing", "results", "command"});
    c.anneal_set_size = an.value("set_size", std::size_t{1000});
    c.anneal_seed = an.value("seed", std::uint64_t{1});
    if (an.contains("proportions")) c.anneal_grid.proportions = an["proportions"].get<std::vector<double>>();
    if (an.contains("checkpoints")) c.anneal_grid.checkpoints = an["checkpoints"].get<std::vector<double>>();
    c.anneal_grid.supplement_fraction = an.value("supplement_fraction", 0.30);
    c.anneal_grid.validate();
    c.anneal_epsilon = an.value("epsilon", 0.01);
    c.anneal_max_rounds = an.value("max_rounds", std::size_t{5});
    c.anneal_enforce_non_increasing = an.value("enforce_non_increasing", false);
    c.anneal_results = optional_path(an, "results", base);
    if (an.contains("command") && !an["command"].is_null()) c.anneal_command = an["command"].get<std::string>();

    const json st = j.value("stats", json::object());
    check_keys(st, "stats", {"bins", "compare"});
    c.stats_bins = st.value("bins", std::size_t{50});
    for (const auto& p : st.value("compare", std::vector<std::string>{})) c.stats_compare.push_back(resolve(base, p));
  } catch (const json::exception& e) {
    throw InputError(std::string("bad config: ") + e.what());
  }

  // Normalized sections; paths are left out so lineages survive relocation.
  c.raw["vocab"] = {{"min_count", c.min_count}};
  c.raw["rm"] = {{"weak", ngram_to_json(c.weak)},
                 {"strong", ngram_to_json(c.strong)},
                 {"subset_fraction", c.rm_subset_fraction},
                 {"seed", c.rm_seed}};
  c.raw["pd"] = {{"negative_policy", to_string(c.negative_policy)}};
  c.raw["partition"] = {{"n", c.partition.n}, {"split_quantiles", c.partition.split_quantiles}};
  c.raw["curve"] = curve_to_json(c.curve);
  c.raw["composer"] = {{"N", c.batch_size},
                       {"K", c.steps ? json(*c.steps) : json(nullptr)},
                       {"mode", to_string(c.mode)},
                       {"seed", c.compose_seed}};
  c.raw["anneal"] = {{"set_size", c.anneal_set_size},
                     {"seed", c.anneal_seed},
                     {"proportions", c.anneal_grid.proportions},
                     {"checkpoints", c.anneal_grid.checkpoints},
                     {"supplement_fraction", c.anneal_grid.supplement_fraction},
                     {"epsilon", c.anneal_epsilon},
                     {"max_rounds", c.anneal_max_rounds},
                     {"enforce_non_increasing", c.anneal_enforce_non_increasing}};
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  auto c = from_json(j, std::filesystem::absolute(path).parent_path());
  if (const char* wd = std::getenv("PDPC_WORKDIR"); wd && *wd) c.workdir = std::filesystem::absolute(wd);
  if (const char* w = std::getenv("PDPC_WORKERS"); w && *w) {
    const auto n = parse_u64(w);
    if (!n) throw ValidationError("PDPC_WORKERS must be a non-negative integer");
    c.workers = static_cast<unsigned>(*n);
  }
  return c;
}

std::vector<ScoredId> read_metric_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("metric file not found: " + path.string());
  LineReader reader(path);
  std::vector<ScoredId> out;
  std::string line;
  bool first = true;
  while (reader.next(line)) {
    if (line.empty() || line.starts_with("# pdpc-")) continue;
    const auto fields = split_csv(line);
    const auto value = fields && fields->size() == 2 ? parse_double(trim((*fields)[1])) : std::nullopt;
    if (first && fields && fields->size() == 2 && !value) {
      first = false;
      continue;
    }
    first = false;
    if (!value || trim((*fields)[0]).empty())
      throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": expected doc_id,score");
    if (!std::isfinite(*value))
      throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": non-finite score");
    out.push_back({std::string(trim((*fields)[0])), *value});
  }
  return out;
}

// ---------------------------------------------------------------- pipeline

Pipeline::Pipeline(PipelineConfig config, std::ostream* log) : config_(std::move(config)), log_(log) {}

void Pipeline::note(const std::string& line) const {
  if (log_) *log_ << line << std::endl;
}

unsigned Pipeline::workers() const { return config_.workers ? config_.workers : default_workers(); }

std::filesystem::path Pipeline::require(std::string_view name, std::string_view producer) const {
  auto path = artifact(name);
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path.string(), std::string(producer));
  return path;
}

std::string Pipeline::read_lineage(const std::filesystem::path& path) const {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) return {};
  const auto h = ArtifactHeader::parse(line);
  return h ? h->lineage : std::string();
}

std::string Pipeline::section(std::string_view key) const { return config_.raw.at(std::string(key)).dump(); }

std::string Pipeline::lineage(std::string_view stage, std::initializer_list<std::string_view> parts) const {
  std::uint64_t h = fnv1a64(stage);
  for (auto p : parts) {
    h = fnv1a64("\x1f", h);
    h = fnv1a64(p, h);
  }
  return hex64(h);
}

std::string Pipeline::partition_source_lineage() const {
  if (config_.metric_file) return hex64(hash_file(*config_.metric_file, fnv1a64("metric")));
  return read_lineage(require(kPd, "pd"));
}

std::string Pipeline::compose_lineage(const std::string& partition_lineage) const {
  return lineage("compose", {partition_lineage, section("curve"), section("composer")});
}

void Pipeline::ingest() {
  if (config_.corpus.empty()) throw ValidationError("config lists no corpus files");
  for (const auto& p : config_.corpus)
    if (!std::filesystem::exists(p)) throw IoError("corpus file not found: " + p.string());
  std::filesystem::create_directories(config_.workdir);

  std::uint64_t h = fnv1a64(section("vocab"));
  for (const auto& p : config_.corpus) h = hash_file(p, h);
  const std::string lin = lineage("ingest", {hex64(h)});

  auto corpus = ingest_corpus(config_.corpus);
  note("[ingest] " + std::to_string(corpus.stats.documents) + " documents, " +
       std::to_string(corpus.stats.total_tokens) + " tokens");
  auto vocab = Vocabulary::build(corpus.docs, config_.min_count);
  const auto tokens = tokenize_corpus(corpus.docs, vocab, workers());
  vocab.save(artifact(kVocab), lin);
  save_tokenized(artifact(kTokens), tokens, lin);

  std::string domains;
  for (const auto& d : corpus.docs) domains += d.id + '\t' + d.domain + '\n';
  write_file(artifact(kDomains), with_header("domains", lin, domains));

  json stats = {{"documents", corpus.stats.documents},
                {"total_chars", corpus.stats.total_chars},
                {"total_tokens", corpus.stats.total_tokens},
                {"vocab_size", vocab.size()},
                {"per_domain", corpus.stats.per_domain},
                {"lineage", lin}};
  write_file(artifact(kIngestStats), stats.dump(2) + '\n');
  note("[ingest] vocabulary of " + std::to_string(vocab.size()) + " entries");
}

void Pipeline::train_rm() {
  const auto tokens_path = require(kTokens, "ingest");
  const auto vocab_path = require(kVocab, "ingest");
  std::string upstream;
  auto docs = load_tokenized(tokens_path, &upstream);
  const auto vocab = Vocabulary::load(vocab_path);

  auto subset_size = static_cast<std::size_t>(std::llround(config_.rm_subset_fraction * static_cast<double>(docs.size())));
  subset_size = std::clamp<std::size_t>(subset_size, 1, docs.size());
  std::vector<std::size_t> idx(docs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(derive_seed(config_.rm_seed, "rm-subset"));
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(subset_size);
  std::sort(idx.begin(), idx.end());
  std::vector<TokenizedDoc> subset;
  subset.reserve(subset_size);
  for (auto i : idx) subset.push_back(std::move(docs[i]));
  note("[train-rm] training on " + std::to_string(subset_size) + " of " + std::to_string(docs.size()) + " documents");

  const std::string rm = section("rm");
  const auto weak = NgramModel::train(subset, vocab.size(), config_.weak);
  weak.save(artifact(kWeakModel), lineage("train-rm:weak", {upstream, rm}));
  const auto strong = NgramModel::train(subset, vocab.size(), config_.strong);
  strong.save(artifact(kStrongModel), lineage("train-rm:strong", {upstream, rm}));
  note("[train-rm] weak order " + std::to_string(weak.order()) + ", strong order " + std::to_string(strong.order()));
}

void Pipeline::score() {
  const auto tokens_path = require(kTokens, "ingest");
  const auto weak_path = require(kWeakModel, "train-rm");
  const auto strong_path = require(kStrongModel, "train-rm");
  std::string tok_lin, weak_lin, strong_lin;
  const auto docs = load_tokenized(tokens_path, &tok_lin);
  const auto weak = NgramModel::load(weak_path, &weak_lin);
  const auto strong = NgramModel::load(strong_path, &strong_lin);
  save_scores(artifact(kWeakPpl), score_corpus(weak, docs, workers()), ScoreFormat::kCsv,
              lineage("score:weak", {tok_lin, weak_lin}));
  save_scores(artifact(kStrongPpl), score_corpus(strong, docs, workers()), ScoreFormat::kCsv,
              lineage("score:strong", {tok_lin, strong_lin}));
  note("[score] scored " + std::to_string(docs.size()) + " documents with both reference models");
}

void Pipeline::pd() {
  std::filesystem::path weak, strong;
  std::string weak_lin, strong_lin;
  if (config_.weak_scores) {
    weak = *config_.weak_scores;
    strong = *config_.strong_scores;
    if (!std::filesystem::exists(weak)) throw IoError("score file not found: " + weak.string());
    if (!std::filesystem::exists(strong)) throw IoError("score file not found: " + strong.string());
    weak_lin = hex64(hash_file(weak, 0));
    strong_lin = hex64(hash_file(strong, 0));
  } else {
    weak = require(kWeakPpl, "score");
    strong = require(kStrongPpl, "score");
    weak_lin = read_lineage(weak);
    strong_lin = read_lineage(strong);
  }
  std::filesystem::create_directories(config_.workdir);
  const auto tmp = artifact("tmp");
  std::filesystem::create_directories(tmp);
  JoinOptions opts{config_.memory_budget, tmp};
  const std::string lin = lineage("pd", {weak_lin, strong_lin, section("pd")});
  const auto stats = score_files(weak, score_format_from_path(weak), strong, score_format_from_path(strong),
                                 config_.negative_policy, artifact(kPd), lin, opts);
  std::filesystem::remove_all(tmp);
  auto j = stats_to_json(stats);
  j["lineage"] = lin;
  write_file(artifact(kPdStats), j.dump(2) + '\n');
  note("[pd] " + std::to_string(stats.count) + " records, mean PD " + format_double(stats.mean) +
       ", negative fraction " + format_double(stats.negative_fraction));
}

void Pipeline::partition() {
  const std::string source = partition_source_lineage();
  std::vector<ScoredId> scored;
  if (config_.metric_file) {
    scored = read_metric_file(*config_.metric_file);
  } else {
    for (auto& r : load_pd(artifact(kPd))) scored.push_back({std::move(r.doc_id), r.pd});
  }
  const auto data = partition_by_score(std::move(scored), config_.partition);
  save_partition(artifact(kPartition), data, lineage("partition", {source, section("partition")}));
  std::string sizes;
  for (auto s : data.sizes()) sizes += (sizes.empty() ? "" : "/") + std::to_string(s);
  note("[partition] part sizes " + sizes);
}

BatchPlan Pipeline::schedule_plan() {
  std::string part_lin;
  const auto data = load_partition(require(kPartition, "partition"), &part_lin);
  const auto sizes = data.sizes();
  const auto plan = plan_batches(sizes, config_.batch_size, config_.steps, ScheduleSpec{config_.mode, config_.curve});
  write_file(artifact(kPlan), with_header("plan", compose_lineage(part_lin), plan_csv(plan)));
  note("[schedule-plan] " + std::to_string(plan.batches()) + " batches over K=" + std::to_string(plan.steps) +
       (plan.first_constrained ? ", budget tail from step " + std::to_string(*plan.first_constrained) : ""));
  return plan;
}

Manifest Pipeline::compose() {
  std::string part_lin;
  const auto data = load_partition(require(kPartition, "partition"), &part_lin);
  const auto plan =
      plan_batches(data.sizes(), config_.batch_size, config_.steps, ScheduleSpec{config_.mode, config_.curve});
  auto manifest = pdpc::compose(plan, data, config_.compose_seed);
  manifest.header.lineage = compose_lineage(part_lin);
  manifest.header.partition_lineage = part_lin;
  save_manifest(artifact(kManifest), manifest);
  note("[compose] " + std::to_string(manifest.batches.size()) + " batches, " + std::to_string(manifest.header.total) +
       " documents, mode " + std::string(to_string(manifest.header.mode)));
  return manifest;
}

VerificationReport Pipeline::verify() {
  const auto manifest_path = require(kManifest, "compose");
  const auto manifest = load_manifest(manifest_path);
  std::string part_lin;
  const auto data = load_partition(require(kPartition, "partition"), &part_lin);
  if (manifest.header.partition_lineage != part_lin)
    throw LineageError("manifest was composed from partition " + manifest.header.partition_lineage +
                       " but the current partition is " + part_lin + "; rerun `compose`");
  const auto expected = compose_lineage(part_lin);
  if (manifest.header.lineage != expected)
    throw LineageError("manifest lineage " + manifest.header.lineage + " does not match the current config (" +
                       expected + "); rerun `compose`");

  std::unordered_map<std::string, std::size_t> lengths;
  const bool have_tokens = std::filesystem::exists(artifact(kTokens));
  if (have_tokens) {
    for (const auto& d : load_tokenized(artifact(kTokens))) lengths.emplace(d.id, d.length());
  }
  auto report = verify_manifest(manifest, data, have_tokens ? &lengths : nullptr);
  write_file(artifact(kReport), report.to_text());
  write_file(artifact(kReportSteps), with_header("verify-steps", manifest.header.lineage, report.steps_csv()));
  note("[verify] " + std::string(report.passed() ? "PASS" : "FAIL"));
  return report;
}

LoopResult Pipeline::anneal() {
  std::string part_lin;
  const auto data = load_partition(require(kPartition, "partition"), &part_lin);
  const auto dir = artifact("anneal");
  std::filesystem::create_directories(dir);
  const std::string lin = lineage("anneal", {part_lin, section("curve"), section("anneal"), section("composer")});

  const auto sets = build_annealing_sets(data, config_.anneal_grid, config_.anneal_set_size, config_.anneal_seed);
  save_annealing_sets(dir / "sets", sets, lin);
  note("[anneal] wrote " + std::to_string(sets.size()) + " annealing sets of " +
       std::to_string(config_.anneal_set_size) + " ids");

  Evaluator evaluator;
  if (config_.anneal_results) {
    evaluator = results_file_evaluator(*config_.anneal_results);
  } else if (config_.anneal_command) {
    evaluator = command_evaluator(*config_.anneal_command, dir);
  } else {
    throw ValidationError("anneal needs anneal.results (CSV) or anneal.command in the config");
  }

  std::vector<ScoredId> scored;
  for (const auto& p : data.parts)
    for (const auto& m : p.members) scored.push_back(m);

  LoopOptions opts;
  opts.epsilon = config_.anneal_epsilon;
  opts.max_rounds = config_.anneal_max_rounds;
  opts.grid = config_.anneal_grid;
  opts.pchip.enforce_non_increasing = config_.anneal_enforce_non_increasing;
  opts.on_schedule = [&](std::size_t round, const PreferenceCurve& curve, const PartitionSpec& spec) {
    const auto parts = partition_by_score(scored, spec);
    const auto plan = plan_batches(parts.sizes(), config_.batch_size, std::nullopt,
                                   ScheduleSpec{ScheduleMode::kCurriculum, curve});
    auto manifest = pdpc::compose(plan, parts, derive_seed(config_.compose_seed, "anneal-round", round));
    manifest.header.lineage = lineage("anneal-round", {lin, std::to_string(round)});
    manifest.header.partition_lineage = part_lin;
    save_manifest(dir / ("round-" + std::to_string(round) + "-manifest.txt"), manifest);
  };
  auto result = run_iteration_loop(config_.curve, evaluator, opts);
  for (const auto& s : result.history)
    write_file(dir / ("curve-round-" + std::to_string(s.round) + ".json"), curve_state_json(s).dump(2) + '\n');
  write_file(dir / "loop-log.csv", with_header("anneal-log", lin, loop_log_csv(result)));
  const auto& last = result.history.back();
  write_file(dir / "fitted-curve.json", curve_state_json(last).dump(2) + '\n');
  note("[anneal] " + std::to_string(result.history.size() - 1) + " rounds, " +
       (result.converged ? "converged" : "not converged") + ", alpha " + format_double(last.alpha));
  return result;
}

void Pipeline::stats() {
  std::string pd_lin;
  const auto records = load_pd(require(kPd, "pd"), &pd_lin);
  const auto dir = artifact("stats");
  std::filesystem::create_directories(dir);
  const std::string lin = lineage("stats", {pd_lin, std::to_string(config_.stats_bins)});

  std::unordered_map<std::string, std::string> domains;
  if (std::filesystem::exists(artifact(kDomains))) {
    LineReader reader(artifact(kDomains));
    std::string line;
    reader.next(line);
    while (reader.next(line)) {
      const auto tab = line.find('\t');
      if (tab != std::string::npos) domains.emplace(line.substr(0, tab), line.substr(tab + 1));
    }
  }
  save_stats_table(dir / "domain-stats.csv", domain_stats(records, domains), lin);

  std::string hist = "bin_lo,bin_hi,count\n";
  for (const auto& b : pd_histogram(records, config_.stats_bins))
    hist += format_double(b.lo) + ',' + format_double(b.hi) + ',' + std::to_string(b.count) + '\n';
  write_file(dir / "pd-histogram.csv", with_header("histogram", lin, hist));

  // Spearman matrix over PPL columns, PD and any extra PD files.
  std::vector<std::string> names = {"ppl_weak", "ppl_strong", "pd"};
  std::vector<std::vector<double>> columns(3);
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < records.size(); ++i) {
    row_of.emplace(records[i].doc_id, i);
    columns[0].push_back(records[i].ppl_weak);
    columns[1].push_back(records[i].ppl_strong);
    columns[2].push_back(records[i].pd);
  }
  for (const auto& path : config_.stats_compare) {
    const auto other = load_pd(path);
    std::vector<double> col(records.size(), std::nan(""));
    for (const auto& r : other) {
      const auto it = row_of.find(r.doc_id);
      if (it != row_of.end()) col[it->second] = r.pd;
    }
    if (std::any_of(col.begin(), col.end(), [](double v) { return std::isnan(v); }))
      throw ValidationError(path.string() + " does not cover every id of " + artifact(kPd).string());
    names.push_back(path.stem().string());
    columns.push_back(std::move(col));
  }
  std::string matrix = "variable";
  for (const auto& n : names) matrix += ',' + csv_field(n);
  matrix += '\n';
  for (std::size_t a = 0; a < names.size(); ++a) {
    matrix += csv_field(names[a]);
    for (std::size_t b = 0; b < names.size(); ++b) {
      double rho;
      try {
        rho = a == b ? 1.0 : spearman(columns[a], columns[b]);
      } catch (const ValidationError&) {
        rho = std::nan("");
      }
      matrix += ',' + format_double(rho);
    }
    matrix += '\n';
  }
  write_file(dir / "spearman.csv", with_header("spearman", lin, matrix));
  note("[stats] wrote " + (dir / "domain-stats.csv").string() + ", pd-histogram.csv, spearman.csv");
}

void Pipeline::emit_curve(std::size_t points, const std::optional<PreferenceCurve>& curve,
                          const std::optional<std::filesystem::path>& out) {
  if (points < 2) throw ValidationError("emit-curve needs at least 2 points");
  const PreferenceCurve& c = curve ? *curve : config_.curve;
  validate(c);
  std::string body = "p,f\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double p = static_cast<double>(i) / static_cast<double>(points - 1);
    body += format_double(p) + ',' + format_double(eval(c, p)) + '\n';
  }
  const auto path = out ? *out : artifact(kCurve);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_file(path, with_header("curve", lineage("curve", {curve_to_json(c).dump()}), body));
  note("[emit-curve] " + describe(c) + " -> " + path.string());
}

VerificationReport Pipeline::run_all() {
  ingest();
  train_rm();
  if (!config_.weak_scores) score();
  if (!config_.metric_file) pd();
  partition();
  schedule_plan();
  compose();
  return verify();
}

}  // namespace pdpc
