// pdpc: corpus-to-schedule pipeline driver.
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "pdpc/error.hpp"
#include "pdpc/io.hpp"
#include "pdpc/pipeline.hpp"

namespace {

struct Overrides {
  std::string config = "pdpc.json";
  std::optional<std::string> workdir;
  std::optional<unsigned> workers;
  bool quiet = false;

  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> steps;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> curve;
  std::optional<std::string> metric_file;
  std::optional<std::string> results;
  std::optional<std::string> command;
  std::optional<std::size_t> max_rounds;
  std::optional<double> epsilon;
  std::size_t points = 1001;
  std::optional<std::string> out;
};

pdpc::PreferenceCurve parse_curve_arg(const std::string& arg) {
  // Either inline JSON or a path to a JSON file.
  const std::string text = arg.starts_with("{") ? arg : pdpc::read_file(arg);
  try {
    auto j = nlohmann::json::parse(text);
    if (j.contains("curve") && j["curve"].is_object()) j = j["curve"];
    return pdpc::curve_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw pdpc::InputError(std::string("bad curve: ") + e.what());
  }
}

pdpc::PipelineConfig build_config(const Overrides& o) {
  auto c = pdpc::PipelineConfig::load(o.config);
  if (o.workdir) c.workdir = std::filesystem::absolute(*o.workdir);
  if (o.workers) c.workers = *o.workers;
  bool touched = false;
  if (o.batch_size) c.batch_size = *o.batch_size, touched = true;
  if (o.steps) c.steps = *o.steps, touched = true;
  if (o.mode) c.mode = pdpc::schedule_mode_from_string(*o.mode), touched = true;
  if (o.seed) c.compose_seed = *o.seed, touched = true;
  if (o.curve) c.curve = parse_curve_arg(*o.curve), touched = true;
  if (touched) {
    c.raw["curve"] = pdpc::curve_to_json(c.curve);
    c.raw["composer"] = {{"N", c.batch_size},
                         {"K", c.steps ? nlohmann::json(*c.steps) : nlohmann::json(nullptr)},
                         {"mode", pdpc::to_string(c.mode)},
                         {"seed", c.compose_seed}};
  }
  if (o.metric_file) c.metric_file = std::filesystem::absolute(*o.metric_file);
  if (o.results) c.anneal_results = std::filesystem::absolute(*o.results);
  if (o.command) c.anneal_command = *o.command;
  if (o.max_rounds) c.anneal_max_rounds = *o.max_rounds, c.raw["anneal"]["max_rounds"] = *o.max_rounds;
  if (o.epsilon) c.anneal_epsilon = *o.epsilon, c.raw["anneal"]["epsilon"] = *o.epsilon;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PD-based curriculum schedule builder"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("-c,--config", o.config, "pipeline config (JSON)");
  app.add_option("-w,--workdir", o.workdir, "output directory (overrides config and PDPC_WORKDIR)");
  app.add_option("-j,--workers", o.workers, "worker threads (0 = all cores)");
  app.add_flag("-q,--quiet", o.quiet, "no progress output");

  auto* ingest = app.add_subcommand("ingest", "read the corpus, build the vocabulary and tokenize");
  auto* train = app.add_subcommand("train-rm", "train the weak and strong reference models");
  auto* score = app.add_subcommand("score", "per-document perplexity under both models");
  auto* pd = app.add_subcommand("pd", "join perplexities into PD scores");
  auto* partition = app.add_subcommand("partition", "split the dataset by PD (or an imported metric)");
  partition->add_option("--metric-file", o.metric_file, "CSV doc_id,score used instead of PD");
  auto* plan = app.add_subcommand("schedule-plan", "per-step draw counts (plan.csv)");
  auto* compose = app.add_subcommand("compose", "write the batch manifest");
  auto* verify = app.add_subcommand("verify", "check the manifest against the partition");
  for (auto* sub : {plan, compose, verify}) {
    sub->add_option("-N,--batch-size", o.batch_size, "documents per batch");
    sub->add_option("-K,--steps", o.steps, "total steps");
    sub->add_option("--mode", o.mode, "curriculum|random|sequential_asc|sequential_desc");
    sub->add_option("--seed", o.seed, "composer seed");
    sub->add_option("--curve", o.curve, "curve JSON (inline or file)");
  }
  auto* anneal = app.add_subcommand("anneal", "annealing sets and the curve-fitting loop");
  anneal->add_option("--results", o.results, "evaluation results CSV (round,p,beta,metric)");
  anneal->add_option("--command", o.command, "evaluator command template ({round} {curve} {out})");
  anneal->add_option("--max-rounds", o.max_rounds, "round limit");
  anneal->add_option("--epsilon", o.epsilon, "convergence threshold");
  anneal->add_option("--curve", o.curve, "initial curve JSON (inline or file)");
  auto* stats = app.add_subcommand("stats", "PD histogram, per-domain table, Spearman matrix");
  auto* emit = app.add_subcommand("emit-curve", "write p,f(p) samples of a curve");
  emit->add_option("--curve", o.curve, "curve JSON (inline or file); default: config curve");
  emit->add_option("--points", o.points, "sample count")->check(CLI::Range(2, 10000000));
  emit->add_option("-o,--out", o.out, "output CSV (default: <workdir>/curve.csv)");
  auto* run = app.add_subcommand("run", "ingest through verify");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error[usage]: " << e.what() << '\n';
    return pdpc::exit_code(pdpc::ErrorCategory::kUsage);
  }

  try {
    pdpc::Pipeline pipe(build_config(o), o.quiet ? nullptr : &std::cerr);
    if (*ingest) pipe.ingest();
    else if (*train) pipe.train_rm();
    else if (*score) pipe.score();
    else if (*pd) pipe.pd();
    else if (*partition) pipe.partition();
    else if (*plan) pipe.schedule_plan();
    else if (*compose) pipe.compose();
    else if (*stats) pipe.stats();
    else if (*anneal) {
      if (!pipe.anneal().converged) std::cerr << "warning: anneal loop stopped before converging\n";
    } else if (*emit) {
      std::optional<pdpc::PreferenceCurve> curve;
      if (o.curve) curve = parse_curve_arg(*o.curve);
      std::optional<std::filesystem::path> out;
      if (o.out) out = *o.out;
      pipe.emit_curve(o.points, curve, out);
    } else if (*verify || *run) {
      const auto report = *run ? pipe.run_all() : pipe.verify();
      if (!o.quiet) std::cerr << report.to_text();
      if (!report.passed()) {
        std::cerr << "error[validation]: manifest verification failed\n";
        return pdpc::exit_code(pdpc::ErrorCategory::kValidation);
      }
    }
  } catch (const pdpc::Error& e) {
    std::cerr << "error[" << pdpc::category_name(e.category()) << "]: " << e.what() << '\n';
    return pdpc::exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error[io]: " << e.what() << '\n';
    return pdpc::exit_code(pdpc::ErrorCategory::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return pdpc::exit_code(pdpc::ErrorCategory::kInternal);
  }
  return 0;
}
