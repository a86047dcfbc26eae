#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "veritas/error.hpp"

namespace {

using namespace veritas::cli;

template <class T>
std::optional<T> given(const CLI::Option* opt, const T& value) {
  return opt->count() > 0 ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veritas: multimodal deception-detection experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "pipeline TOML file")->required()->check(CLI::ExistingFile);
  };
  int workers = 0;

  auto* extract = app.add_subcommand("extract", "extract and cache per-video features");
  add_config(extract);
  auto* extract_workers = extract->add_option("--workers", workers, "worker threads (0: all cores)");

  auto* run = app.add_subcommand("run", "run the cross-validated experiment and write reports");
  add_config(run);
  std::vector<std::string> modalities, subset, classifiers;
  std::string expressions, aggregation, fold_plan, output;
  std::uint64_t seed = 0;
  int folds = 0;
  auto* o_mod = run->add_option("--modalities", modalities, "motion, transcript, audio, expression")->delimiter(',');
  auto* o_expr = run->add_option("--expressions", expressions, "predicted | ground-truth");
  auto* o_sub = run->add_option("--expression-subset", subset, "expressions kept in the pooled feature")->delimiter(',');
  auto* o_cls = run->add_option("--classifiers", classifiers, "classifier kinds to evaluate")->delimiter(',');
  auto* o_seed = run->add_option("--seed", seed, "experiment seed");
  auto* o_folds = run->add_option("--folds", folds, "number of identity-grouped folds");
  auto* o_plan = run->add_option("--fold-plan", fold_plan, "explicit fold plan JSON")->check(CLI::ExistingFile);
  auto* o_workers = run->add_option("--workers", workers, "worker threads (0: all cores)");
  auto* o_out = run->add_option("--output", output, "output directory");
  auto* o_agg = run->add_option("--aggregation", aggregation, "pooled | fold-mean");

  auto* report = app.add_subcommand("report", "render a saved report");
  std::string report_path, csv_path;
  report->add_option("report", report_path, "report.json written by run")->required();
  auto* o_csv = report->add_option("--csv", csv_path, "also write per-modality bar data here");

  auto* validate = app.add_subcommand("validate", "lint a config and its manifest");
  add_config(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto logger = spdlog::stderr_color_mt("veritas");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*report) {
      std::cout << cmd_report(report_path, given(o_csv, std::filesystem::path(csv_path)));
      return kExitOk;
    }
    auto config = load_pipeline_config(config_path);
    if (*extract) {
      if (extract_workers->count()) config.workers = workers;
      const auto s = cmd_extract(config);
      std::cout << s.videos << " videos: " << s.computed << " artifacts computed, " << s.cache_hits
                << " cache hits\n";
      return kExitOk;
    }
    if (*run) {
      RunOverrides o;
      o.modalities = given(o_mod, modalities);
      o.expressions = given(o_expr, expressions);
      o.expression_subset = given(o_sub, subset);
      o.classifiers = given(o_cls, classifiers);
      o.seed = given(o_seed, seed);
      o.folds = given(o_folds, folds);
      o.fold_plan = given(o_plan, std::filesystem::path(fold_plan));
      o.workers = given(o_workers, workers);
      o.output_dir = given(o_out, std::filesystem::path(output));
      o.aggregation = given(o_agg, aggregation);
      apply_overrides(config, o);
      const auto r = cmd_run(config);
      std::cout << cmd_report(r.json_path);
      return kExitOk;
    }
    if (*validate) {
      const auto s = cmd_validate(config);
      std::cout << s.videos << " videos, " << s.identities << " identities (" << s.positives << " deceptive, "
                << s.negatives << " truthful)\n";
      for (const auto& p : s.problems) std::cout << "problem: " << p << '\n';
      return s.problems.empty() ? kExitOk : kExitData;
    }
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    spdlog::error("{}", e.what());
    return code;
  }
  return kExitUsage;
}
