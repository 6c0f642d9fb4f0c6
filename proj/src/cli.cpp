#include "stancebench/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "stancebench/corpus.hpp"
#include "stancebench/error.hpp"
#include "stancebench/orchestrator.hpp"
#include "stancebench/report.hpp"
#include "text_util.hpp"

namespace stancebench {

namespace {

namespace fs = std::filesystem;

struct GlobalFlags {
  std::string config;
  std::string cache;
  std::optional<std::uint64_t> seed;
  bool offline = false;
};

RunConfig load_config(const GlobalFlags& g) {
  if (g.config.empty()) throw CLI::RequiredError("--config");
  RunConfig c = RunConfig::load(g.config);
  if (!g.cache.empty()) c.cache_path = g.cache;
  if (g.seed) c.seed = *g.seed;
  if (g.offline) c.offline = true;
  return c;
}

GatewayOptions gateway_options(const RunConfig& c) {
  GatewayOptions o;
  o.cache_path = c.cache_path;
  o.offline = c.offline;
  return o;
}

void print_summary(std::ostream& out, const RunResult& result) {
  for (const auto& row : result.metrics)
    out << row.key.dataset << '/' << row.key.topic << ' ' << row.key.model << ' ' << row.key.mode
        << " acc=" << detail::percent1(row.report.accuracy) << "% f1=" << detail::percent1(row.report.macro_f1)
        << "% unparsed=" << row.unparsed << '\n';
  out << "cache hits " << result.provenance.cache_hits << ", backend calls " << result.provenance.backend_calls
      << ", failures " << result.failures.size() << '\n';
}

// Loads and samples, records the sample, then queries the models.
RunResult execute(const RunConfig& config, const fs::path& out_dir) {
  auto partitions = prepare_partitions(config);
  std::string sample;
  for (const auto& p : partitions) sample += to_jsonl(p.records);
  detail::write_file(out_dir / "sample.jsonl", sample);

  Gateway gateway(gateway_options(config));
  RunResult result = run_experiment(config, gateway, std::move(partitions));
  write_run(out_dir, result);
  return result;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stance classification benchmark for chat models"};
  app.name("stancebench");
  app.require_subcommand(1);

  GlobalFlags global;
  app.add_option("--config", global.config, "Experiment config (JSON)");
  app.add_option("--cache", global.cache, "Replay cache file, overrides the config");
  app.add_option("--seed", global.seed, "Sampling seed, overrides the config");
  app.add_flag("--offline", global.offline, "Serve every request from the replay cache");
  for (CLI::Option* opt : app.get_options()) opt->configurable(false);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a raw corpus file into JSONL records");
  std::string ingest_dataset, ingest_topic, ingest_input, ingest_out, ingest_stats;
  ingest->add_option("--dataset", ingest_dataset, "ukp or argsme")->required();
  ingest->add_option("--topic", ingest_topic, "UKP topic or Args.me portal")->required();
  ingest->add_option("--input", ingest_input, "Raw TSV/JSON file; defaults to the config entry");
  ingest->add_option("--out", ingest_out, "Write records as JSONL");
  ingest->add_option("--stats", ingest_stats, "Write topic,label,count CSV");

  // sample
  auto* sample = app.add_subcommand("sample", "Draw a stratified sample from JSONL records");
  std::string sample_input, sample_out;
  std::size_t sample_n = 0;
  bool sample_uniform = false;
  sample->add_option("--input", sample_input, "JSONL records")->required();
  sample->add_option("--n", sample_n, "Sample size")->required();
  sample->add_option("--out", sample_out, "JSONL output")->required();
  sample->add_flag("--uniform", sample_uniform, "Uniform instead of stratified sampling");

  // run, ablate, fewshot
  std::string run_out, ablate_out, fewshot_out;
  auto* run = app.add_subcommand("run", "Query every model and score all configured modes");
  run->add_option("--out", run_out, "Run directory")->required();
  auto* ablate_cmd = app.add_subcommand("ablate", "Leave-one-prompt-out ablation of the certainty vote");
  ablate_cmd->add_option("--out", ablate_out, "Run directory")->required();
  auto* fewshot = app.add_subcommand("fewshot", "Three-shot versus zero-shot P1 on UKP topics");
  fewshot->add_option("--out", fewshot_out, "Output directory")->required();

  // report
  auto* report = app.add_subcommand("report", "Render tables from a run directory");
  std::string report_run, report_format = "md", heatmap_mode = "average";
  std::vector<std::string> report_outputs;
  report->add_option("--run", report_run, "Run directory")->required();
  report->add_option("--outputs", report_outputs,
                     "metrics_table, heatmap, prompt_accuracy, error_types, ablation")
      ->delimiter(',');
  report->add_option("--format", report_format, "csv or md");
  report->add_option("--heatmap-mode", heatmap_mode, "average, Certainty, CoT, P1..P4, ...");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*ingest) {
      const auto kind = parse_dataset_kind(ingest_dataset);
      if (!kind) throw CLI::ValidationError("--dataset", "expected ukp or argsme");
      fs::path input = ingest_input;
      if (input.empty()) {
        const RunConfig c = load_config(global);
        auto it = std::find_if(c.partitions.begin(), c.partitions.end(),
                               [&](const PartitionSpec& p) { return p.topic == ingest_topic; });
        if (it == c.partitions.end())
          throw Error(ErrorCode::InvalidConfig, "config has no dataset for topic '" + ingest_topic + "'");
        input = it->path;
      }
      const auto records = *kind == DatasetKind::UKP ? load_ukp(input, ingest_topic) : load_argsme(input, ingest_topic);
      const CorpusStats stats = corpus_stats(records);
      if (!ingest_out.empty()) save_jsonl(ingest_out, records);
      if (!ingest_stats.empty()) detail::write_file(ingest_stats, stats.to_csv());
      const LabelCounts counts = stats.overall();
      out << ingest_topic << ": " << stats.total << " records (For " << counts[0] << ", Against " << counts[1]
          << ", NoArgument " << counts[2] << ")\n";
    } else if (*sample) {
      const auto records = load_jsonl(sample_input);
      const auto drawn = stratified_sample(records, sample_n, global.seed.value_or(0),
                                           sample_uniform ? SamplingMode::Uniform : SamplingMode::Stratified);
      save_jsonl(sample_out, drawn);
      const LabelCounts counts = corpus_stats(drawn).overall();
      out << "sampled " << drawn.size() << " of " << records.size() << " (For " << counts[0] << ", Against "
          << counts[1] << ", NoArgument " << counts[2] << ")\n";
    } else if (*run) {
      print_summary(out, execute(load_config(global), run_out));
      out << "wrote " << run_out << '\n';
    } else if (*ablate_cmd) {
      RunConfig c = load_config(global);
      for (RunMode m : {RunMode::PerPrompt, RunMode::CertaintyVote})
        if (!c.has_mode(m)) c.modes.push_back(m);
      const RunResult result = execute(c, ablate_out);
      const AblationResult ablation = ablate(result);
      detail::write_file(fs::path(ablate_out) / "ablation.csv", ablation.to_csv());
      out << ablation.to_csv();
    } else if (*fewshot) {
      const RunConfig c = load_config(global);
      Gateway gateway(gateway_options(c));
      const FewShotComparison comparison = compare_fewshot(c, gateway);
      detail::write_file(fs::path(fewshot_out) / "fewshot.csv", comparison.to_csv());
      detail::write_file(fs::path(fewshot_out) / "fewshot.md", comparison.to_markdown());
      out << comparison.to_markdown();
    } else if (*report) {
      const auto format = parse_report_format(report_format);
      if (!format) throw CLI::ValidationError("--format", "expected csv or md");
      const LoadedRun loaded = load_run(report_run);
      std::vector<ReportOutput> outputs;
      if (report_outputs.empty()) {
        outputs = {ReportOutput::MetricsTable, ReportOutput::HeatmapMatrix, ReportOutput::PromptAccuracy,
                   ReportOutput::ErrorTypes};
        if (loaded.ablation_csv) outputs.push_back(ReportOutput::AblationTable);
      }
      for (const auto& name : report_outputs) {
        const auto o = parse_report_output(name);
        if (!o) throw CLI::ValidationError("--outputs", "unknown output '" + name + "'");
        outputs.push_back(*o);
      }
      for (const auto& path : write_reports(report_run, loaded, outputs, *format, ReportOptions{heatmap_mode}))
        out << "wrote " << path.string() << '\n';
    }
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return domain_of(e.code()) == ErrorDomain::Gateway ? kExitGateway : kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace stancebench
