#pragma once

// Experiment driver: sample each corpus partition once, render prompts,
// query every model (classification turn plus certainty turn), vote, score
// and persist the whole trail.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stancebench/corpus.hpp"
#include "stancebench/eval_metrics.hpp"
#include "stancebench/model_gateway.hpp"
#include "stancebench/prompt_forge.hpp"
#include "stancebench/voting.hpp"

namespace stancebench {

enum class RunMode { PerPrompt, CertaintyVote, CoT, FewShot, Ensemble };

std::string_view to_string(RunMode mode);
std::optional<RunMode> parse_run_mode(std::string_view text);

/// One corpus partition (a UKP topic or an Args.me portal).
struct PartitionSpec {
  DatasetKind dataset = DatasetKind::UKP;
  std::string topic;
  std::filesystem::path path;
  /// "tsv", "json" or "jsonl"; inferred from the dataset kind when empty.
  std::string format;
};

struct RunConfig {
  std::vector<PartitionSpec> partitions;
  std::filesystem::path topics_path;
  TopicTable topics;
  std::optional<std::size_t> sample_size;
  std::uint64_t seed = 0;
  SamplingMode sampling = SamplingMode::Stratified;
  std::vector<ModelSpec> models;
  std::vector<PromptKind> prompts{kRephrasedPrompts.begin(), kRephrasedPrompts.end()};
  std::vector<RunMode> modes{RunMode::PerPrompt, RunMode::CertaintyVote};
  UnparsedPolicy unparsed = UnparsedPolicy::Error;
  std::optional<double> gamma;
  EnsembleStrategy ensemble_strategy = EnsembleStrategy::Plurality;
  std::filesystem::path cache_path;
  bool offline = false;

  /// Relative paths resolve against `base_dir`. Throws InvalidConfig.
  static RunConfig parse(std::string_view json_text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  /// Canonical form; the config hash is SHA-256 over its dump.
  nlohmann::json to_json() const;
  std::string hash() const;

  bool has_mode(RunMode mode) const;
  /// Throws InvalidConfig.
  void validate() const;
};

struct Partition {
  PartitionSpec spec;
  std::vector<ArgumentRecord> records;
};

/// Loads and samples every partition with the configured size and seed.
std::vector<Partition> prepare_partitions(const RunConfig& config);

struct VoteEntry {
  std::size_t partition = 0;
  std::size_t record = 0;
  std::string model;
  PromptVote vote;
  std::string raw_response;
  Strictness strictness = Strictness::Lenient;
};

struct DecisionEntry {
  std::size_t partition = 0;
  std::size_t record = 0;
  std::string model;  // "ensemble" for the cross-model vote
  RunMode mode = RunMode::CertaintyVote;
  Prediction label;
  std::optional<ModelDecision> decision;  // CertaintyVote only
  std::vector<std::string> members;       // Ensemble only: per-model labels
};

struct MetricsRow {
  MetricsKey key;
  MetricsReport report;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t unparsed = 0;
};

struct ErrorRow {
  MetricsKey key;
  ErrorBreakdown breakdown;
};

struct Failure {
  std::string record_id;
  std::string model;
  std::string kind;
  std::string turn;  // "answer" or "certainty"
  std::string error;
};

struct PartitionError {
  std::string topic;
  std::string mode;
  std::string message;
};

struct RunProvenance {
  std::string config_hash;
  std::size_t cache_hits = 0;
  std::size_t backend_calls = 0;
  std::string started;
  std::string finished;
};

struct RunResult {
  RunConfig config;
  std::vector<Partition> partitions;
  std::vector<VoteEntry> votes;
  std::vector<DecisionEntry> decisions;
  std::vector<MetricsRow> metrics;
  std::vector<ErrorRow> errors;
  std::vector<Failure> failures;
  /// Partition-level problems that skipped one mode, e.g. missing exemplars.
  std::vector<PartitionError> partition_errors;
  RunProvenance provenance;

  const MetricsRow* find_metrics(std::string_view topic, std::string_view model, std::string_view mode) const;
};

/// Per-record gateway failures degrade to Unparsed votes; a cache miss in
/// replay-only mode aborts the run.
RunResult run_experiment(const RunConfig& config, Gateway& gateway);
RunResult run_experiment(const RunConfig& config, Gateway& gateway, std::vector<Partition> partitions);

/// Writes config.json, sample.jsonl, votes.jsonl, decisions.jsonl,
/// metrics.csv, errors.csv, failures.jsonl and provenance.json.
void write_run(const std::filesystem::path& dir, const RunResult& result);

struct AblationRow {
  std::string model;
  std::string dataset;
  std::string topic;
  /// Leave-one-out triples in prompt order, then the full set.
  std::array<double, 5> accuracy{};
};

struct AblationResult {
  std::array<std::string, 5> columns;
  std::vector<AblationRow> rows;

  std::string to_csv() const;
};

/// Requires exactly four prompts. Reuses per-prompt votes already in `run`.
AblationResult ablate(const RunResult& run);
/// Collects (or replays) the per-prompt answers and ablates them.
AblationResult run_ablation(const RunConfig& config, Gateway& gateway);

struct FewShotRow {
  std::string model;
  std::string topic;
  std::optional<double> three_shot;
  std::optional<double> zero_shot;
  std::string error;

  /// "3-shot", "0-shot", "tie" or empty when a side is missing.
  std::string better() const;
};

struct FewShotComparison {
  std::vector<FewShotRow> rows;

  std::string to_csv() const;
  std::string to_markdown() const;
};

/// Three-shot prompt versus zero-shot P1 on every UKP partition.
FewShotComparison compare_fewshot(const RunConfig& config, Gateway& gateway);

/// Mode column value of a metrics row: "P1".."P4", "Certainty", "CoT",
/// "FewShot" or "Ensemble".
std::string mode_label(RunMode mode, std::optional<PromptKind> kind = std::nullopt);

inline constexpr std::string_view kEnsembleModel = "ensemble";

}  // namespace stancebench
