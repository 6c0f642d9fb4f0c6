#pragma once

// Tables and matrices rendered from a finished run directory.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stancebench/eval_metrics.hpp"
#include "stancebench/label.hpp"

namespace stancebench {

enum class ReportOutput { MetricsTable, HeatmapMatrix, PromptAccuracy, ErrorTypes, AblationTable };
enum class ReportFormat { Csv, Markdown };

std::string_view to_string(ReportOutput output);
std::optional<ReportOutput> parse_report_output(std::string_view text);
std::optional<ReportFormat> parse_report_format(std::string_view text);

struct StoredMetrics {
  MetricsKey key;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct StoredVote {
  std::string record_id;
  std::string dataset;
  std::string topic;
  Label gold = Label::NoArgument;
  std::string model;
  std::string kind;
  Prediction label;
};

struct StoredPartition {
  std::string dataset;
  std::string topic;
};

struct LoadedRun {
  nlohmann::json config;
  std::vector<std::string> models;
  std::vector<std::string> prompts;
  std::vector<StoredPartition> partitions;
  std::vector<StoredMetrics> metrics;
  std::vector<StoredVote> votes;
  std::optional<std::string> ablation_csv;

  const StoredMetrics* find(std::string_view topic, std::string_view model, std::string_view mode) const;
};

/// Throws MissingData when config.json or metrics.csv is absent.
LoadedRun load_run(const std::filesystem::path& dir);

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct ReportOptions {
  /// Heatmap cell source: "average" (mean over the rephrased prompts, falling
  /// back to Certainty) or any metrics mode such as "Certainty" or "P2".
  std::string heatmap_mode = "average";
};

/// Throws MissingData when the run lacks the rows an output needs.
std::string render_report(const LoadedRun& run, ReportOutput output, ReportFormat format,
                          const ReportOptions& options = {});

/// Writes `<dir>/report/<name>.<csv|md>` for each output and returns the paths.
std::vector<std::filesystem::path> write_reports(const std::filesystem::path& dir, const LoadedRun& run,
                                                 const std::vector<ReportOutput>& outputs, ReportFormat format,
                                                 const ReportOptions& options = {});

}  // namespace stancebench
