#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stancebench/label.hpp"

namespace stancebench {

/// How Unparsed predictions are scored: charged as errors (counted in the
/// accuracy denominator and in recall support) or dropped entirely.
enum class UnparsedPolicy { Error, Drop };

std::string_view to_string(UnparsedPolicy policy);
std::optional<UnparsedPolicy> parse_unparsed_policy(std::string_view text);

struct ConfusionMatrix {
  /// counts[gold][predicted], indexed by index_of(Label).
  std::array<std::array<std::size_t, kLabelCount>, kLabelCount> counts{};
  std::size_t unparsed_count = 0;
  /// Unparsed predictions broken down by gold label.
  std::array<std::size_t, kLabelCount> unparsed_by_gold{};
  UnparsedPolicy policy = UnparsedPolicy::Error;

  std::size_t trace() const;
  /// Records scored: parsed predictions plus, under the Error policy, Unparsed ones.
  std::size_t total() const;
  /// Gold support of a class as seen by recall.
  std::size_t support(Label gold) const;
  std::size_t predicted(Label label) const;
};

/// Throws LengthMismatch.
ConfusionMatrix confusion(std::span<const Label> golds, std::span<const Prediction> predictions,
                          UnparsedPolicy policy = UnparsedPolicy::Error);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::array<ClassMetrics, kLabelCount> per_class{};
  /// Classes with non-zero gold support; the macro averages run over these.
  std::array<bool, kLabelCount> in_gold{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

/// Macro averages over classes present in gold; an undefined precision,
/// recall or F1 is 0. Throws EmptyMatrix.
MetricsReport metrics(const ConfusionMatrix& matrix);

enum class ErrorType { AF, AN, FA, FN, NA, NF };

inline constexpr std::array<ErrorType, 6> kAllErrorTypes{ErrorType::AF, ErrorType::AN, ErrorType::FA,
                                                         ErrorType::FN, ErrorType::NA, ErrorType::NF};

std::string_view to_string(ErrorType type);

/// First letter is the gold label, second the prediction. Defined only for
/// parsed, incorrect predictions.
std::optional<ErrorType> classify_error(Label gold, const Prediction& predicted);

struct ErrorBreakdown {
  std::array<std::size_t, 6> counts{};
  std::size_t total_errors = 0;

  /// count / total_errors; all zero when there are no errors.
  std::array<double, 6> proportions() const;
  ErrorBreakdown& operator+=(const ErrorBreakdown& other);
};

/// Unparsed predictions are excluded. An all-correct input yields an empty
/// breakdown. Throws LengthMismatch.
ErrorBreakdown error_breakdown(std::span<const Label> golds, std::span<const Prediction> predictions);

/// Identifies one metrics row.
struct MetricsKey {
  std::string dataset;
  std::string topic;
  std::string model;
  std::string mode;
};

inline constexpr std::string_view kMetricsCsvHeader = "dataset,topic,model,mode,accuracy,precision,recall,f1";

/// One CSV row (no trailing newline), values as fractions with six decimals.
std::string metrics_csv_row(const MetricsKey& key, const MetricsReport& report);

/// Markdown block: one row per label with precision/recall/F1 in percent
/// plus an accuracy and macro line.
std::string metrics_markdown(const MetricsKey& key, const MetricsReport& report);

}  // namespace stancebench
