#include "stancebench/eval_metrics.hpp"

#include "stancebench/error.hpp"
#include "text_util.hpp"

namespace stancebench {

std::string_view to_string(UnparsedPolicy policy) {
  return policy == UnparsedPolicy::Error ? "error" : "drop";
}

std::optional<UnparsedPolicy> parse_unparsed_policy(std::string_view text) {
  const std::string s = detail::to_lower(detail::trim(text));
  if (s == "error") return UnparsedPolicy::Error;
  if (s == "drop") return UnparsedPolicy::Drop;
  return std::nullopt;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < kLabelCount; ++i) t += counts[i][i];
  return t;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = policy == UnparsedPolicy::Error ? unparsed_count : 0;
  for (const auto& row : counts)
    for (std::size_t c : row) t += c;
  return t;
}

std::size_t ConfusionMatrix::support(Label gold) const {
  std::size_t s = policy == UnparsedPolicy::Error ? unparsed_by_gold[index_of(gold)] : 0;
  for (std::size_t c : counts[index_of(gold)]) s += c;
  return s;
}

std::size_t ConfusionMatrix::predicted(Label label) const {
  std::size_t s = 0;
  for (const auto& row : counts) s += row[index_of(label)];
  return s;
}

ConfusionMatrix confusion(std::span<const Label> golds, std::span<const Prediction> predictions,
                          UnparsedPolicy policy) {
  if (golds.size() != predictions.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(golds.size()) + " golds vs " +
                                               std::to_string(predictions.size()) + " predictions");
  ConfusionMatrix m;
  m.policy = policy;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (predictions[i]) {
      ++m.counts[index_of(golds[i])][index_of(*predictions[i])];
    } else {
      ++m.unparsed_count;
      ++m.unparsed_by_gold[index_of(golds[i])];
    }
  }
  return m;
}

MetricsReport metrics(const ConfusionMatrix& m) {
  const std::size_t total = m.total();
  if (total == 0) throw Error(ErrorCode::EmptyMatrix, "no scored records");

  MetricsReport r;
  r.accuracy = static_cast<double>(m.trace()) / static_cast<double>(total);
  std::size_t present = 0;
  for (Label label : kAllLabels) {
    const std::size_t i = index_of(label);
    const auto tp = static_cast<double>(m.counts[i][i]);
    const std::size_t predicted = m.predicted(label);
    const std::size_t support = m.support(label);
    ClassMetrics& c = r.per_class[i];
    c.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    c.recall = support ? tp / static_cast<double>(support) : 0.0;
    c.f1 = (c.precision + c.recall) > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    r.in_gold[i] = support > 0;
    if (support > 0) {
      ++present;
      r.macro_precision += c.precision;
      r.macro_recall += c.recall;
      r.macro_f1 += c.f1;
    }
  }
  if (present > 0) {
    r.macro_precision /= static_cast<double>(present);
    r.macro_recall /= static_cast<double>(present);
    r.macro_f1 /= static_cast<double>(present);
  }
  return r;
}

std::string_view to_string(ErrorType type) {
  switch (type) {
    case ErrorType::AF: return "AF";
    case ErrorType::AN: return "AN";
    case ErrorType::FA: return "FA";
    case ErrorType::FN: return "FN";
    case ErrorType::NA: return "NA";
    case ErrorType::NF: return "NF";
  }
  return "?";
}

std::optional<ErrorType> classify_error(Label gold, const Prediction& predicted) {
  if (!predicted || *predicted == gold) return std::nullopt;
  switch (gold) {
    case Label::Against: return *predicted == Label::For ? ErrorType::AF : ErrorType::AN;
    case Label::For: return *predicted == Label::Against ? ErrorType::FA : ErrorType::FN;
    case Label::NoArgument: return *predicted == Label::Against ? ErrorType::NA : ErrorType::NF;
  }
  return std::nullopt;
}

std::array<double, 6> ErrorBreakdown::proportions() const {
  std::array<double, 6> p{};
  if (total_errors == 0) return p;
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(total_errors);
  return p;
}

ErrorBreakdown& ErrorBreakdown::operator+=(const ErrorBreakdown& other) {
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  total_errors += other.total_errors;
  return *this;
}

ErrorBreakdown error_breakdown(std::span<const Label> golds, std::span<const Prediction> predictions) {
  if (golds.size() != predictions.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(golds.size()) + " golds vs " +
                                               std::to_string(predictions.size()) + " predictions");
  ErrorBreakdown b;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (auto type = classify_error(golds[i], predictions[i])) {
      ++b.counts[static_cast<std::size_t>(*type)];
      ++b.total_errors;
    }
  }
  return b;
}

std::string metrics_csv_row(const MetricsKey& key, const MetricsReport& r) {
  using detail::csv_field;
  return csv_field(key.dataset) + "," + csv_field(key.topic) + "," + csv_field(key.model) + "," +
         csv_field(key.mode) + "," +
         detail::format("%.6f,%.6f,%.6f,%.6f", r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1);
}

std::string metrics_markdown(const MetricsKey& key, const MetricsReport& r) {
  std::string out = "### " + key.dataset + " / " + key.topic + " / " + key.model + " / " + key.mode + "\n\n";
  out += "| class | precision | recall | F1 |\n|---|---|---|---|\n";
  for (Label label : kAllLabels) {
    if (!r.in_gold[index_of(label)]) continue;
    const ClassMetrics& c = r.per_class[index_of(label)];
    out += "| " + std::string(to_string(label)) + " | " + detail::percent1(c.precision) + " | " +
           detail::percent1(c.recall) + " | " + detail::percent1(c.f1) + " |\n";
  }
  out += "| **macro** | " + detail::percent1(r.macro_precision) + " | " + detail::percent1(r.macro_recall) +
         " | " + detail::percent1(r.macro_f1) + " |\n\n";
  out += "Accuracy: " + detail::percent1(r.accuracy) + "% (macro averages over gold classes)\n";
  return out;
}

}  // namespace stancebench
