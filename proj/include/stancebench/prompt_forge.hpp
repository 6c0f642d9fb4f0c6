#pragma once

// Prompt templates for stance classification: four rephrased zero-shot
// prompts, a chain-of-thought table prompt, a three-shot prompt and the
// certainty follow-up.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stancebench/corpus.hpp"

namespace stancebench {

enum class PromptKind { P1, P2, P3, P4, CoT, FewShot };

inline constexpr std::array<PromptKind, 4> kRephrasedPrompts{PromptKind::P1, PromptKind::P2,
                                                             PromptKind::P3, PromptKind::P4};

std::string_view to_string(PromptKind kind);
std::optional<PromptKind> parse_prompt_kind(std::string_view text);

enum class AnswerFormat { Verbal, Letter, CotTable };

std::string_view to_string(AnswerFormat format);
std::optional<AnswerFormat> parse_answer_format(std::string_view text);

/// P1, P3, FewShot -> Verbal; P2, P4 -> Letter; CoT -> CotTable.
AnswerFormat answer_format(PromptKind kind);

struct FewShotExemplars {
  std::string for_example;
  std::string against_example;
  std::string no_argument_example;
};

struct TopicSpec {
  std::string key;
  /// Short form used by P1/P3/P4/CoT/FewShot, e.g. "the death penalty".
  std::string short_form;
  /// Full-sentence thesis used by P2, e.g. "The death penalty should be allowed".
  std::string thesis;
  std::optional<FewShotExemplars> exemplars;
};

class TopicTable {
 public:
  TopicTable() = default;
  explicit TopicTable(std::map<std::string, TopicSpec> topics) : topics_(std::move(topics)) {}

  /// `topics.json`: topic key -> {short, thesis, examples{for, against, no_argument}}.
  static TopicTable parse(std::string_view json_text);
  static TopicTable load(const std::filesystem::path& path);

  const TopicSpec* find(std::string_view key) const;
  void set(TopicSpec spec) { topics_[spec.key] = std::move(spec); }
  const std::map<std::string, TopicSpec>& topics() const { return topics_; }

 private:
  std::map<std::string, TopicSpec> topics_;
};

struct RenderedPrompt {
  PromptKind kind = PromptKind::P1;
  std::string text;
  AnswerFormat format = AnswerFormat::Verbal;
  bool allows_no_argument = true;
};

/// Args.me: the record's own conclusion. UKP: the topic's thesis for P2,
/// its short form otherwise. Throws MissingTopicSpec.
std::string thesis_for(const ArgumentRecord& record, const TopicTable& topics, PromptKind kind);

/// Throws MissingTopicSpec, or UnsupportedKind for FewShot without exemplars.
RenderedPrompt render(PromptKind kind, const ArgumentRecord& record, const TopicTable& topics);

/// Second conversation turn asking for certainty in the preceding answer.
std::string render_certainty(const RenderedPrompt& previous);

}  // namespace stancebench
