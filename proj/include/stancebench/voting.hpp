#pragma once

// Per-model multi-prompt decision with a certainty-weighted tie-break, and
// the cross-model ensemble vote.
//
// A model answers every prompt in the set and, in a follow-up turn, states
// its certainty. Labels are counted; a unique most-frequent label wins
// outright. When two or more labels share the top count, each vote adds its
// certainty to the one-hot position of its label and the tied label with
// the largest summed certainty wins. Residual ties resolve by the fixed
// precedence For > Against > NoArgument.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stancebench/label.hpp"
#include "stancebench/prompt_forge.hpp"
#include "stancebench/response_parser.hpp"

namespace stancebench {

struct PromptVote {
  PromptKind kind = PromptKind::P1;
  Prediction label;
  Certainty certainty;
};

/// Per-label real vector indexed by index_of(Label).
using LabelScores = std::array<double, kLabelCount>;

struct VoteTally {
  std::size_t delta_for = 0;
  std::size_t delta_against = 0;
  std::size_t delta_no = 0;
  std::size_t delta_max = 0;

  std::size_t count(Label label) const;
  std::size_t parsed() const { return delta_for + delta_against + delta_no; }
};

/// Counts parsed votes only. Throws AllUnparsed.
VoteTally tally(std::span<const PromptVote> votes);

enum class DecisionMethod { Majority, CertaintyWeighted };

std::string_view to_string(DecisionMethod method);

struct ModelDecision {
  std::string model;
  Label label = Label::NoArgument;
  DecisionMethod method = DecisionMethod::Majority;
  VoteTally tally;
  /// Present iff method == CertaintyWeighted.
  std::optional<LabelScores> weighted_scores;
};

struct DecisionOptions {
  /// Minimum winning weighted score; below it a CertaintyWeighted decision
  /// degrades to NoArgument. Disabled when unset.
  std::optional<double> gamma;
};

/// Throws AllUnparsed.
ModelDecision decide_algorithm1(std::span<const PromptVote> votes, DecisionOptions options = {},
                                std::string model = {});

enum class EnsembleStrategy { Plurality, CertaintySum };

std::string_view to_string(EnsembleStrategy strategy);
std::optional<EnsembleStrategy> parse_ensemble_strategy(std::string_view text);

struct EnsembleDecision {
  Label label = Label::NoArgument;
  std::vector<ModelDecision> decisions;
  EnsembleStrategy strategy = EnsembleStrategy::Plurality;
};

/// Plurality: most frequent model label; ties by summed weighted scores,
/// then precedence. CertaintySum: argmax of summed per-model score vectors,
/// where a Majority decision contributes its vote-count fractions. The
/// winner is always one of the per-model labels.
EnsembleDecision ensemble_decide(std::span<const ModelDecision> decisions, EnsembleStrategy strategy);

}  // namespace stancebench
