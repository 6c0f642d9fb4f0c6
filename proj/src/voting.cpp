#include "stancebench/voting.hpp"

#include <algorithm>

#include "stancebench/error.hpp"
#include "text_util.hpp"

namespace stancebench {

namespace {

/// Highest-scoring label among `eligible`; earlier labels win exact ties.
Label argmax_with_precedence(const LabelScores& scores, const std::array<bool, kLabelCount>& eligible) {
  std::optional<Label> best;
  for (Label label : kAllLabels) {
    if (!eligible[index_of(label)]) continue;
    if (!best || scores[index_of(label)] > scores[index_of(*best)]) best = label;
  }
  return best.value_or(Label::For);
}

}  // namespace

std::size_t VoteTally::count(Label label) const {
  switch (label) {
    case Label::For: return delta_for;
    case Label::Against: return delta_against;
    case Label::NoArgument: return delta_no;
  }
  return 0;
}

VoteTally tally(std::span<const PromptVote> votes) {
  VoteTally t;
  for (const auto& v : votes) {
    if (!v.label) continue;
    switch (*v.label) {
      case Label::For: ++t.delta_for; break;
      case Label::Against: ++t.delta_against; break;
      case Label::NoArgument: ++t.delta_no; break;
    }
  }
  if (t.parsed() == 0) throw Error(ErrorCode::AllUnparsed, "no vote carries a label");
  t.delta_max = std::max({t.delta_for, t.delta_against, t.delta_no});
  return t;
}

std::string_view to_string(DecisionMethod method) {
  return method == DecisionMethod::Majority ? "Majority" : "CertaintyWeighted";
}

ModelDecision decide_algorithm1(std::span<const PromptVote> votes, DecisionOptions options,
                                std::string model) {
  ModelDecision d;
  d.model = std::move(model);
  d.tally = tally(votes);

  std::array<bool, kLabelCount> at_max{};
  std::size_t n_at_max = 0;
  for (Label label : kAllLabels) {
    at_max[index_of(label)] = d.tally.count(label) == d.tally.delta_max;
    n_at_max += at_max[index_of(label)] ? 1 : 0;
  }

  if (n_at_max == 1) {
    d.method = DecisionMethod::Majority;
    d.label = *std::find_if(kAllLabels.begin(), kAllLabels.end(),
                            [&](Label l) { return at_max[index_of(l)]; });
    return d;
  }

  LabelScores scores{};
  for (const auto& v : votes)
    if (v.label) scores[index_of(*v.label)] += v.certainty.value_or(0.0);

  d.method = DecisionMethod::CertaintyWeighted;
  d.weighted_scores = scores;
  d.label = argmax_with_precedence(scores, at_max);
  if (options.gamma && scores[index_of(d.label)] < *options.gamma) d.label = Label::NoArgument;
  return d;
}

std::string_view to_string(EnsembleStrategy strategy) {
  return strategy == EnsembleStrategy::Plurality ? "Plurality" : "CertaintySum";
}

std::optional<EnsembleStrategy> parse_ensemble_strategy(std::string_view text) {
  const std::string s = detail::to_lower(detail::trim(text));
  if (s == "plurality") return EnsembleStrategy::Plurality;
  if (s == "certaintysum" || s == "certainty_sum") return EnsembleStrategy::CertaintySum;
  return std::nullopt;
}

EnsembleDecision ensemble_decide(std::span<const ModelDecision> decisions, EnsembleStrategy strategy) {
  if (decisions.empty()) throw Error(ErrorCode::AllUnparsed, "ensemble over zero model decisions");

  EnsembleDecision out;
  out.strategy = strategy;
  out.decisions.assign(decisions.begin(), decisions.end());

  std::array<bool, kLabelCount> decided{};
  for (const auto& d : decisions) decided[index_of(d.label)] = true;

  if (strategy == EnsembleStrategy::Plurality) {
    LabelScores votes{};
    LabelScores weights{};
    for (const auto& d : decisions) {
      votes[index_of(d.label)] += 1.0;
      if (d.weighted_scores)
        for (std::size_t i = 0; i < kLabelCount; ++i) weights[i] += (*d.weighted_scores)[i];
    }
    const double top = *std::max_element(votes.begin(), votes.end());
    std::array<bool, kLabelCount> tied{};
    for (std::size_t i = 0; i < kLabelCount; ++i) tied[i] = votes[i] == top;
    out.label = argmax_with_precedence(weights, tied);
    return out;
  }

  LabelScores sum{};
  for (const auto& d : decisions) {
    if (d.weighted_scores) {
      for (std::size_t i = 0; i < kLabelCount; ++i) sum[i] += (*d.weighted_scores)[i];
    } else {
      const double n = static_cast<double>(d.tally.parsed());
      if (n == 0.0) {
        sum[index_of(d.label)] += 1.0;
        continue;
      }
      for (Label l : kAllLabels) sum[index_of(l)] += static_cast<double>(d.tally.count(l)) / n;
    }
  }
  out.label = argmax_with_precedence(sum, decided);
  return out;
}

}  // namespace stancebench
