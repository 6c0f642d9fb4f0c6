#pragma once

// Turning raw model text into labels and certainty values. All functions
// are total: malformed input yields Unparsed / Missing, never an exception.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stancebench/label.hpp"
#include "stancebench/prompt_forge.hpp"

namespace stancebench {

enum class Strictness { Strict, Lenient };

struct ParsedAnswer {
  Prediction label;
  /// Exact substring of the response that produced the label; empty iff Unparsed.
  std::string matched_token;
  Strictness strictness = Strictness::Lenient;
};

/// Fraction in [0, 1]; std::nullopt means Missing.
using Certainty = std::optional<double>;

struct CotStep {
  int step = 0;
  std::string subquestion;
  std::string process;
  std::string result;
};

struct CotTrace {
  std::vector<CotStep> steps;
  Prediction final;
};

/// Strict pass: the trimmed, case-folded response is exactly one allowed
/// token ("for" / "against" / "no argument", or "f" / "a" / "n" for Letter).
/// Lenient pass: exactly one distinct allowed token occurs as a standalone
/// word. CotTable uses the verbal tokens. `<think>...</think>` blocks are
/// ignored.
ParsedAnswer parse_label(std::string_view raw, AnswerFormat format, bool allows_no_argument);

/// First numeric literal, read as a percentage, clamped to [0, 100] and
/// scaled to [0, 1].
Certainty parse_certainty(std::string_view raw);

/// Rows of a markdown table with at least four cells; the final label comes
/// from the result cell of the last row, or from a lenient scan of the whole
/// text when no row is well formed.
CotTrace parse_cot(std::string_view raw, bool allows_no_argument);

}  // namespace stancebench
