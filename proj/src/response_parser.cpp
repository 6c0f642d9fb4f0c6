#include "stancebench/response_parser.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>

#include "text_util.hpp"

namespace stancebench {

namespace {

std::string strip_think(std::string_view raw) {
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const auto open = raw.find("<think>", pos);
    if (open == std::string_view::npos) break;
    const auto close = raw.find("</think>", open);
    if (close == std::string_view::npos) break;
    out.append(raw.substr(pos, open - pos));
    pos = close + 8;
  }
  out.append(raw.substr(pos));
  return out;
}

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') ||
         u == '_';
}

struct Word {
  std::size_t begin;
  std::size_t end;
  std::string lower;
};

std::vector<Word> words_of(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_byte(text[j])) ++j;
    words.push_back({i, j, detail::to_lower(text.substr(i, j - i))});
    i = j;
  }
  return words;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool in_space = false;
  for (char c : s) {
    if (detail::is_space(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out += ' ';
    in_space = false;
    out += c;
  }
  return out;
}

std::optional<Label> strict_token(const std::string& folded, AnswerFormat format, bool neutral) {
  if (format == AnswerFormat::Letter) {
    if (folded == "f") return Label::For;
    if (folded == "a") return Label::Against;
    if (neutral && folded == "n") return Label::NoArgument;
    return std::nullopt;
  }
  if (folded == "for") return Label::For;
  if (folded == "against") return Label::Against;
  if (neutral && (folded == "no argument" || folded == "noargument" || folded == "no_argument"))
    return Label::NoArgument;
  return std::nullopt;
}

}  // namespace

ParsedAnswer parse_label(std::string_view raw, AnswerFormat format, bool allows_no_argument) {
  const std::string text = strip_think(raw);
  const std::string_view trimmed = detail::trim(text);

  ParsedAnswer out;
  if (auto label = strict_token(detail::to_lower(collapse_spaces(trimmed)), format, allows_no_argument)) {
    out.label = label;
    out.matched_token = std::string(trimmed);
    out.strictness = Strictness::Strict;
    return out;
  }

  out.strictness = Strictness::Lenient;
  const auto words = words_of(text);
  std::array<std::optional<std::pair<std::size_t, std::size_t>>, kLabelCount> first_hit;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::string& lw = words[w].lower;
    std::optional<Label> label;
    std::size_t end = words[w].end;
    if (format == AnswerFormat::Letter) {
      if (lw == "f") label = Label::For;
      else if (lw == "a") label = Label::Against;
      else if (allows_no_argument && lw == "n") label = Label::NoArgument;
    } else {
      if (lw == "for") {
        label = Label::For;
      } else if (lw == "against") {
        label = Label::Against;
      } else if (allows_no_argument && (lw == "noargument" || lw == "no_argument")) {
        label = Label::NoArgument;
      } else if (allows_no_argument && lw == "no" && w + 1 < words.size() &&
                 words[w + 1].lower == "argument") {
        // Only whitespace or a hyphen may separate the two words.
        const std::string_view gap(text.data() + words[w].end, words[w + 1].begin - words[w].end);
        if (!gap.empty() && std::all_of(gap.begin(), gap.end(),
                                        [](char c) { return detail::is_space(c) || c == '-'; })) {
          label = Label::NoArgument;
          end = words[w + 1].end;
        }
      }
    }
    if (label && !first_hit[index_of(*label)]) first_hit[index_of(*label)] = std::pair{words[w].begin, end};
  }

  const auto distinct = std::count_if(first_hit.begin(), first_hit.end(), [](const auto& h) { return h.has_value(); });
  if (distinct != 1) return out;
  for (Label label : kAllLabels) {
    if (const auto& hit = first_hit[index_of(label)]) {
      out.label = label;
      out.matched_token = text.substr(hit->first, hit->second - hit->first);
    }
  }
  return out;
}

Certainty parse_certainty(std::string_view raw) {
  const std::string text = strip_think(raw);
  const auto digit = std::find_if(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; });
  if (digit == text.end()) return std::nullopt;

  std::size_t i = static_cast<std::size_t>(digit - text.begin());
  std::string number;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') number += text[i++];
  if (i + 1 < text.size() && (text[i] == '.' || text[i] == ',') && text[i + 1] >= '0' && text[i + 1] <= '9') {
    number += '.';
    ++i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') number += text[i++];
  }
  const double percent = std::clamp(std::strtod(number.c_str(), nullptr), 0.0, 100.0);
  return percent / 100.0;
}

CotTrace parse_cot(std::string_view raw, bool allows_no_argument) {
  const std::string text = strip_think(raw);
  CotTrace trace;
  for (std::string_view line : detail::split(text, '\n')) {
    line = detail::trim(line);
    if (line.empty() || line.front() != '|') continue;
    line.remove_prefix(1);
    if (!line.empty() && line.back() == '|') line.remove_suffix(1);
    std::vector<std::string> cells;
    for (std::string_view cell : detail::split(line, '|')) cells.emplace_back(detail::trim(cell));
    if (cells.size() < 4) continue;

    const bool separator = std::all_of(cells.begin(), cells.end(), [](const std::string& c) {
      return !c.empty() && c.find_first_not_of("-: ") == std::string::npos;
    });
    if (separator || detail::to_lower(cells[0]) == "step") continue;

    CotStep step;
    const auto first_digit = cells[0].find_first_of("0123456789");
    step.step = first_digit == std::string::npos
                    ? static_cast<int>(trace.steps.size() + 1)
                    : std::atoi(cells[0].c_str() + first_digit);
    step.subquestion = cells[1];
    step.process = cells[2];
    step.result = cells[3];
    trace.steps.push_back(std::move(step));
  }

  if (trace.steps.empty()) {
    trace.final = parse_label(text, AnswerFormat::Verbal, allows_no_argument).label;
  } else {
    trace.final = parse_label(trace.steps.back().result, AnswerFormat::Verbal, allows_no_argument).label;
  }
  return trace;
}

}  // namespace stancebench
