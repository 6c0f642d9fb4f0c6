#include "stancebench/prompt_forge.hpp"

#include "json.hpp"
#include "stancebench/error.hpp"
#include "text_util.hpp"

namespace stancebench {

using nlohmann::json;

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::P1: return "P1";
    case PromptKind::P2: return "P2";
    case PromptKind::P3: return "P3";
    case PromptKind::P4: return "P4";
    case PromptKind::CoT: return "CoT";
    case PromptKind::FewShot: return "FewShot";
  }
  return "?";
}

std::optional<PromptKind> parse_prompt_kind(std::string_view text) {
  const std::string s = detail::to_lower(detail::trim(text));
  if (s == "p1") return PromptKind::P1;
  if (s == "p2") return PromptKind::P2;
  if (s == "p3") return PromptKind::P3;
  if (s == "p4") return PromptKind::P4;
  if (s == "cot") return PromptKind::CoT;
  if (s == "fewshot" || s == "few-shot" || s == "few_shot") return PromptKind::FewShot;
  return std::nullopt;
}

std::string_view to_string(AnswerFormat format) {
  switch (format) {
    case AnswerFormat::Verbal: return "Verbal";
    case AnswerFormat::Letter: return "Letter";
    case AnswerFormat::CotTable: return "CotTable";
  }
  return "?";
}

std::optional<AnswerFormat> parse_answer_format(std::string_view text) {
  const std::string s = detail::to_lower(detail::trim(text));
  if (s == "verbal") return AnswerFormat::Verbal;
  if (s == "letter") return AnswerFormat::Letter;
  if (s == "cottable" || s == "cot") return AnswerFormat::CotTable;
  return std::nullopt;
}

AnswerFormat answer_format(PromptKind kind) {
  switch (kind) {
    case PromptKind::P2:
    case PromptKind::P4:
      return AnswerFormat::Letter;
    case PromptKind::CoT:
      return AnswerFormat::CotTable;
    default:
      return AnswerFormat::Verbal;
  }
}

TopicTable TopicTable::parse(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw Error(ErrorCode::MalformedJson, "topics file must be a JSON object");
  std::map<std::string, TopicSpec> topics;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const json& v = it.value();
    try {
      TopicSpec spec;
      spec.key = it.key();
      spec.short_form = v.at("short").get<std::string>();
      spec.thesis = v.at("thesis").get<std::string>();
      if (auto ex = v.find("examples"); ex != v.end() && !ex->is_null()) {
        spec.exemplars = FewShotExemplars{ex->at("for").get<std::string>(),
                                          ex->at("against").get<std::string>(),
                                          ex->at("no_argument").get<std::string>()};
      }
      topics.emplace(spec.key, std::move(spec));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedJson, "topic '" + it.key() + "': " + e.what());
    }
  }
  return TopicTable(std::move(topics));
}

TopicTable TopicTable::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path));
}

const TopicSpec* TopicTable::find(std::string_view key) const {
  auto it = topics_.find(std::string(key));
  return it == topics_.end() ? nullptr : &it->second;
}

namespace {

const TopicSpec& require_topic(const ArgumentRecord& record, const TopicTable& topics) {
  const TopicSpec* spec = topics.find(record.topic);
  if (!spec) throw Error(ErrorCode::MissingTopicSpec, "no thesis configured for topic '" + record.topic + "'");
  return *spec;
}

std::string in_quotes(std::string_view s) { return "\"" + std::string(s) + "\""; }

}  // namespace

std::string thesis_for(const ArgumentRecord& record, const TopicTable& topics, PromptKind kind) {
  if (record.dataset == DatasetKind::ArgsMe) return record.thesis;
  const TopicSpec& spec = require_topic(record, topics);
  return kind == PromptKind::P2 ? spec.thesis : spec.short_form;
}

RenderedPrompt render(PromptKind kind, const ArgumentRecord& record, const TopicTable& topics) {
  const bool neutral = record.dataset == DatasetKind::UKP;
  const std::string thesis = thesis_for(record, topics, kind);
  const std::string text = in_quotes(record.text);

  RenderedPrompt out;
  out.kind = kind;
  out.format = answer_format(kind);
  out.allows_no_argument = neutral;

  std::string& p = out.text;
  switch (kind) {
    case PromptKind::P1:
      p = "Is the sentence: " + text + " an argument for or against " + in_quotes(thesis);
      p += neutral ? ", or is it no argument? Return one of the expressions: \"For\", \"Against\" or "
                     "\"No argument\", without any additional commentary."
                   : "? Return one of the expressions: \"For\" or \"Against\", without any "
                     "additional commentary.";
      break;
    case PromptKind::P2:
      p = "The thesis is: " + in_quotes(thesis) + " Indicate if the argument " + text;
      p += neutral ? " is for this thesis (F), against this thesis (A), or neutral (N). Please respond "
                     "with only one letter: F, A, or N, without any additional commentary."
                   : " is for this thesis (F) or against this thesis (A). Please respond with only "
                     "one letter: F or A, without any additional commentary.";
      break;
    case PromptKind::P3:
      p = "In the context of the ongoing public debate, evaluate whether the text " + text +
          " represents an argument supporting or opposing " + in_quotes(thesis);
      p += neutral ? ", or whether it does not qualify as an argument at all. Respond with one of the "
                     "expressions: \"For\", \"Against\" or \"No argument\"."
                   : ". Respond with one of the expressions: \"For\" or \"Against\".";
      break;
    case PromptKind::P4:
      p = "Is the sentence: " + text + " an argument for (F) or against (A) " + in_quotes(thesis);
      p += neutral ? " or is it no argument (N)? Return a single letter: F, A, or N, without any "
                     "additional commentary."
                   : "? Return a single letter: F or A, without any additional commentary.";
      break;
    case PromptKind::CoT:
      p = "Is the sentence: " + text + " an argument for or against " + in_quotes(thesis) +
          (neutral ? ", or is it no argument?" : "?") +
          "\nSolve the argument classification problem. Think through the problem step by step to "
          "solve it. At each step, you have to figure out:\n"
          "- the step number,\n"
          "- the sub - question to be answered in that step,\n"
          "- the thought process of solving that step, and\n"
          "- the result of solving that step.\n"
          "Respond in the following markdown table format for each step: "
          "\"| step | subquestion | process | result |\". The result should be one of the "
          "expressions: ";
      p += neutral ? "\"For\", \"Against\" or \"No Argument\", without any additional commentary."
                   : "\"For\" or \"Against\", without any additional commentary.";
      break;
    case PromptKind::FewShot: {
      const TopicSpec* spec = topics.find(record.topic);
      if (!spec || !spec->exemplars || !neutral)
        throw Error(ErrorCode::UnsupportedKind,
                    "no few-shot exemplars configured for topic '" + record.topic + "'");
      const FewShotExemplars& ex = *spec->exemplars;
      // Unlike P1, the few-shot template leaves the sentence and topic unquoted.
      p = "Is the sentence: " + record.text + " an argument for or against " + thesis +
          ", or is it no argument? Return one of the expressions: \"For\", \"Against\" or "
          "\"No argument\", without any additional commentary. Here are some examples:\n"
          "Sentence: " + ex.for_example + " Answer: For\n"
          "Sentence: " + ex.against_example + " Answer: Against\n"
          "Sentence: " + ex.no_argument_example + " Answer: No argument";
      break;
    }
  }
  return out;
}

std::string render_certainty(const RenderedPrompt& /*previous*/) {
  return "On a scale of 0 to 100, what is your certainty, expressed as a percentage, in your "
         "previous classification? Answer with the number only.";
}

}  // namespace stancebench
