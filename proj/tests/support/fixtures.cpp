#include "fixtures.hpp"

#include <array>
#include <atomic>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace stancebench::testing {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("stancebench-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string synthetic_ukp_tsv(std::string_view topic, std::size_t n_for, std::size_t n_against,
                              std::size_t n_no_argument) {
  std::string out = "topic\tretrievedUrl\tarchivedUrl\tsentenceHash\tsentence\tannotation\tset\n";
  std::array<std::size_t, 3> left{n_for, n_against, n_no_argument};
  static constexpr std::array<const char*, 3> kAnnotations{"Argument_for", "Argument_against", "NoArgument"};
  std::size_t n = 0;
  while (left[0] + left[1] + left[2] > 0) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (left[c] == 0) continue;
      --left[c];
      ++n;
      const std::string t(topic);
      out += t + "\thttp://example.org/" + std::to_string(n) + "\t\th" + std::to_string(n) + "\tSynthetic sentence @" +
             t + "-" + std::to_string(n) + "@ about " + t + ".\t" + kAnnotations[c] + "\t" +
             (n % 5 == 0 ? "test" : "train") + "\n";
    }
  }
  return out;
}

std::string synthetic_argsme_json(std::string_view portal, std::size_t n_pro, std::size_t n_con,
                                  std::size_t premises_per_debate) {
  nlohmann::json debates = nlohmann::json::array();
  std::size_t n = 0;
  nlohmann::json current;
  auto flush = [&] {
    if (!current.is_null()) debates.push_back(std::move(current));
    current = nullptr;
  };
  while (n_pro + n_con > 0) {
    if (current.is_null() || current["premises"].size() == premises_per_debate) {
      flush();
      current = {{"id", "d" + std::to_string(debates.size() + 1)},
                 {"conclusion", "Synthetic conclusion number " + std::to_string(debates.size() + 1)},
                 {"premises", nlohmann::json::array()},
                 {"context", {{"sourceDomain", std::string(portal) + ".org"}}}};
    }
    const bool pro = n_pro > 0 && (n_con == 0 || n % 2 == 0);
    (pro ? n_pro : n_con)--;
    ++n;
    current["premises"].push_back({{"text", "Synthetic premise @" + std::string(portal) + "-" + std::to_string(n) + "@."},
                                   {"stance", pro ? "PRO" : "CON"}});
  }
  flush();
  return nlohmann::json{{"arguments", debates}}.dump();
}

std::string record_marker(const ArgumentRecord& record) {
  const auto b = record.text.find('@');
  const auto e = record.text.find('@', b + 1);
  if (b == std::string::npos || e == std::string::npos) throw std::logic_error("record without marker: " + record.id);
  return record.text.substr(b, e - b + 1);
}

std::string_view kind_marker(PromptKind kind) {
  switch (kind) {
    case PromptKind::P1: return "Return one of the expressions";
    case PromptKind::P2: return "The thesis is: ";
    case PromptKind::P3: return "In the context of the ongoing public debate";
    case PromptKind::P4: return "Return a single letter";
    case PromptKind::CoT: return "Solve the argument classification problem";
    case PromptKind::FewShot: return "Here are some examples";
  }
  return "";
}

std::string reply_text(PromptKind kind, const Prediction& label) {
  if (!label) return kind == PromptKind::CoT ? "I cannot decide." : "It depends on the perspective.";
  switch (answer_format(kind)) {
    case AnswerFormat::Letter:
      return *label == Label::For ? "F" : *label == Label::Against ? "A" : "N";
    case AnswerFormat::CotTable: {
      const std::string verbal = *label == Label::NoArgument ? "No Argument" : std::string(to_string(*label));
      return "| step | subquestion | process | result |\n|---|---|---|---|\n"
             "| 1 | What does the sentence claim? | Reading the sentence. | A claim about the topic |\n"
             "| 2 | Final classification | Relating the claim to the topic. | " +
             verbal + " |";
    }
    case AnswerFormat::Verbal:
      return *label == Label::NoArgument ? "No argument" : std::string(to_string(*label));
  }
  return "";
}

std::vector<MockRule> mock_rules(std::span<const ArgumentRecord> records, std::span<const PromptKind> kinds,
                                 const AnswerFn& answer) {
  std::vector<MockRule> certainty, cot, fewshot, plain;
  for (const auto& record : records) {
    const std::string marker = record_marker(record);
    for (PromptKind kind : kinds) {
      const ScriptedAnswer a = answer(record, kind);
      MockRule rule{{marker, std::string(kind_marker(kind))}, reply_text(kind, a.label), 0, 0};
      if (kind == PromptKind::CoT) {
        cot.push_back(std::move(rule));
      } else if (kind == PromptKind::FewShot) {
        fewshot.push_back(std::move(rule));
      } else {
        plain.push_back(std::move(rule));
        certainty.push_back(MockRule{{marker, std::string(kind_marker(kind)), "percentage"},
                                     std::to_string(a.certainty) + "%", 0, 0});
      }
    }
  }
  std::vector<MockRule> out = std::move(certainty);
  for (auto* group : {&cot, &fewshot, &plain})
    out.insert(out.end(), std::make_move_iterator(group->begin()), std::make_move_iterator(group->end()));
  return out;
}

std::string mock_script_json(std::span<const MockRule> rules) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rules) {
    nlohmann::json j{{"match", r.match}, {"response", r.response}};
    if (r.error_status) j["error"] = r.error_status;
    if (r.delay_ms) j["delay_ms"] = r.delay_ms;
    out.push_back(std::move(j));
  }
  return out.dump(1);
}

fs::path write_mock_experiment(const fs::path& dir, const MockExperiment& e) {
  fs::create_directories(dir);
  const std::string tsv = synthetic_ukp_tsv(e.topic, e.n_for, e.n_against, e.n_no_argument);
  write_text(dir / (e.topic + ".tsv"), tsv);
  const auto records = parse_ukp(tsv, e.topic);
  static constexpr std::array<PromptKind, 6> kinds{PromptKind::P1, PromptKind::P2,  PromptKind::P3,
                                                   PromptKind::P4, PromptKind::CoT, PromptKind::FewShot};
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : e.models) {
    const auto rules = mock_rules(records, kinds, m.answer);
    write_text(dir / (m.name + ".mock.json"), mock_script_json(rules));
    models.push_back({{"name", m.name}, {"endpoint", "mock:" + (dir / (m.name + ".mock.json")).string()}});
  }
  nlohmann::json config{
      {"datasets", {{{"dataset", "ukp"}, {"topic", e.topic}, {"path", e.topic + ".tsv"}}}},
      {"models", models},
      {"prompts", {"P1", "P2", "P3", "P4"}},
      {"modes", e.modes},
      {"sampling", {{"n", e.sample ? nlohmann::json(*e.sample) : nlohmann::json(nullptr)}, {"seed", e.seed}}},
      {"gateway", {{"cache", "cache.jsonl"}}},
  };
  write_text(dir / "config.json", config.dump(2));
  return dir / "config.json";
}

std::optional<Label> oracle_algorithm1(std::span<const PromptVote> votes) {
  int delta_f = 0, delta_a = 0, delta_n = 0;
  std::vector<double> kappa;
  std::vector<Label> phi;
  for (const auto& omega : votes) {
    if (!omega.label) continue;
    phi.push_back(*omega.label);
    if (*omega.label == Label::For) delta_f = delta_f + 1;
    else if (*omega.label == Label::Against) delta_a = delta_a + 1;
    else delta_n = delta_n + 1;
    kappa.push_back(omega.certainty ? *omega.certainty : 0.0);
  }
  if (phi.empty()) return std::nullopt;

  const int Delta = std::max({delta_f, delta_a, delta_n});
  if ((delta_f == Delta && delta_a == Delta) || (delta_f == Delta && delta_n == Delta) ||
      (delta_n == Delta && delta_a == Delta)) {
    double out[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < phi.size(); ++i) {
      double one_hot[3] = {0.0, 0.0, 0.0};
      one_hot[static_cast<int>(phi[i])] = 1.0;
      for (int c = 0; c < 3; ++c) out[c] = out[c] + kappa[i] * one_hot[c];
    }
    const int counts[3] = {delta_f, delta_a, delta_n};
    int best = -1;
    for (int c = 0; c < 3; ++c)
      if (counts[c] == Delta && (best < 0 || out[c] > out[best])) best = c;
    return static_cast<Label>(best);
  }
  if (delta_f == Delta) return Label::For;
  if (delta_a == Delta) return Label::Against;
  return Label::NoArgument;
}

}  // namespace stancebench::testing
