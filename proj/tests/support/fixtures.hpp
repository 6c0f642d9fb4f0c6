#pragma once

// Synthetic corpora, scripted mock backends and the reference vote oracle
// shared by the unit and acceptance suites.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stancebench/corpus.hpp"
#include "stancebench/model_gateway.hpp"
#include "stancebench/prompt_forge.hpp"
#include "stancebench/voting.hpp"

namespace stancebench::testing {

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// UKP-style TSV (full column set) with the given label counts, rows
/// interleaved. Every sentence carries a unique `@<topic>-<n>@` marker.
std::string synthetic_ukp_tsv(std::string_view topic, std::size_t n_for, std::size_t n_against,
                              std::size_t n_no_argument);

/// Args.me-style JSON with `premises_per_debate` premises per conclusion
/// and the given PRO/CON totals.
std::string synthetic_argsme_json(std::string_view portal, std::size_t n_pro, std::size_t n_con,
                                  std::size_t premises_per_debate = 3);

/// The `@...@` marker inside a synthetic record's text.
std::string record_marker(const ArgumentRecord& record);

/// A substring that identifies the rendered prompt kind.
std::string_view kind_marker(PromptKind kind);

/// What a scripted model answers for one record and prompt kind.
struct ScriptedAnswer {
  Prediction label;        // nullopt: an unparseable reply
  int certainty = 90;      // percent, answered in the follow-up turn
};

using AnswerFn = std::function<ScriptedAnswer(const ArgumentRecord&, PromptKind)>;

/// Reply text in the format `kind` asks for.
std::string reply_text(PromptKind kind, const Prediction& label);

/// Certainty rules first, then CoT, few-shot and the rephrased prompts, so
/// the first matching rule is always the intended one.
std::vector<MockRule> mock_rules(std::span<const ArgumentRecord> records, std::span<const PromptKind> kinds,
                                 const AnswerFn& answer);

std::string mock_script_json(std::span<const MockRule> rules);

struct MockModel {
  std::string name;
  AnswerFn answer;
};

/// A complete on-disk experiment: a synthetic UKP topic file, one mock
/// script per model and a config.json using the given modes and sample size.
struct MockExperiment {
  std::string topic = "abortion";
  std::size_t n_for = 0, n_against = 0, n_no_argument = 0;
  std::optional<std::size_t> sample;
  std::uint64_t seed = 42;
  std::vector<MockModel> models;
  std::vector<std::string> modes{"PerPrompt", "CertaintyVote"};
};

/// Returns the path of the written config.json.
std::filesystem::path write_mock_experiment(const std::filesystem::path& dir, const MockExperiment& experiment);

/// Literal reading of the vote procedure, kept independent of voting.cpp.
/// Returns nullopt when no vote is parsed.
std::optional<Label> oracle_algorithm1(std::span<const PromptVote> votes);

}  // namespace stancebench::testing
