#pragma once

// Argument corpora: loading UKP-style topic files and Args.me-style debate
// exports, canonical JSONL persistence, label statistics and seeded
// subsampling.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stancebench/label.hpp"

namespace stancebench {

struct ArgumentRecord {
  std::string id;
  DatasetKind dataset = DatasetKind::UKP;
  std::string topic;
  /// Conclusion for Args.me; empty for UKP until a thesis is synthesized.
  std::string thesis;
  std::string text;
  Label gold = Label::NoArgument;

  friend bool operator==(const ArgumentRecord&, const ArgumentRecord&) = default;
};

using LabelCounts = std::array<std::size_t, kLabelCount>;

struct CorpusStats {
  /// Topic key -> counts indexed by index_of(Label).
  std::map<std::string, LabelCounts> per_topic;
  std::size_t total = 0;

  LabelCounts overall() const;
  std::size_t count(std::string_view topic, Label label) const;

  /// `topic,label,count` with a header row, topics in key order.
  std::string to_csv() const;
};

/// Tab-separated file with a header row; `sentence` and `annotation`
/// columns are required, others ignored.
std::vector<ArgumentRecord> load_ukp(const std::filesystem::path& path, std::string_view topic);
std::vector<ArgumentRecord> parse_ukp(std::string_view tsv, std::string_view topic);

/// JSON array of debates (or an object holding one such array). Each debate
/// has a `conclusion` and `premises[{text, stance}]` with stance PRO or CON.
/// Debates whose `context.sourceDomain` does not contain `portal` are skipped,
/// so the full corpus dump can be loaded one portal at a time.
std::vector<ArgumentRecord> load_argsme(const std::filesystem::path& path, std::string_view portal);
std::vector<ArgumentRecord> parse_argsme(std::string_view json_text, std::string_view portal);

CorpusStats corpus_stats(std::span<const ArgumentRecord> records);

enum class SamplingMode { Stratified, Uniform };

/// Per-label quotas by largest-remainder apportionment; residual seats go
/// to the largest remainders, ties resolved For < Against < NoArgument.
LabelCounts stratum_allocation(const LabelCounts& population, std::size_t n);

/// Seeded subsample of exactly `n` records. Output order depends only on
/// (records, n, seed, mode).
std::vector<ArgumentRecord> stratified_sample(std::span<const ArgumentRecord> records,
                                              std::size_t n, std::uint64_t seed,
                                              SamplingMode mode = SamplingMode::Stratified);

// Canonical one-record-per-line JSON.
std::string to_jsonl(std::span<const ArgumentRecord> records);
std::vector<ArgumentRecord> parse_jsonl(std::string_view text);
void save_jsonl(const std::filesystem::path& path, std::span<const ArgumentRecord> records);
std::vector<ArgumentRecord> load_jsonl(const std::filesystem::path& path);

}  // namespace stancebench
