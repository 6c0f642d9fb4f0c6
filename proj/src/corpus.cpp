#include "stancebench/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "stancebench/error.hpp"
#include "text_util.hpp"

namespace stancebench {

using nlohmann::json;

namespace {

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::optional<Label> ukp_annotation(std::string_view value) {
  const std::string s = detail::to_lower(detail::trim(value));
  if (s == "argument_for") return Label::For;
  if (s == "argument_against") return Label::Against;
  if (s == "noargument") return Label::NoArgument;
  return std::nullopt;
}

// Unbiased integer in [0, bound) from a 64-bit engine. The standard
// distributions are implementation-defined, which would make samples differ
// between standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

LabelCounts CorpusStats::overall() const {
  LabelCounts sum{};
  for (const auto& [topic, counts] : per_topic)
    for (std::size_t i = 0; i < kLabelCount; ++i) sum[i] += counts[i];
  return sum;
}

std::size_t CorpusStats::count(std::string_view topic, Label label) const {
  auto it = per_topic.find(std::string(topic));
  return it == per_topic.end() ? 0 : it->second[index_of(label)];
}

std::string CorpusStats::to_csv() const {
  std::string out = "topic,label,count\n";
  for (const auto& [topic, counts] : per_topic)
    for (Label label : kAllLabels)
      out += detail::csv_field(topic) + "," + std::string(to_string(label)) + "," +
             std::to_string(counts[index_of(label)]) + "\n";
  return out;
}

std::vector<ArgumentRecord> parse_ukp(std::string_view tsv, std::string_view topic) {
  const auto lines = detail::split(tsv, '\n');
  if (lines.empty() || detail::trim(lines.front()).empty())
    throw Error(ErrorCode::MissingColumn, "UKP file has no header row");

  const auto header = detail::split(strip_cr(lines.front()), '\t');
  std::optional<std::size_t> sentence_col, annotation_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = detail::to_lower(detail::trim(header[i]));
    if (name == "sentence") sentence_col = i;
    if (name == "annotation") annotation_col = i;
  }
  if (!sentence_col || !annotation_col)
    throw Error(ErrorCode::MissingColumn, "UKP header must contain 'sentence' and 'annotation'");
  const std::size_t needed = std::max(*sentence_col, *annotation_col) + 1;

  std::vector<ArgumentRecord> records;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const std::string_view line = strip_cr(lines[ln]);
    if (detail::trim(line).empty()) continue;
    const std::size_t line_no = ln + 1;
    const auto fields = detail::split(line, '\t');
    if (fields.size() < needed)
      throw Error(ErrorCode::MissingColumn,
                  "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields, expected at least " + std::to_string(needed));
    const auto gold = ukp_annotation(fields[*annotation_col]);
    if (!gold)
      throw Error(ErrorCode::UnknownAnnotation, "line " + std::to_string(line_no) + ": '" +
                                                    std::string(fields[*annotation_col]) + "'");
    const std::string_view text = fields[*sentence_col];
    if (detail::trim(text).empty())
      throw Error(ErrorCode::EmptySentence, "line " + std::to_string(line_no));

    ArgumentRecord r;
    r.id = "ukp/" + std::string(topic) + "/" + std::to_string(records.size() + 1);
    r.dataset = DatasetKind::UKP;
    r.topic = std::string(topic);
    r.text = std::string(text);
    r.gold = *gold;
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ArgumentRecord> load_ukp(const std::filesystem::path& path, std::string_view topic) {
  return parse_ukp(detail::read_file(path), topic);
}

std::vector<ArgumentRecord> parse_argsme(std::string_view json_text, std::string_view portal) {
  json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedJson, "not valid JSON");

  const json* debates = nullptr;
  if (doc.is_array()) {
    debates = &doc;
  } else if (doc.is_object()) {
    if (auto it = doc.find("arguments"); it != doc.end() && it->is_array()) debates = &*it;
    for (auto it = doc.begin(); !debates && it != doc.end(); ++it)
      if (it->is_array()) debates = &*it;
  }
  if (!debates) throw Error(ErrorCode::MalformedJson, "expected an array of debates");

  const std::string lowered_portal = detail::to_lower(portal);
  std::vector<ArgumentRecord> records;
  std::size_t debate_index = 0;
  for (const json& debate : *debates) {
    ++debate_index;
    const std::string where = "debate " + std::to_string(debate_index);
    if (!debate.is_object()) throw Error(ErrorCode::MalformedJson, where + " is not an object");
    if (auto ctx = debate.find("context"); ctx != debate.end() && ctx->is_object()) {
      auto domain = ctx->find("sourceDomain");
      if (domain != ctx->end() && domain->is_string() &&
          detail::to_lower(domain->get_ref<const std::string&>()).find(lowered_portal) == std::string::npos)
        continue;
    }
    auto conclusion = debate.find("conclusion");
    if (conclusion == debate.end() || !conclusion->is_string() ||
        detail::trim(conclusion->get_ref<const std::string&>()).empty())
      throw Error(ErrorCode::MissingConclusion, where);

    auto premises = debate.find("premises");
    if (premises == debate.end()) continue;
    if (!premises->is_array()) throw Error(ErrorCode::MalformedJson, where + ": premises is not an array");

    std::size_t premise_index = 0;
    for (const json& premise : *premises) {
      ++premise_index;
      const std::string pwhere = where + ", premise " + std::to_string(premise_index);
      if (!premise.is_object()) throw Error(ErrorCode::MalformedJson, pwhere + " is not an object");
      auto stance = premise.find("stance");
      if (stance == premise.end() || !stance->is_string())
        throw Error(ErrorCode::UnknownStance, pwhere + ": missing stance");
      const std::string s = detail::to_lower(detail::trim(stance->get_ref<const std::string&>()));
      Label gold;
      if (s == "pro") gold = Label::For;
      else if (s == "con") gold = Label::Against;
      else throw Error(ErrorCode::UnknownStance, pwhere + ": '" + stance->get<std::string>() + "'");

      auto text = premise.find("text");
      if (text == premise.end() || !text->is_string())
        throw Error(ErrorCode::MalformedJson, pwhere + ": missing text");
      if (detail::trim(text->get_ref<const std::string&>()).empty())
        throw Error(ErrorCode::EmptySentence, pwhere);

      ArgumentRecord r;
      r.id = "argsme/" + std::string(portal) + "/" + std::to_string(debate_index) + "/" +
             std::to_string(premise_index);
      r.dataset = DatasetKind::ArgsMe;
      r.topic = std::string(portal);
      r.thesis = conclusion->get<std::string>();
      r.text = text->get<std::string>();
      r.gold = gold;
      records.push_back(std::move(r));
    }
  }
  return records;
}

std::vector<ArgumentRecord> load_argsme(const std::filesystem::path& path, std::string_view portal) {
  return parse_argsme(detail::read_file(path), portal);
}

CorpusStats corpus_stats(std::span<const ArgumentRecord> records) {
  CorpusStats stats;
  for (const auto& r : records) {
    stats.per_topic[r.topic][index_of(r.gold)] += 1;
    ++stats.total;
  }
  return stats;
}

LabelCounts stratum_allocation(const LabelCounts& population, std::size_t n) {
  const std::size_t total = std::accumulate(population.begin(), population.end(), std::size_t{0});
  LabelCounts quota{};
  if (total == 0) return quota;

  // Exact integer arithmetic: quota_i = floor(p_i * n / total), remainder
  // compared through (p_i * n) mod total.
  std::array<std::size_t, kLabelCount> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    const unsigned __int128 scaled = static_cast<unsigned __int128>(population[i]) * n;
    quota[i] = static_cast<std::size_t>(scaled / total);
    remainder[i] = static_cast<std::size_t>(scaled % total);
    assigned += quota[i];
  }
  std::array<std::size_t, kLabelCount> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n && k < kLabelCount; ++k) {
    if (quota[order[k]] < population[order[k]]) {
      ++quota[order[k]];
      ++assigned;
    }
  }
  return quota;
}

std::vector<ArgumentRecord> stratified_sample(std::span<const ArgumentRecord> records, std::size_t n,
                                              std::uint64_t seed, SamplingMode mode) {
  if (n > records.size())
    throw Error(ErrorCode::SampleTooLarge, "requested " + std::to_string(n) + " of " +
                                               std::to_string(records.size()) + " records");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(n);

  if (mode == SamplingMode::Uniform) {
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    seeded_shuffle(all, rng);
    chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    std::array<std::vector<std::size_t>, kLabelCount> strata;
    for (std::size_t i = 0; i < records.size(); ++i) strata[index_of(records[i].gold)].push_back(i);
    const LabelCounts population{strata[0].size(), strata[1].size(), strata[2].size()};
    const LabelCounts quota = stratum_allocation(population, n);
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      seeded_shuffle(strata[l], rng);
      chosen.insert(chosen.end(), strata[l].begin(),
                    strata[l].begin() + static_cast<std::ptrdiff_t>(quota[l]));
    }
    // Interleave strata so downstream consumers do not see label blocks.
    seeded_shuffle(chosen, rng);
  }

  std::vector<ArgumentRecord> out;
  out.reserve(n);
  for (std::size_t i : chosen) out.push_back(records[i]);
  return out;
}

namespace {

json record_to_json(const ArgumentRecord& r) {
  return json{{"id", r.id},
              {"dataset", to_string(r.dataset)},
              {"topic", r.topic},
              {"thesis", r.thesis},
              {"text", r.text},
              {"gold", to_string(r.gold)}};
}

ArgumentRecord record_from_json(const json& j, std::size_t line_no) {
  const auto where = "line " + std::to_string(line_no);
  try {
    ArgumentRecord r;
    r.id = j.at("id").get<std::string>();
    auto ds = parse_dataset_kind(j.at("dataset").get<std::string>());
    if (!ds) throw Error(ErrorCode::MalformedJson, where + ": unknown dataset");
    r.dataset = *ds;
    r.topic = j.at("topic").get<std::string>();
    r.thesis = j.value("thesis", std::string{});
    r.text = j.at("text").get<std::string>();
    auto gold = parse_label_name(j.at("gold").get<std::string>());
    if (!gold) throw Error(ErrorCode::UnknownAnnotation, where);
    r.gold = *gold;
    if (detail::trim(r.text).empty()) throw Error(ErrorCode::EmptySentence, where);
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedJson, where + ": " + e.what());
  }
}

}  // namespace

std::string to_jsonl(std::span<const ArgumentRecord> records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r).dump() + "\n";
  return out;
}

std::vector<ArgumentRecord> parse_jsonl(std::string_view text) {
  std::vector<ArgumentRecord> records;
  std::unordered_set<std::string> ids;
  const auto lines = detail::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedJson, "line " + std::to_string(i + 1));
    auto r = record_from_json(j, i + 1);
    if (!ids.insert(r.id).second)
      throw Error(ErrorCode::MalformedJson, "duplicate record id '" + r.id + "'");
    records.push_back(std::move(r));
  }
  return records;
}

void save_jsonl(const std::filesystem::path& path, std::span<const ArgumentRecord> records) {
  detail::write_file(path, to_jsonl(records));
}

std::vector<ArgumentRecord> load_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(detail::read_file(path));
}

}  // namespace stancebench
