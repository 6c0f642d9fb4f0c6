#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "stancebench/corpus.hpp"
#include "stancebench/error.hpp"

using namespace stancebench;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("parse_ukp reads the sentence and annotation columns") {
  const std::string tsv =
      "topic\tSentence\tAnnotation\tset\n"
      "abortion\tFirst sentence.\tArgument_for\ttrain\r\n"
      "abortion\tSecond sentence.\targument_against\ttest\n"
      "\n"
      "abortion\tThird sentence.\tNoArgument\tval\n";
  const auto records = parse_ukp(tsv, "abortion");
  REQUIRE(records.size() == 3);
  CHECK(records[0].gold == Label::For);
  CHECK(records[1].gold == Label::Against);
  CHECK(records[2].gold == Label::NoArgument);
  CHECK(records[0].text == "First sentence.");
  CHECK(records[2].id == "ukp/abortion/3");
  CHECK(records[1].dataset == DatasetKind::UKP);
  CHECK(records[1].topic == "abortion");
}

TEST_CASE("parse_ukp rejects malformed input") {
  CHECK(code_of([] { parse_ukp("topic\tsentence\n", "t"); }) == ErrorCode::MissingColumn);
  CHECK(code_of([] { parse_ukp("", "t"); }) == ErrorCode::MissingColumn);
  CHECK(code_of([] { parse_ukp("sentence\tannotation\nA text\tMaybe\n", "t"); }) == ErrorCode::UnknownAnnotation);
  CHECK(code_of([] { parse_ukp("sentence\tannotation\n  \tNoArgument\n", "t"); }) == ErrorCode::EmptySentence);
  CHECK(code_of([] { parse_ukp("sentence\tannotation\nonly one field\n", "t"); }) == ErrorCode::MissingColumn);
}

TEST_CASE("parse_ukp reports the offending line") {
  try {
    parse_ukp("sentence\tannotation\nok\tNoArgument\nbad\tSomething\n", "t");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("parse_argsme flattens premises under their conclusion") {
  const std::string doc = R"({"arguments": [
    {"conclusion": "Cats are better than dogs", "premises": [
      {"text": "Cats are quiet.", "stance": "PRO"},
      {"text": "Dogs are loyal.", "stance": "con"}]},
    {"conclusion": "No premises here"},
    {"conclusion": "Taxes", "premises": [{"text": "Schools need money.", "stance": "Pro"}]}
  ]})";
  const auto records = parse_argsme(doc, "idebate");
  REQUIRE(records.size() == 3);
  CHECK(records[0].thesis == "Cats are better than dogs");
  CHECK(records[0].gold == Label::For);
  CHECK(records[1].gold == Label::Against);
  CHECK(records[2].id == "argsme/idebate/3/1");
  CHECK(records[2].dataset == DatasetKind::ArgsMe);
  CHECK(records[2].topic == "idebate");

  CHECK(parse_argsme(R"([{"conclusion": "c", "premises": [{"text": "t", "stance": "CON"}]}])", "p").size() == 1);
}

TEST_CASE("parse_argsme keeps only the requested portal when a source domain is present") {
  const std::string doc = R"([
    {"conclusion": "a", "premises": [{"text": "x", "stance": "PRO"}], "context": {"sourceDomain": "idebate.org"}},
    {"conclusion": "b", "premises": [{"text": "y", "stance": "CON"}], "context": {"sourceDomain": "debatewise.org"}},
    {"conclusion": "c", "premises": [{"text": "z", "stance": "CON"}]}
  ])";
  const auto records = parse_argsme(doc, "debatewise");
  REQUIRE(records.size() == 2);
  CHECK(records[0].thesis == "b");
  CHECK(records[0].id == "argsme/debatewise/2/1");
  CHECK(records[1].thesis == "c");
}

TEST_CASE("parse_argsme rejects malformed input") {
  CHECK(code_of([] { parse_argsme("not json", "p"); }) == ErrorCode::MalformedJson);
  CHECK(code_of([] { parse_argsme(R"({"x": 1})", "p"); }) == ErrorCode::MalformedJson);
  CHECK(code_of([] { parse_argsme(R"([{"premises": []}])", "p"); }) == ErrorCode::MissingConclusion);
  CHECK(code_of([] { parse_argsme(R"([{"conclusion": " ", "premises": []}])", "p"); }) ==
        ErrorCode::MissingConclusion);
  CHECK(code_of([] {
          parse_argsme(R"([{"conclusion": "c", "premises": [{"text": "t", "stance": "NEUTRAL"}]}])", "p");
        }) == ErrorCode::UnknownStance);
  CHECK(code_of([] { parse_argsme(R"([{"conclusion": "c", "premises": [{"text": "t"}]}])", "p"); }) ==
        ErrorCode::UnknownStance);
  CHECK(code_of([] {
          parse_argsme(R"([{"conclusion": "c", "premises": [{"text": "", "stance": "PRO"}]}])", "p");
        }) == ErrorCode::EmptySentence);
}

TEST_CASE("synthetic corpora have the requested counts") {
  const auto ukp = parse_ukp(testing::synthetic_ukp_tsv("cloning", 702, 825, 1472), "cloning");
  const CorpusStats s = corpus_stats(ukp);
  CHECK(s.total == 2999);
  CHECK(s.count("cloning", Label::For) == 702);
  CHECK(s.count("cloning", Label::Against) == 825);
  CHECK(s.count("cloning", Label::NoArgument) == 1472);
  CHECK(s.count("abortion", Label::For) == 0);

  const auto argsme = parse_argsme(testing::synthetic_argsme_json("idebate", 10, 7), "idebate");
  const LabelCounts c = corpus_stats(argsme).overall();
  CHECK(c[0] == 10);
  CHECK(c[1] == 7);
  CHECK(c[2] == 0);
}

TEST_CASE("corpus stats serialize as topic,label,count") {
  std::vector<ArgumentRecord> records{
      {"1", DatasetKind::UKP, "b", "", "x", Label::For},
      {"2", DatasetKind::UKP, "a", "", "y", Label::NoArgument},
  };
  CHECK(corpus_stats(records).to_csv() ==
        "topic,label,count\n"
        "a,For,0\na,Against,0\na,NoArgument,1\n"
        "b,For,1\nb,Against,0\nb,NoArgument,0\n");
}

TEST_CASE("stratum allocation uses largest remainders") {
  // abortion: For 634, Against 766, NoArgument 2282.
  const LabelCounts a = stratum_allocation({634, 766, 2282}, 200);
  CHECK(a[0] == 34);
  CHECK(a[1] == 42);
  CHECK(a[2] == 124);

  // Equal remainders resolve For before Against before NoArgument.
  const LabelCounts tie = stratum_allocation({1, 1, 1}, 2);
  CHECK(tie[0] == 1);
  CHECK(tie[1] == 1);
  CHECK(tie[2] == 0);

  CHECK(stratum_allocation({0, 0, 0}, 5) == LabelCounts{0, 0, 0});
  CHECK(stratum_allocation({5, 0, 3}, 8) == LabelCounts{5, 0, 3});
}

TEST_CASE("stratum allocation properties") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> pop(0, 3000);
  for (int trial = 0; trial < 2000; ++trial) {
    const LabelCounts p{pop(rng), pop(rng), pop(rng)};
    const std::size_t total = p[0] + p[1] + p[2];
    if (total == 0) continue;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, total)(rng);
    const LabelCounts q = stratum_allocation(p, n);
    CHECK(q[0] + q[1] + q[2] == n);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(q[i] <= p[i]);
      const double exact = static_cast<double>(p[i]) * static_cast<double>(n) / static_cast<double>(total);
      CHECK(std::fabs(static_cast<double>(q[i]) - exact) < 1.0);
    }
  }
}

TEST_CASE("stratified sampling is seeded, proportional and without replacement") {
  const auto records = parse_ukp(testing::synthetic_ukp_tsv("abortion", 634, 766, 2282), "abortion");
  const auto s1 = stratified_sample(records, 200, 42, SamplingMode::Stratified);
  const auto s2 = stratified_sample(records, 200, 42, SamplingMode::Stratified);
  const auto s3 = stratified_sample(records, 200, 43, SamplingMode::Stratified);
  CHECK(s1 == s2);
  CHECK(s1 != s3);
  REQUIRE(s1.size() == 200);

  std::set<std::string> ids;
  for (const auto& r : s1) ids.insert(r.id);
  CHECK(ids.size() == 200);

  const LabelCounts c = corpus_stats(s1).overall();
  CHECK(c == LabelCounts{34, 42, 124});

  // Labels are interleaved rather than emitted stratum by stratum.
  const bool blocked = std::is_sorted(s1.begin(), s1.end(), [](const ArgumentRecord& a, const ArgumentRecord& b) {
    return index_of(a.gold) < index_of(b.gold);
  });
  CHECK_FALSE(blocked);
}

TEST_CASE("uniform sampling and oversized requests") {
  const auto records = parse_ukp(testing::synthetic_ukp_tsv("t", 5, 5, 10), "t");
  const auto u = stratified_sample(records, 7, 1, SamplingMode::Uniform);
  CHECK(u.size() == 7);
  CHECK(u == stratified_sample(records, 7, 1, SamplingMode::Uniform));
  CHECK(stratified_sample(records, 20, 1).size() == 20);
  CHECK(stratified_sample(records, 0, 1).empty());
  CHECK(code_of([&] { stratified_sample(records, 21, 1); }) == ErrorCode::SampleTooLarge);
}

TEST_CASE("JSONL round trip") {
  const auto records = parse_argsme(testing::synthetic_argsme_json("debatewise", 4, 3), "debatewise");
  const std::string text = to_jsonl(records);
  CHECK(parse_jsonl(text) == records);

  testing::TempDir dir;
  save_jsonl(dir / "nested/records.jsonl", records);
  CHECK(load_jsonl(dir / "nested/records.jsonl") == records);

  const std::string line = text.substr(0, text.find('\n') + 1);
  CHECK(code_of([&] { parse_jsonl(line + line); }) == ErrorCode::MalformedJson);
  CHECK(code_of([] { parse_jsonl("{broken\n"); }) == ErrorCode::MalformedJson);
  CHECK(code_of([&] { load_jsonl(dir / "missing.jsonl"); }) == ErrorCode::Io);
}
