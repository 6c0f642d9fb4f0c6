#include "stancebench/orchestrator.hpp"

#include <algorithm>
#include <ctime>
#include <set>
#include <tuple>

#include "stancebench/error.hpp"
#include "stancebench/response_parser.hpp"
#include "text_util.hpp"

namespace stancebench {

using nlohmann::json;

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::PerPrompt: return "PerPrompt";
    case RunMode::CertaintyVote: return "CertaintyVote";
    case RunMode::CoT: return "CoT";
    case RunMode::FewShot: return "FewShot";
    case RunMode::Ensemble: return "Ensemble";
  }
  return "?";
}

std::optional<RunMode> parse_run_mode(std::string_view text) {
  const std::string s = detail::to_lower(detail::trim(text));
  if (s == "perprompt" || s == "per_prompt") return RunMode::PerPrompt;
  if (s == "certaintyvote" || s == "certainty_vote" || s == "certainty") return RunMode::CertaintyVote;
  if (s == "cot") return RunMode::CoT;
  if (s == "fewshot" || s == "few_shot") return RunMode::FewShot;
  if (s == "ensemble") return RunMode::Ensemble;
  return std::nullopt;
}

std::string mode_label(RunMode mode, std::optional<PromptKind> kind) {
  switch (mode) {
    case RunMode::PerPrompt: return kind ? std::string(to_string(*kind)) : "PerPrompt";
    case RunMode::CertaintyVote: return "Certainty";
    case RunMode::CoT: return "CoT";
    case RunMode::FewShot: return "FewShot";
    case RunMode::Ensemble: return "Ensemble";
  }
  return "?";
}

// --- configuration -----------------------------------------------------------

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.empty()) return path;
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::InvalidConfig, message);
}

ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  m.name = j.at("name").get<std::string>();
  m.endpoint = j.at("endpoint").get<std::string>();
  m.api_key_env = j.value("api_key_env", std::string{});
  m.temperature = j.value("temperature", m.temperature);
  m.max_tokens = j.value("max_tokens", m.max_tokens);
  m.request_timeout = j.value("request_timeout", m.request_timeout);
  m.max_retries = j.value("max_retries", m.max_retries);
  m.max_concurrency = j.value("max_concurrency", m.max_concurrency);
  return m;
}

json model_to_json(const ModelSpec& m) {
  return json{{"name", m.name},
              {"endpoint", m.endpoint},
              {"api_key_env", m.api_key_env},
              {"temperature", m.temperature},
              {"max_tokens", m.max_tokens},
              {"request_timeout", m.request_timeout},
              {"max_retries", m.max_retries},
              {"max_concurrency", m.max_concurrency}};
}

}  // namespace

RunConfig RunConfig::parse(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) config_error("config must be a JSON object");

  RunConfig c;
  try {
    for (const json& d : doc.at("datasets")) {
      PartitionSpec p;
      const auto kind = parse_dataset_kind(d.at("dataset").get<std::string>());
      if (!kind) config_error("unknown dataset '" + d.at("dataset").get<std::string>() + "'");
      p.dataset = *kind;
      p.topic = d.at("topic").get<std::string>();
      p.path = resolve(base_dir, d.at("path").get<std::string>());
      p.format = d.value("format", std::string{});
      c.partitions.push_back(std::move(p));
    }

    if (auto t = doc.find("topics"); t != doc.end() && t->is_object()) {
      c.topics = TopicTable::parse(t->dump());
    } else {
      c.topics_path = (t != doc.end() && t->is_string())
                          ? resolve(base_dir, t->get<std::string>())
                          : std::filesystem::path(STANCEBENCH_DATA_DIR) / "topics.json";
      c.topics = TopicTable::load(c.topics_path);
    }

    for (const json& m : doc.at("models")) c.models.push_back(model_from_json(m));

    if (auto p = doc.find("prompts"); p != doc.end()) {
      c.prompts.clear();
      for (const json& k : *p) {
        auto kind = parse_prompt_kind(k.get<std::string>());
        if (!kind || *kind == PromptKind::CoT || *kind == PromptKind::FewShot)
          config_error("prompts must be drawn from P1..P4, got '" + k.get<std::string>() + "'");
        c.prompts.push_back(*kind);
      }
    }
    if (auto m = doc.find("modes"); m != doc.end()) {
      c.modes.clear();
      for (const json& k : *m) {
        auto mode = parse_run_mode(k.get<std::string>());
        if (!mode) config_error("unknown mode '" + k.get<std::string>() + "'");
        c.modes.push_back(*mode);
      }
    }
    if (auto s = doc.find("sampling"); s != doc.end()) {
      if (auto n = s->find("n"); n != s->end() && !n->is_null()) c.sample_size = n->get<std::size_t>();
      c.seed = s->value("seed", std::uint64_t{0});
      const std::string mode = detail::to_lower(s->value("mode", std::string("stratified")));
      if (mode == "uniform") c.sampling = SamplingMode::Uniform;
      else if (mode != "stratified") config_error("sampling.mode must be stratified or uniform");
    }
    if (auto g = doc.find("gateway"); g != doc.end()) {
      if (auto cache = g->find("cache"); cache != g->end() && cache->is_string())
        c.cache_path = resolve(base_dir, cache->get<std::string>());
      c.offline = g->value("offline", false);
    }
    if (auto p = doc.find("policies"); p != doc.end()) {
      if (auto u = p->find("unparsed"); u != p->end()) {
        auto policy = parse_unparsed_policy(u->get<std::string>());
        if (!policy) config_error("policies.unparsed must be error or drop");
        c.unparsed = *policy;
      }
      if (auto g = p->find("gamma"); g != p->end() && !g->is_null()) c.gamma = g->get<double>();
      if (auto e = p->find("ensemble"); e != p->end()) {
        auto strategy = parse_ensemble_strategy(e->get<std::string>());
        if (!strategy) config_error("policies.ensemble must be Plurality or CertaintySum");
        c.ensemble_strategy = *strategy;
      }
    }
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return parse(detail::read_file(path), path.parent_path());
}

json RunConfig::to_json() const {
  json datasets = json::array();
  for (const auto& p : partitions)
    datasets.push_back({{"dataset", to_string(p.dataset)},
                        {"topic", p.topic},
                        {"path", p.path.string()},
                        {"format", p.format}});
  json topic_obj = json::object();
  for (const auto& [key, spec] : topics.topics()) {
    json t{{"short", spec.short_form}, {"thesis", spec.thesis}};
    if (spec.exemplars)
      t["examples"] = {{"for", spec.exemplars->for_example},
                       {"against", spec.exemplars->against_example},
                       {"no_argument", spec.exemplars->no_argument_example}};
    topic_obj[key] = std::move(t);
  }
  json model_arr = json::array();
  for (const auto& m : models) model_arr.push_back(model_to_json(m));
  json prompt_arr = json::array();
  for (auto k : prompts) prompt_arr.push_back(to_string(k));
  json mode_arr = json::array();
  for (auto m : modes) mode_arr.push_back(to_string(m));

  return json{
      {"datasets", std::move(datasets)},
      {"topics", std::move(topic_obj)},
      {"models", std::move(model_arr)},
      {"prompts", std::move(prompt_arr)},
      {"modes", std::move(mode_arr)},
      {"sampling",
       {{"n", sample_size ? json(*sample_size) : json(nullptr)},
        {"seed", seed},
        {"mode", sampling == SamplingMode::Stratified ? "stratified" : "uniform"}}},
      {"gateway", {{"cache", cache_path.string()}, {"offline", offline}}},
      {"policies",
       {{"unparsed", to_string(unparsed)},
        {"gamma", gamma ? json(*gamma) : json(nullptr)},
        {"ensemble", to_string(ensemble_strategy)},
        {"averaging", "macro"}}},
  };
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

bool RunConfig::has_mode(RunMode mode) const {
  return std::find(modes.begin(), modes.end(), mode) != modes.end();
}

void RunConfig::validate() const {
  if (partitions.empty()) config_error("no datasets configured");
  if (models.empty()) config_error("no models configured");
  std::set<std::string> names;
  for (const auto& m : models) {
    m.validate();
    if (!names.insert(m.name).second) config_error("duplicate model name '" + m.name + "'");
    if (m.name == kEnsembleModel) config_error("model name 'ensemble' is reserved");
  }
  std::set<std::string> topics_seen;
  for (const auto& p : partitions)
    if (!topics_seen.insert(p.topic).second) config_error("duplicate dataset topic '" + p.topic + "'");
  std::set<PromptKind> kinds(prompts.begin(), prompts.end());
  if (kinds.size() != prompts.size()) config_error("duplicate prompt kinds");
  if (modes.empty()) config_error("no modes configured");
  if ((has_mode(RunMode::PerPrompt) || has_mode(RunMode::Ensemble)) && prompts.empty())
    config_error("PerPrompt and Ensemble modes need at least one prompt");
  if (has_mode(RunMode::CertaintyVote) && prompts.size() < 2)
    config_error("CertaintyVote mode needs at least two prompts");
  if (has_mode(RunMode::Ensemble) && models.size() < 2)
    config_error("Ensemble mode needs at least two models");

  const bool needs_topic_table = !prompts.empty() || has_mode(RunMode::CoT);
  for (const auto& p : partitions)
    if (needs_topic_table && p.dataset == DatasetKind::UKP && !topics.find(p.topic))
      throw Error(ErrorCode::MissingTopicSpec, "no thesis configured for UKP topic '" + p.topic + "'");
}

std::vector<Partition> prepare_partitions(const RunConfig& config) {
  std::vector<Partition> out;
  for (const auto& spec : config.partitions) {
    std::string format = detail::to_lower(spec.format);
    if (format.empty()) {
      const auto ext = detail::to_lower(spec.path.extension().string());
      format = ext == ".jsonl" ? "jsonl" : (spec.dataset == DatasetKind::UKP ? "tsv" : "json");
    }
    std::vector<ArgumentRecord> records;
    if (format == "jsonl") {
      records = load_jsonl(spec.path);
      std::erase_if(records, [&](const ArgumentRecord& r) { return r.topic != spec.topic; });
    } else if (format == "tsv") {
      records = load_ukp(spec.path, spec.topic);
    } else if (format == "json") {
      records = load_argsme(spec.path, spec.topic);
    } else {
      config_error("unknown dataset format '" + spec.format + "'");
    }
    if (config.sample_size && *config.sample_size < records.size())
      records = stratified_sample(records, *config.sample_size, config.seed, config.sampling);
    else if (config.sample_size && *config.sample_size > records.size())
      throw Error(ErrorCode::SampleTooLarge, spec.topic + ": requested " + std::to_string(*config.sample_size) +
                                                 " of " + std::to_string(records.size()) + " records");
    if (records.empty()) throw Error(ErrorCode::MissingData, "dataset '" + spec.topic + "' has no records");
    out.push_back(Partition{spec, std::move(records)});
  }
  return out;
}

const MetricsRow* RunResult::find_metrics(std::string_view topic, std::string_view model,
                                          std::string_view mode) const {
  for (const auto& row : metrics)
    if (row.key.topic == topic && row.key.model == model && row.key.mode == mode) return &row;
  return nullptr;
}

// --- experiment --------------------------------------------------------------

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

using VoteKey = std::tuple<std::size_t, std::size_t, std::size_t, PromptKind>;  // model, partition, record, kind

struct Collected {
  std::map<VoteKey, std::size_t> index;  // into RunResult::votes
};

std::vector<PromptKind> kinds_to_query(const RunConfig& config) {
  std::vector<PromptKind> kinds;
  if (config.has_mode(RunMode::PerPrompt) || config.has_mode(RunMode::CertaintyVote) ||
      config.has_mode(RunMode::Ensemble))
    kinds = config.prompts;
  if (config.has_mode(RunMode::CoT)) kinds.push_back(PromptKind::CoT);
  if (config.has_mode(RunMode::FewShot)) kinds.push_back(PromptKind::FewShot);
  return kinds;
}

bool is_vote_prompt(const RunConfig& config, PromptKind kind) {
  return std::find(config.prompts.begin(), config.prompts.end(), kind) != config.prompts.end();
}

void fail_on_replay_miss(const GatewayError& e) {
  if (e.code() == ErrorCode::CacheMissInReplayOnlyMode) throw e;
}

Collected collect_answers(const RunConfig& config, Gateway& gateway, RunResult& result) {
  Collected collected;
  const auto kinds = kinds_to_query(config);
  std::set<std::pair<std::size_t, PromptKind>> unsupported;

  for (std::size_t m = 0; m < config.models.size(); ++m) {
    const ModelSpec& model = config.models[m];

    struct Job {
      std::size_t partition, record;
      RenderedPrompt prompt;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < result.partitions.size(); ++p) {
      const Partition& part = result.partitions[p];
      for (PromptKind kind : kinds) {
        if (unsupported.count({p, kind})) continue;
        for (std::size_t r = 0; r < part.records.size(); ++r) {
          try {
            jobs.push_back(Job{p, r, render(kind, part.records[r], config.topics)});
          } catch (const Error& e) {
            if (e.code() != ErrorCode::UnsupportedKind) throw;
            unsupported.insert({p, kind});
            result.partition_errors.push_back(
                PartitionError{part.spec.topic, mode_label(RunMode::FewShot), e.what()});
            break;
          }
        }
      }
    }

    std::vector<Conversation> first_turns;
    first_turns.reserve(jobs.size());
    for (const Job& job : jobs) first_turns.push_back({ChatMessage{"user", job.prompt.text}});
    const auto answers = gateway.complete_batch(model, first_turns);

    std::vector<std::size_t> vote_of_job(jobs.size());
    std::vector<std::size_t> certainty_jobs;
    std::vector<Conversation> second_turns;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const Job& job = jobs[j];
      const ArgumentRecord& record = result.partitions[job.partition].records[job.record];
      VoteEntry v;
      v.partition = job.partition;
      v.record = job.record;
      v.model = model.name;
      v.vote.kind = job.prompt.kind;
      if (!answers[j].ok()) {
        fail_on_replay_miss(*answers[j].error);
        result.failures.push_back(Failure{record.id, model.name, std::string(to_string(job.prompt.kind)),
                                          "answer", answers[j].error->what()});
      } else {
        v.raw_response = answers[j].exchange->raw_response;
        if (job.prompt.format == AnswerFormat::CotTable) {
          const CotTrace trace = parse_cot(v.raw_response, job.prompt.allows_no_argument);
          v.vote.label = trace.final;
          v.strictness = trace.steps.empty() ? Strictness::Lenient : Strictness::Strict;
        } else {
          const ParsedAnswer parsed = parse_label(v.raw_response, job.prompt.format, job.prompt.allows_no_argument);
          v.vote.label = parsed.label;
          v.strictness = parsed.strictness;
        }
        if (is_vote_prompt(config, job.prompt.kind)) {
          certainty_jobs.push_back(j);
          second_turns.push_back({ChatMessage{"user", job.prompt.text},
                                  ChatMessage{"assistant", v.raw_response},
                                  ChatMessage{"user", render_certainty(job.prompt)}});
        }
      }
      vote_of_job[j] = result.votes.size();
      collected.index[{m, job.partition, job.record, job.prompt.kind}] = result.votes.size();
      result.votes.push_back(std::move(v));
    }

    const auto certainties = gateway.complete_batch(model, second_turns);
    for (std::size_t c = 0; c < certainty_jobs.size(); ++c) {
      VoteEntry& v = result.votes[vote_of_job[certainty_jobs[c]]];
      if (!certainties[c].ok()) {
        fail_on_replay_miss(*certainties[c].error);
        result.failures.push_back(
            Failure{result.partitions[v.partition].records[v.record].id, model.name,
                    std::string(to_string(v.vote.kind)), "certainty", certainties[c].error->what()});
        continue;
      }
      v.vote.certainty = parse_certainty(certainties[c].exchange->raw_response);
    }
  }
  return collected;
}

void score(RunResult& result, const MetricsKey& key, std::span<const Label> golds,
           std::span<const Prediction> predictions) {
  const ConfusionMatrix matrix = confusion(golds, predictions, result.config.unparsed);
  MetricsRow row;
  row.key = key;
  row.report = metrics(matrix);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (!predictions[i]) ++row.unparsed;
    else if (*predictions[i] == golds[i]) ++row.correct;
    else ++row.incorrect;
  }
  result.metrics.push_back(std::move(row));
  result.errors.push_back(ErrorRow{key, error_breakdown(golds, predictions)});
}

std::vector<Label> golds_of(const Partition& p) {
  std::vector<Label> golds;
  golds.reserve(p.records.size());
  for (const auto& r : p.records) golds.push_back(r.gold);
  return golds;
}

std::optional<ModelDecision> decide_or_unparsed(std::span<const PromptVote> votes, const RunConfig& config,
                                                const std::string& model) {
  try {
    return decide_algorithm1(votes, DecisionOptions{config.gamma}, model);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllUnparsed) throw;
    return std::nullopt;
  }
}

std::vector<PromptVote> votes_for(const RunResult& result, const Collected& collected, std::size_t m,
                                  std::size_t p, std::size_t r, std::span<const PromptKind> kinds) {
  std::vector<PromptVote> votes;
  for (PromptKind k : kinds) {
    auto it = collected.index.find({m, p, r, k});
    if (it != collected.index.end()) votes.push_back(result.votes[it->second].vote);
  }
  return votes;
}

}  // namespace

RunResult run_experiment(const RunConfig& config, Gateway& gateway) {
  return run_experiment(config, gateway, prepare_partitions(config));
}

RunResult run_experiment(const RunConfig& config, Gateway& gateway, std::vector<Partition> partitions) {
  config.validate();
  RunResult result;
  result.config = config;
  result.partitions = std::move(partitions);
  result.provenance.config_hash = config.hash();
  result.provenance.started = utc_now();
  if (!config.offline)
    for (const auto& model : config.models) gateway.connect(model);
  const GatewayStats before = gateway.stats();

  const Collected collected = collect_answers(config, gateway, result);

  const bool want_decisions = config.has_mode(RunMode::CertaintyVote) || config.has_mode(RunMode::Ensemble);
  // decisions[m][p][r]
  std::vector<std::vector<std::vector<std::optional<ModelDecision>>>> decisions(config.models.size());

  for (std::size_t m = 0; m < config.models.size(); ++m) {
    const std::string& model = config.models[m].name;
    decisions[m].resize(result.partitions.size());
    for (std::size_t p = 0; p < result.partitions.size(); ++p) {
      const Partition& part = result.partitions[p];
      const auto golds = golds_of(part);
      const std::string dataset(to_string(part.spec.dataset));
      auto single_prompt_row = [&](PromptKind kind, const std::string& mode) {
        std::vector<Prediction> preds;
        preds.reserve(part.records.size());
        for (std::size_t r = 0; r < part.records.size(); ++r) {
          auto it = collected.index.find({m, p, r, kind});
          if (it == collected.index.end()) return;  // kind unsupported on this partition
          preds.push_back(result.votes[it->second].vote.label);
        }
        score(result, MetricsKey{dataset, part.spec.topic, model, mode}, golds, preds);
      };

      if (config.has_mode(RunMode::PerPrompt))
        for (PromptKind kind : config.prompts) single_prompt_row(kind, mode_label(RunMode::PerPrompt, kind));

      if (want_decisions) {
        decisions[m][p].resize(part.records.size());
        std::vector<Prediction> preds;
        for (std::size_t r = 0; r < part.records.size(); ++r) {
          const auto votes = votes_for(result, collected, m, p, r, config.prompts);
          decisions[m][p][r] = decide_or_unparsed(votes, config, model);
          preds.push_back(decisions[m][p][r] ? Prediction(decisions[m][p][r]->label) : std::nullopt);
          if (config.has_mode(RunMode::CertaintyVote))
            result.decisions.push_back(
                DecisionEntry{p, r, model, RunMode::CertaintyVote, preds.back(), decisions[m][p][r], {}});
        }
        if (config.has_mode(RunMode::CertaintyVote))
          score(result, MetricsKey{dataset, part.spec.topic, model, mode_label(RunMode::CertaintyVote)}, golds,
                preds);
      }

      if (config.has_mode(RunMode::CoT)) single_prompt_row(PromptKind::CoT, mode_label(RunMode::CoT));
      if (config.has_mode(RunMode::FewShot)) single_prompt_row(PromptKind::FewShot, mode_label(RunMode::FewShot));
    }
  }

  if (config.has_mode(RunMode::Ensemble)) {
    for (std::size_t p = 0; p < result.partitions.size(); ++p) {
      const Partition& part = result.partitions[p];
      std::vector<Prediction> preds;
      for (std::size_t r = 0; r < part.records.size(); ++r) {
        std::vector<ModelDecision> members;
        std::vector<std::string> member_labels;
        for (std::size_t m = 0; m < config.models.size(); ++m) {
          const auto& d = decisions[m][p][r];
          member_labels.emplace_back(d ? to_string(d->label) : "Unparsed");
          if (d) members.push_back(*d);
        }
        Prediction label;
        if (!members.empty()) label = ensemble_decide(members, config.ensemble_strategy).label;
        preds.push_back(label);
        result.decisions.push_back(
            DecisionEntry{p, r, std::string(kEnsembleModel), RunMode::Ensemble, label, std::nullopt, member_labels});
      }
      score(result,
            MetricsKey{std::string(to_string(part.spec.dataset)), part.spec.topic, std::string(kEnsembleModel),
                       mode_label(RunMode::Ensemble)},
            golds_of(part), preds);
    }
  }

  const GatewayStats after = gateway.stats();
  result.provenance.cache_hits = after.cache_hits - before.cache_hits;
  result.provenance.backend_calls = after.backend_calls - before.backend_calls;
  result.provenance.finished = utc_now();
  return result;
}

// --- persistence -------------------------------------------------------------

namespace {

json certainty_json(const Certainty& c) { return c ? json(*c) : json(nullptr); }

}  // namespace

void write_run(const std::filesystem::path& dir, const RunResult& result) {
  std::filesystem::create_directories(dir);
  detail::write_file(dir / "config.json", result.config.to_json().dump(2) + "\n");

  std::string sample;
  for (const auto& p : result.partitions) sample += to_jsonl(p.records);
  detail::write_file(dir / "sample.jsonl", sample);

  std::string votes;
  for (const auto& v : result.votes) {
    const ArgumentRecord& rec = result.partitions[v.partition].records[v.record];
    votes += json{{"record_id", rec.id},
                  {"dataset", to_string(rec.dataset)},
                  {"topic", rec.topic},
                  {"gold", to_string(rec.gold)},
                  {"model", v.model},
                  {"kind", to_string(v.vote.kind)},
                  {"label", to_string(v.vote.label)},
                  {"certainty", certainty_json(v.vote.certainty)},
                  {"strictness", v.strictness == Strictness::Strict ? "Strict" : "Lenient"},
                  {"raw", v.raw_response}}
                 .dump() +
             "\n";
  }
  detail::write_file(dir / "votes.jsonl", votes);

  std::string decisions;
  for (const auto& d : result.decisions) {
    const ArgumentRecord& rec = result.partitions[d.partition].records[d.record];
    json j{{"record_id", rec.id},
           {"dataset", to_string(rec.dataset)},
           {"topic", rec.topic},
           {"gold", to_string(rec.gold)},
           {"model", d.model},
           {"mode", mode_label(d.mode)},
           {"label", to_string(d.label)}};
    if (d.mode == RunMode::CertaintyVote) {
      if (d.decision) {
        j["method"] = to_string(d.decision->method);
        j["counts"] = {d.decision->tally.delta_for, d.decision->tally.delta_against, d.decision->tally.delta_no};
        j["scores"] = d.decision->weighted_scores ? json(*d.decision->weighted_scores) : json(nullptr);
      } else {
        j["method"] = nullptr;
        j["counts"] = nullptr;
        j["scores"] = nullptr;
      }
    } else {
      j["method"] = to_string(result.config.ensemble_strategy);
      j["members"] = d.members;
      j["scores"] = nullptr;
    }
    decisions += j.dump() + "\n";
  }
  detail::write_file(dir / "decisions.jsonl", decisions);

  std::string metrics_csv = std::string(kMetricsCsvHeader) + "\n";
  for (const auto& row : result.metrics) metrics_csv += metrics_csv_row(row.key, row.report) + "\n";
  detail::write_file(dir / "metrics.csv", metrics_csv);

  std::string errors_csv = "dataset,topic,model,mode";
  for (ErrorType t : kAllErrorTypes) errors_csv += "," + std::string(to_string(t));
  errors_csv += ",total\n";
  for (const auto& row : result.errors) {
    errors_csv += detail::csv_field(row.key.dataset) + "," + detail::csv_field(row.key.topic) + "," +
                  detail::csv_field(row.key.model) + "," + detail::csv_field(row.key.mode);
    for (std::size_t c : row.breakdown.counts) errors_csv += "," + std::to_string(c);
    errors_csv += "," + std::to_string(row.breakdown.total_errors) + "\n";
  }
  detail::write_file(dir / "errors.csv", errors_csv);

  std::string failures;
  for (const auto& f : result.failures)
    failures += json{{"record_id", f.record_id}, {"model", f.model}, {"kind", f.kind}, {"turn", f.turn}, {"error", f.error}}
                    .dump() +
                "\n";
  detail::write_file(dir / "failures.jsonl", failures);

  json partition_errors = json::array();
  for (const auto& e : result.partition_errors)
    partition_errors.push_back({{"topic", e.topic}, {"mode", e.mode}, {"message", e.message}});
  json provenance{{"config_hash", result.provenance.config_hash},
                  {"cache_hits", result.provenance.cache_hits},
                  {"backend_calls", result.provenance.backend_calls},
                  {"started", result.provenance.started},
                  {"finished", result.provenance.finished},
                  {"failures", result.failures.size()},
                  {"partition_errors", std::move(partition_errors)}};
  detail::write_file(dir / "provenance.json", provenance.dump(2) + "\n");
}

// --- ablation ----------------------------------------------------------------

std::string AblationResult::to_csv() const {
  std::string out = "model,topic";
  for (const auto& c : columns) out += "," + c;
  out += "\n";
  for (const auto& row : rows) {
    out += detail::csv_field(row.model) + "," + detail::csv_field(row.topic);
    for (double a : row.accuracy) out += detail::format(",%.6f", a);
    out += "\n";
  }
  return out;
}

AblationResult ablate(const RunResult& run) {
  const RunConfig& config = run.config;
  if (config.prompts.size() != 4) config_error("ablation needs exactly four prompts");

  std::array<std::vector<PromptKind>, 5> subsets;
  AblationResult out;
  for (std::size_t drop = 0; drop < 4; ++drop) {
    std::string name;
    for (std::size_t k = 0; k < 4; ++k) {
      if (k == drop) continue;
      subsets[drop].push_back(config.prompts[k]);
      const std::string kind(to_string(config.prompts[k]));
      name += name.empty() ? kind : "+" + kind.substr(1);
    }
    out.columns[drop] = name;
  }
  subsets[4] = config.prompts;
  out.columns[4] = "P1+2+3+4";
  {
    std::string full;
    for (PromptKind k : config.prompts) {
      const std::string kind(to_string(k));
      full += full.empty() ? kind : "+" + kind.substr(1);
    }
    out.columns[4] = full;
  }

  std::map<VoteKey, const PromptVote*> index;
  std::map<std::string, std::size_t> model_index;
  for (std::size_t m = 0; m < config.models.size(); ++m) model_index[config.models[m].name] = m;
  for (const auto& v : run.votes) index[{model_index.at(v.model), v.partition, v.record, v.vote.kind}] = &v.vote;

  for (std::size_t m = 0; m < config.models.size(); ++m) {
    for (std::size_t p = 0; p < run.partitions.size(); ++p) {
      const Partition& part = run.partitions[p];
      const auto golds = golds_of(part);
      AblationRow row{config.models[m].name, std::string(to_string(part.spec.dataset)), part.spec.topic, {}};
      for (std::size_t s = 0; s < subsets.size(); ++s) {
        std::vector<Prediction> preds;
        for (std::size_t r = 0; r < part.records.size(); ++r) {
          std::vector<PromptVote> votes;
          for (PromptKind k : subsets[s]) {
            auto it = index.find({m, p, r, k});
            if (it == index.end())
              throw Error(ErrorCode::MissingData, "no " + std::string(to_string(k)) + " vote for " +
                                                      part.records[r].id + " / " + config.models[m].name);
            votes.push_back(*it->second);
          }
          const auto d = decide_or_unparsed(votes, config, config.models[m].name);
          preds.push_back(d ? Prediction(d->label) : std::nullopt);
        }
        row.accuracy[s] = metrics(confusion(golds, preds, config.unparsed)).accuracy;
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

AblationResult run_ablation(const RunConfig& config, Gateway& gateway) {
  RunConfig c = config;
  c.modes = {RunMode::CertaintyVote};
  if (c.prompts.size() != 4) config_error("ablation needs exactly four prompts");
  return ablate(run_experiment(c, gateway));
}

// --- few-shot comparison -----------------------------------------------------

std::string FewShotRow::better() const {
  if (!three_shot || !zero_shot) return {};
  if (*three_shot > *zero_shot) return "3-shot";
  if (*zero_shot > *three_shot) return "0-shot";
  return "tie";
}

std::string FewShotComparison::to_csv() const {
  std::string out = "model,topic,three_shot,zero_shot,better,error\n";
  auto cell = [](const std::optional<double>& v) { return v ? detail::format("%.6f", *v) : std::string(); };
  for (const auto& r : rows)
    out += detail::csv_field(r.model) + "," + detail::csv_field(r.topic) + "," + cell(r.three_shot) + "," +
           cell(r.zero_shot) + "," + r.better() + "," + detail::csv_field(r.error) + "\n";
  return out;
}

std::string FewShotComparison::to_markdown() const {
  std::vector<std::string> models;
  std::vector<std::string> topics;
  for (const auto& r : rows) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    if (std::find(topics.begin(), topics.end(), r.topic) == topics.end()) topics.push_back(r.topic);
  }
  std::string out = "| Dataset |";
  for (const auto& m : models) out += " " + m + " 3-shot \\| 0-shot |";
  out += "\n|---|";
  for (std::size_t i = 0; i < models.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& t : topics) {
    out += "| UKP - " + t + " |";
    for (const auto& m : models) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const FewShotRow& r) { return r.model == m && r.topic == t; });
      if (it == rows.end() || !it->three_shot || !it->zero_shot) {
        out += " - |";
        continue;
      }
      const std::string b = it->better();
      const std::string three = detail::percent1(*it->three_shot);
      const std::string zero = detail::percent1(*it->zero_shot);
      out += " " + (b == "3-shot" ? "**" + three + "**" : three) + " \\| " +
             (b == "0-shot" ? "**" + zero + "**" : zero) + " |";
    }
    out += "\n";
  }
  return out;
}

FewShotComparison compare_fewshot(const RunConfig& config, Gateway& gateway) {
  RunConfig c = config;
  c.prompts = {PromptKind::P1};
  c.modes = {RunMode::PerPrompt, RunMode::FewShot};
  std::erase_if(c.partitions, [](const PartitionSpec& p) { return p.dataset != DatasetKind::UKP; });
  if (c.partitions.empty()) config_error("few-shot comparison needs at least one UKP dataset");

  const RunResult run = run_experiment(c, gateway);
  FewShotComparison out;
  for (const auto& model : c.models) {
    for (const auto& part : run.partitions) {
      FewShotRow row;
      row.model = model.name;
      row.topic = part.spec.topic;
      if (const auto* zero = run.find_metrics(part.spec.topic, model.name, "P1")) row.zero_shot = zero->report.accuracy;
      if (const auto* three = run.find_metrics(part.spec.topic, model.name, "FewShot"))
        row.three_shot = three->report.accuracy;
      for (const auto& e : run.partition_errors)
        if (e.topic == part.spec.topic) row.error = e.message;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace stancebench
