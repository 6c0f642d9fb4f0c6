#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "httplib.h"
#include "json.hpp"
#include "stancebench/error.hpp"
#include "stancebench/model_gateway.hpp"

using namespace stancebench;
using namespace std::chrono_literals;

namespace {

ModelSpec spec(std::string name = "m") {
  ModelSpec m;
  m.name = std::move(name);
  m.endpoint = "mock:unused";
  m.max_retries = 2;
  return m;
}

Conversation ask(std::string text) { return {ChatMessage{"user", std::move(text)}}; }

GatewayOptions fast(std::filesystem::path cache = {}) {
  GatewayOptions o;
  o.cache_path = std::move(cache);
  o.backoff_base = 1ms;
  return o;
}

// Fails with the given errors first, then echoes the last user message.
class ScriptedFailures : public Backend {
 public:
  explicit ScriptedFailures(std::vector<GatewayError> failures) : failures_(std::move(failures)) {}
  std::string send(const ModelSpec&, const Conversation& c) override {
    const std::size_t n = calls++;
    if (n < failures_.size()) throw failures_[n];
    return "echo: " + c.back().content;
  }
  std::atomic<std::size_t> calls{0};

 private:
  std::vector<GatewayError> failures_;
};

class InFlightCounter : public Backend {
 public:
  std::string send(const ModelSpec&, const Conversation& c) override {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(5ms);
    --in_flight;
    return c.back().content;
  }
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
};

}  // namespace

TEST_CASE("cache keys depend on model, sampling settings and every message") {
  const ModelSpec m = spec();
  const std::string base = cache_key(m, ask("hello"));
  CHECK(base.size() == 64);
  CHECK(base == cache_key(m, ask("hello")));
  CHECK(base != cache_key(m, ask("hello ")));
  CHECK(base != cache_key(spec("other"), ask("hello")));
  ModelSpec warm = m;
  warm.temperature = 0.7;
  CHECK(base != cache_key(warm, ask("hello")));
  ModelSpec longer = m;
  longer.max_tokens = 2048;
  CHECK(base != cache_key(longer, ask("hello")));
  Conversation two = ask("hello");
  two.push_back({"assistant", "For"});
  CHECK(base != cache_key(m, two));
  // Endpoint and retry policy do not change what the model is asked.
  ModelSpec elsewhere = m;
  elsewhere.endpoint = "http://localhost:1";
  elsewhere.max_retries = 9;
  CHECK(base == cache_key(elsewhere, ask("hello")));
}

TEST_CASE("sha256 of a known vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("replay cache persists and skips damaged lines") {
  testing::TempDir dir;
  const auto path = dir / "cache.jsonl";
  const ModelSpec m = spec();
  {
    ReplayCache cache(path);
    cache.store(cache_key(m, ask("a")), m, ask("a"), "For");
    cache.store(cache_key(m, ask("b")), m, ask("b"), "Against\nwith a newline");
    CHECK(cache.size() == 2);
  }
  {
    std::ofstream f(path, std::ios::app);
    f << "this is not json\n";
    f << nlohmann::json{{"key", "deadbeef"},   {"response", "mismatched key"}, {"model", "m"},
                        {"temperature", 0.0}, {"max_tokens", 16},              {"conversation", nlohmann::json::array()}}
             .dump()
      << "\n";
    f << R"({"key": "truncated", "resp)";
  }
  ReplayCache reloaded(path);
  CHECK(reloaded.size() == 2);
  CHECK(reloaded.skipped_lines() == 3);
  CHECK(reloaded.lookup(cache_key(m, ask("a"))) == "For");
  CHECK(reloaded.lookup(cache_key(m, ask("b"))) == "Against\nwith a newline");
  CHECK_FALSE(reloaded.lookup(cache_key(m, ask("c"))).has_value());

  // Appending after a torn line still yields a loadable entry.
  reloaded.store(cache_key(m, ask("c")), m, ask("c"), "No argument");
  CHECK(ReplayCache(path).lookup(cache_key(m, ask("c"))) == "No argument");
}

TEST_CASE("mock backend picks the first rule whose substrings all occur") {
  MockBackend mock(MockBackend::parse_script(R"([
    {"match": ["alpha", "beta"], "response": "both"},
    {"match": "alpha", "response": "alpha only"},
    {"match": "limit", "error": 429},
    {"match": "boom", "error": 503}
  ])"));
  const ModelSpec m = spec();
  CHECK(mock.send(m, ask("alpha and beta")) == "both");
  CHECK(mock.send(m, {{"user", "alpha"}, {"assistant", "x"}, {"user", "beta"}}) == "both");
  CHECK(mock.send(m, ask("just alpha")) == "alpha only");
  try {
    mock.send(m, ask("limit"));
    FAIL("no error");
  } catch (const GatewayError& e) {
    CHECK(e.code() == ErrorCode::RateLimited);
    CHECK(e.status() == 429);
  }
  try {
    mock.send(m, ask("boom"));
    FAIL("no error");
  } catch (const GatewayError& e) {
    CHECK(e.code() == ErrorCode::HttpError);
    CHECK(e.status() == 503);
  }
  try {
    mock.send(m, ask("nothing"));
    FAIL("no error");
  } catch (const GatewayError& e) {
    CHECK(e.status() == 404);
  }
  CHECK(mock.calls() == 6);
  CHECK_THROWS_AS(MockBackend::parse_script(R"({"match": "x"})"), Error);
  CHECK_THROWS_AS(MockBackend::parse_script(R"([{"response": "x"}])"), Error);
}

TEST_CASE("endpoint schemes") {
  CHECK(dynamic_cast<HttpBackend*>(make_backend("https://api.example.com/v1").get()));
  CHECK(dynamic_cast<ReplayOnlyBackend*>(make_backend("replay:").get()));
  try {
    make_backend("ftp://example.com");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
  testing::TempDir dir;
  std::ofstream(dir / "script.json") << R"([{"match": "", "response": "ok"}])";
  auto backend = make_backend("mock:" + (dir / "script.json").string());
  CHECK(backend->send(spec(), ask("anything")) == "ok");
}

TEST_CASE("model spec validation") {
  ModelSpec m = spec();
  CHECK_NOTHROW(m.validate());
  m.max_concurrency = 0;
  CHECK_THROWS_AS(m.validate(), Error);
  m = spec();
  m.temperature = -1;
  CHECK_THROWS_AS(m.validate(), Error);
  m = spec("");
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("gateway serves repeats from the cache") {
  testing::TempDir dir;
  auto backend = std::make_shared<ScriptedFailures>(std::vector<GatewayError>{});
  const ModelSpec m = spec();
  {
    Gateway g(fast(dir / "cache.jsonl"));
    g.set_backend(m.name, backend);
    const Exchange first = g.complete(m, ask("q"));
    CHECK_FALSE(first.cache_hit);
    CHECK(first.raw_response == "echo: q");
    const Exchange second = g.complete(m, ask("q"));
    CHECK(second.cache_hit);
    CHECK(second.raw_response == "echo: q");
    CHECK(backend->calls == 1);
    CHECK(g.stats().cache_hits == 1);
    CHECK(g.stats().backend_calls == 1);
  }
  GatewayOptions offline = fast(dir / "cache.jsonl");
  offline.offline = true;
  Gateway replay(offline);
  CHECK(replay.complete(m, ask("q")).raw_response == "echo: q");
  try {
    replay.complete(m, ask("new question"));
    FAIL("no error");
  } catch (const GatewayError& e) {
    CHECK(e.code() == ErrorCode::CacheMissInReplayOnlyMode);
  }
  CHECK(backend->calls == 1);
}

TEST_CASE("gateway retries transient failures with backoff") {
  const ModelSpec m = spec();
  SUBCASE("rate limit then success") {
    Gateway g(fast());
    auto b = std::make_shared<ScriptedFailures>(std::vector<GatewayError>{
        GatewayError(ErrorCode::RateLimited, "slow down", 429), GatewayError(ErrorCode::Timeout, "late")});
    g.set_backend(m.name, b);
    const Exchange ex = g.complete(m, ask("q"));
    CHECK(ex.attempt_count == 3);
    CHECK(ex.raw_response == "echo: q");
  }
  SUBCASE("server errors exhaust the retry budget") {
    Gateway g(fast());
    auto b = std::make_shared<ScriptedFailures>(std::vector<GatewayError>(5, GatewayError(ErrorCode::HttpError, "x", 502)));
    g.set_backend(m.name, b);
    CHECK_THROWS_AS(g.complete(m, ask("q")), GatewayError);
    CHECK(b->calls == 3);
    CHECK(g.stats().failures == 1);
  }
  SUBCASE("client errors are not retried") {
    Gateway g(fast());
    auto b = std::make_shared<ScriptedFailures>(std::vector<GatewayError>{GatewayError(ErrorCode::HttpError, "bad", 400)});
    g.set_backend(m.name, b);
    CHECK_THROWS_AS(g.complete(m, ask("q")), GatewayError);
    CHECK(b->calls == 1);
  }
}

TEST_CASE("batches keep input order and respect the concurrency limit") {
  ModelSpec m = spec();
  m.max_concurrency = 3;
  Gateway g(fast());
  auto counter = std::make_shared<InFlightCounter>();
  g.set_backend(m.name, counter);
  std::vector<Conversation> batch;
  for (int i = 0; i < 40; ++i) batch.push_back(ask("item " + std::to_string(i)));
  const auto out = g.complete_batch(m, batch);
  REQUIRE(out.size() == 40);
  for (int i = 0; i < 40; ++i) {
    REQUIRE(out[i].ok());
    CHECK(out[i].exchange->raw_response == "item " + std::to_string(i));
  }
  CHECK(counter->peak <= 3);
  CHECK(counter->peak >= 2);
}

TEST_CASE("batch failures are reported per item") {
  ModelSpec m = spec();
  Gateway g(fast());
  g.set_backend(m.name, std::make_shared<MockBackend>(MockBackend::parse_script(
                            R"([{"match": "good", "response": "For"}, {"match": "bad", "error": 400}])")));
  const auto out = g.complete_batch(m, std::vector<Conversation>{ask("good"), ask("bad"), ask("good 2")});
  CHECK(out[0].ok());
  CHECK_FALSE(out[1].ok());
  CHECK(out[1].error->status() == 400);
  CHECK(out[2].ok());
}

TEST_CASE("HTTP backend speaks the chat-completions protocol") {
  httplib::Server server;
  std::atomic<int> limited{0};
  std::string seen_auth;
  nlohmann::json seen_body;
  std::mutex seen_mutex;

  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(seen_mutex);
      seen_auth = req.get_header_value("Authorization");
      seen_body = nlohmann::json::parse(req.body);
    }
    const std::string prompt = seen_body["messages"].back()["content"];
    if (prompt == "limit" && limited++ == 0) {
      res.status = 429;
      return;
    }
    if (prompt == "fail") {
      res.status = 500;
      return;
    }
    if (prompt == "garbage") {
      res.set_content("not json", "text/plain");
      return;
    }
    nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "For"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread runner([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("STANCEBENCH_TEST_KEY", "sk-test", 1);
  ModelSpec m = spec("gpt-test");
  m.endpoint = "http://127.0.0.1:" + std::to_string(port);
  m.api_key_env = "STANCEBENCH_TEST_KEY";
  m.request_timeout = 5;
  m.max_retries = 1;

  Gateway g(fast());
  CHECK(g.complete(m, ask("hello")).raw_response == "For");
  {
    std::lock_guard lock(seen_mutex);
    CHECK(seen_auth == "Bearer sk-test");
    CHECK(seen_body["model"] == "gpt-test");
    CHECK(seen_body["temperature"] == 0.0);
    CHECK(seen_body["max_tokens"] == 1024);
    CHECK(seen_body["messages"][0]["role"] == "user");
  }

  const Exchange retried = g.complete(m, ask("limit"));
  CHECK(retried.attempt_count == 2);

  try {
    g.complete(m, ask("fail"));
    FAIL("no error");
  } catch (const GatewayError& e) {
    CHECK(e.code() == ErrorCode::HttpError);
    CHECK(e.status() == 500);
  }
  CHECK_THROWS_AS(g.complete(m, ask("garbage")), GatewayError);

  ModelSpec explicit_path = m;
  explicit_path.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  CHECK(g.complete(explicit_path, ask("hello again")).raw_response == "For");

  server.stop();
  runner.join();

  ModelSpec down = m;
  down.max_retries = 0;
  CHECK_THROWS_AS(g.complete(down, ask("nobody home")), GatewayError);
}

TEST_CASE("request body and response parsing") {
  const ModelSpec m = spec("x");
  const auto body = nlohmann::json::parse(HttpBackend::request_body(m, ask("hi")));
  CHECK(body["messages"].size() == 1);
  CHECK(HttpBackend::response_content(R"({"choices":[{"message":{"content":"Against"}}]})", 200) == "Against");
  CHECK(HttpBackend::response_content(R"({"choices":[{"message":{"content":null}}]})", 200).empty());
  CHECK_THROWS_AS(HttpBackend::response_content(R"({"choices":[]})", 200), GatewayError);
}
