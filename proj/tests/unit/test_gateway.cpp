#include <filesystem>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "vafuse/gateway.hpp"

#include "../support/test_util.hpp"

using namespace vafuse;
using nlohmann::json;
using vafuse::test::TempDir;

namespace {

struct Recorded {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

// Scripted transport: pops one response per call and records requests.
class FakeTransport : public Transport {
 public:
  explicit FakeTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}

  HttpResponse post(const std::string& url,
                    const std::vector<std::pair<std::string, std::string>>& headers,
                    const std::string& body, double) override {
    requests.push_back({url, headers, body});
    if (next_ >= script_.size()) return {500, "script exhausted", ""};
    return script_[next_++];
  }

  std::vector<Recorded> requests;

 private:
  std::vector<HttpResponse> script_;
  std::size_t next_ = 0;
};

ProviderProfile openai_profile(const std::string& name = "predictor") {
  ProviderProfile p;
  p.name = name;
  p.base_url = "https://api.example.test/v1";
  p.model = "demo-model";
  p.dialect = "openai";
  p.credential_env = "VAFUSE_TEST_KEY";
  p.max_retries = 3;
  return p;
}

std::string openai_chat_body(const std::string& text) {
  json obj;
  obj["choices"] = json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}});
  return obj.dump();
}

Gateway live_gateway(std::vector<ProviderProfile> profiles, const std::string& dir,
                     std::unique_ptr<Transport> transport, GatewayMode mode = GatewayMode::kLive) {
  Gateway gw(std::move(profiles), mode, dir, std::move(transport));
  gw.set_backoff(0.0, [](double) {});
  return gw;
}

struct EnvGuard {
  EnvGuard() { setenv("VAFUSE_TEST_KEY", "sk-test-secret-000", 1); }
  ~EnvGuard() { unsetenv("VAFUSE_TEST_KEY"); }
};

}  // namespace

TEST_CASE("live chat retries transient failures and succeeds") {
  EnvGuard env;
  TempDir dir("gw");
  auto transport = std::make_unique<FakeTransport>(std::vector<HttpResponse>{
      {500, "flaky", ""}, {503, "flaky", ""}, {200, openai_chat_body("hello there"), ""}});
  FakeTransport* raw = transport.get();
  Gateway gw = live_gateway({openai_profile()}, dir.str(), std::move(transport));
  const std::string reply = gw.chat("predictor", {{"user", "hi"}});
  CHECK(reply == "hello there");
  CHECK(gw.transport_calls() == 3);
  CHECK(gw.retries_performed() == 2);
  CHECK(raw->requests.size() == 3);
  CHECK(raw->requests[0].url == "https://api.example.test/v1/chat/completions");
}

TEST_CASE("exhausted retries raise a transport error") {
  EnvGuard env;
  TempDir dir("gw");
  auto transport = std::make_unique<FakeTransport>(
      std::vector<HttpResponse>{{500, "", ""}, {500, "", ""}, {500, "", ""}, {500, "", ""}});
  Gateway gw = live_gateway({openai_profile()}, dir.str(), std::move(transport));
  CHECK_THROWS_AS(gw.chat("predictor", {{"user", "hi"}}), TransportError);
  CHECK(gw.transport_calls() == 4);  // initial + max_retries
}

TEST_CASE("non-transient statuses fail fast") {
  EnvGuard env;
  TempDir dir("gw");
  auto transport = std::make_unique<FakeTransport>(std::vector<HttpResponse>{{400, "bad", ""}});
  Gateway gw = live_gateway({openai_profile()}, dir.str(), std::move(transport));
  CHECK_THROWS_AS(gw.chat("predictor", {{"user", "hi"}}), TransportError);
  CHECK(gw.transport_calls() == 1);
}

TEST_CASE("record mode writes one fixture per digest and replays it") {
  EnvGuard env;
  TempDir dir("gw");
  {
    auto transport = std::make_unique<FakeTransport>(
        std::vector<HttpResponse>{{200, openai_chat_body("recorded"), ""}});
    Gateway gw =
        live_gateway({openai_profile()}, dir.str(), std::move(transport), GatewayMode::kRecord);
    CHECK(gw.chat("predictor", {{"user", "question"}}) == "recorded");
    CHECK(gw.transport_calls() == 1);
    // Second identical call is served from the fixture.
    CHECK(gw.chat("predictor", {{"user", "question"}}) == "recorded");
    CHECK(gw.transport_calls() == 1);
  }
  std::size_t fixture_count = 0;
  std::string fixture_text;
  for (const auto& entry : std::filesystem::directory_iterator(dir.str())) {
    ++fixture_count;
    fixture_text = vafuse::test::read_file(entry.path().string());
  }
  CHECK(fixture_count == 1);
  // Credentials never land in fixtures.
  CHECK(fixture_text.find("sk-test-secret") == std::string::npos);

  // Replay from the recorded directory with zero transport activity.
  auto failing = std::make_unique<FakeTransport>(std::vector<HttpResponse>{});
  Gateway replay(std::vector<ProviderProfile>{openai_profile()}, GatewayMode::kReplay, dir.str(),
                 std::move(failing));
  CHECK(replay.chat("predictor", {{"user", "question"}}) == "recorded");
  CHECK(replay.transport_calls() == 0);
  CHECK_THROWS_WITH_AS(replay.chat("predictor", {{"user", "unrecorded"}}),
                       doctest::Contains("no fixture for digest"), TransportError);
}

TEST_CASE("replay works without any credential in the environment") {
  TempDir dir("gw");
  write_chat_fixture(dir.str(), openai_profile(), {{"user", "ping"}}, "pong");
  Gateway gw(std::vector<ProviderProfile>{openai_profile()}, GatewayMode::kReplay, dir.str());
  CHECK(gw.chat("predictor", {{"user", "ping"}}) == "pong");
}

TEST_CASE("live mode without the credential variable is a config error") {
  TempDir dir("gw");
  auto transport = std::make_unique<FakeTransport>(std::vector<HttpResponse>{});
  Gateway gw = live_gateway({openai_profile()}, dir.str(), std::move(transport));
  unsetenv("VAFUSE_TEST_KEY");
  CHECK_THROWS_AS(gw.chat("predictor", {{"user", "hi"}}), ConfigError);
}

TEST_CASE("request digests are stable and content-sensitive") {
  const ProviderProfile p1 = openai_profile();
  const std::string a = Gateway::canonical_chat_request(p1, {{"user", "x"}});
  const std::string b = Gateway::canonical_chat_request(p1, {{"user", "x"}});
  CHECK(request_digest(a) == request_digest(b));
  CHECK(request_digest(a).size() == 64);

  ProviderProfile p2 = p1;
  p2.model = "other-model";
  const std::string c = Gateway::canonical_chat_request(p2, {{"user", "x"}});
  CHECK(request_digest(a) != request_digest(c));

  ProviderProfile p3 = p1;
  p3.temperature = 0.7;
  const std::string d = Gateway::canonical_chat_request(p3, {{"user", "x"}});
  CHECK(request_digest(a) != request_digest(d));
}

TEST_CASE("anthropic and gemini dialect adapters build their wire shapes") {
  EnvGuard env;
  TempDir dir("gw");

  ProviderProfile claude = openai_profile("claude");
  claude.dialect = "anthropic";
  claude.base_url = "https://api.anthropic.test/v1";
  json claude_body;
  claude_body["content"] = json::array({{{"type", "text"}, {"text", "from claude"}}});
  auto t1 = std::make_unique<FakeTransport>(
      std::vector<HttpResponse>{{200, claude_body.dump(), ""}});
  FakeTransport* raw1 = t1.get();
  Gateway gw1 = live_gateway({claude}, dir.str(), std::move(t1));
  CHECK(gw1.chat("claude", {{"system", "be brief"}, {"user", "hi"}}) == "from claude");
  CHECK(raw1->requests[0].url == "https://api.anthropic.test/v1/messages");
  const json sent1 = json::parse(raw1->requests[0].body);
  CHECK(sent1["system"] == "be brief");
  CHECK(sent1["messages"].size() == 1);
  bool has_key = false;
  for (const auto& [k, v] : raw1->requests[0].headers) has_key = has_key || k == "x-api-key";
  CHECK(has_key);

  ProviderProfile gemini = openai_profile("gemini");
  gemini.dialect = "gemini";
  gemini.base_url = "https://gen.test/v1beta";
  gemini.model = "gem-pro";
  json gemini_body;
  gemini_body["candidates"] = json::array(
      {{{"content", {{"parts", json::array({{{"text", "from gemini"}}})}}}}});
  auto t2 = std::make_unique<FakeTransport>(
      std::vector<HttpResponse>{{200, gemini_body.dump(), ""}});
  FakeTransport* raw2 = t2.get();
  Gateway gw2 = live_gateway({gemini}, dir.str(), std::move(t2));
  CHECK(gw2.chat("gemini", {{"user", "hi"}}) == "from gemini");
  CHECK(raw2->requests[0].url == "https://gen.test/v1beta/models/gem-pro:generateContent");
  const json sent2 = json::parse(raw2->requests[0].body);
  CHECK(sent2["contents"][0]["role"] == "user");

  ProviderProfile unknown = openai_profile("odd");
  unknown.dialect = "smoke-signals";
  auto t3 = std::make_unique<FakeTransport>(std::vector<HttpResponse>{});
  Gateway gw3 = live_gateway({unknown}, dir.str(), std::move(t3));
  CHECK_THROWS_AS(gw3.chat("odd", {{"user", "hi"}}), ConfigError);
}

TEST_CASE("embed batches, aligns by index, and caches duplicates") {
  EnvGuard env;
  TempDir dir("gw");
  json body;
  // Deliberately shuffled indices: the gateway must realign.
  body["data"] = json::array({
      {{"index", 1}, {"embedding", {0.0, 1.0}}},
      {{"index", 0}, {"embedding", {1.0, 0.0}}},
      {{"index", 2}, {"embedding", {0.5, 0.5}}},
  });
  auto transport =
      std::make_unique<FakeTransport>(std::vector<HttpResponse>{{200, body.dump(), ""}});
  Gateway gw = live_gateway({openai_profile("embedder")}, dir.str(), std::move(transport));
  const auto vectors = gw.embed("embedder", {"alpha", "beta", "gamma"});
  REQUIRE(vectors.size() == 3);
  CHECK(vectors[0][0] == 1.0);
  CHECK(vectors[1][1] == 1.0);
  CHECK(gw.transport_calls() == 1);

  // Same texts again: fully served from the in-memory cache.
  const auto again = gw.embed("embedder", {"beta", "alpha"});
  CHECK(gw.transport_calls() == 1);
  CHECK(again[0][1] == 1.0);
  CHECK(again[1][0] == 1.0);

  CHECK_THROWS_AS(gw.embed("embedder", {}), ConfigError);
}

TEST_CASE("embed rejects inconsistent dimensions in a batch") {
  EnvGuard env;
  TempDir dir("gw");
  json body;
  body["data"] = json::array({
      {{"index", 0}, {"embedding", {1.0, 0.0}}},
      {{"index", 1}, {"embedding", {1.0, 0.0, 0.0}}},
  });
  auto transport =
      std::make_unique<FakeTransport>(std::vector<HttpResponse>{{200, body.dump(), ""}});
  Gateway gw = live_gateway({openai_profile("embedder")}, dir.str(), std::move(transport));
  CHECK_THROWS_AS(gw.embed("embedder", {"a", "b"}), TransportError);
}

TEST_CASE("profiles must be unique and known") {
  TempDir dir("gw");
  CHECK_THROWS_AS(Gateway({openai_profile("x"), openai_profile("x")}, GatewayMode::kReplay,
                          dir.str()),
                  ConfigError);
  Gateway gw(std::vector<ProviderProfile>{openai_profile("x")}, GatewayMode::kReplay, dir.str());
  CHECK_THROWS_AS(gw.chat("unknown", {{"user", "hi"}}), ConfigError);
}
