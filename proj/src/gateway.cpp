#include "vafuse/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace vafuse {

namespace fs = std::filesystem;
using nlohmann::json;

GatewayMode parse_gateway_mode(const std::string& name) {
  if (name == "replay") return GatewayMode::kReplay;
  if (name == "record") return GatewayMode::kRecord;
  if (name == "live") return GatewayMode::kLive;
  throw ConfigError("unknown gateway mode '" + name + "' (replay|record|live)");
}

std::string gateway_mode_name(GatewayMode mode) {
  switch (mode) {
    case GatewayMode::kReplay: return "replay";
    case GatewayMode::kRecord: return "record";
    case GatewayMode::kLive: return "live";
  }
  return "replay";
}

std::string request_digest(const std::string& canonical_request) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, canonical_request.data(), canonical_request.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("invalid URL '" + url + "'");
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport : public Transport {
 public:
  HttpResponse post(const std::string& url,
                    const std::vector<std::pair<std::string, std::string>>& headers,
                    const std::string& body, double timeout_s) override {
    const ParsedUrl parsed = split_url(url);
    httplib::Client client(parsed.origin);
    client.set_connection_timeout(std::chrono::duration<double>(timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(timeout_s));
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto res = client.Post(parsed.path, hdrs, body, "application/json");
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
  }
};

std::string credential_for(const ProviderProfile& profile) {
  if (profile.credential_env.empty()) {
    throw ConfigError("profile '" + profile.name + "' has no credential_env configured");
  }
  const char* value = std::getenv(profile.credential_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw ConfigError("environment variable '" + profile.credential_env +
                      "' is not set (required for live mode, profile '" + profile.name + "')");
  }
  return value;
}

struct WireRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

// Dialect adapters. Everything provider-specific stays inside this block.
WireRequest build_chat_request(const ProviderProfile& profile,
                               const std::vector<ChatMessage>& messages,
                               const std::string& credential) {
  WireRequest req;
  if (profile.dialect == "openai") {
    req.url = profile.base_url + "/chat/completions";
    req.headers = {{"Authorization", "Bearer " + credential}};
    json body;
    body["model"] = profile.model;
    body["temperature"] = profile.temperature;
    body["messages"] = json::array();
    for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    req.body = body.dump();
    return req;
  }
  if (profile.dialect == "anthropic") {
    req.url = profile.base_url + "/messages";
    req.headers = {{"x-api-key", credential}, {"anthropic-version", "2023-06-01"}};
    json body;
    body["model"] = profile.model;
    body["max_tokens"] = profile.max_tokens;
    body["temperature"] = profile.temperature;
    body["messages"] = json::array();
    for (const auto& m : messages) {
      if (m.role == "system") {
        body["system"] = m.content;
      } else {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
      }
    }
    req.body = body.dump();
    return req;
  }
  if (profile.dialect == "gemini") {
    req.url = profile.base_url + "/models/" + profile.model + ":generateContent";
    req.headers = {{"x-goog-api-key", credential}};
    json body;
    body["contents"] = json::array();
    for (const auto& m : messages) {
      if (m.role == "system") {
        body["systemInstruction"] = {{"parts", json::array({{{"text", m.content}}})}};
        continue;
      }
      const std::string role = m.role == "assistant" ? "model" : "user";
      body["contents"].push_back({{"role", role}, {"parts", json::array({{{"text", m.content}}})}});
    }
    body["generationConfig"] = {{"temperature", profile.temperature}};
    req.body = body.dump();
    return req;
  }
  throw ConfigError("profile '" + profile.name + "': unknown dialect '" + profile.dialect + "'");
}

std::string parse_chat_response(const ProviderProfile& profile, const std::string& body) {
  json obj;
  try {
    obj = json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError("profile '" + profile.name + "': unparsable response: " + e.what());
  }
  try {
    if (profile.dialect == "openai") {
      return obj.at("choices").at(0).at("message").at("content").get<std::string>();
    }
    if (profile.dialect == "anthropic") {
      return obj.at("content").at(0).at("text").get<std::string>();
    }
    if (profile.dialect == "gemini") {
      std::string text;
      for (const auto& part : obj.at("candidates").at(0).at("content").at("parts")) {
        text += part.at("text").get<std::string>();
      }
      return text;
    }
  } catch (const json::exception& e) {
    throw TransportError("profile '" + profile.name + "': unexpected response shape: " + e.what());
  }
  throw ConfigError("profile '" + profile.name + "': unknown dialect '" + profile.dialect + "'");
}

WireRequest build_embed_request(const ProviderProfile& profile,
                                const std::vector<std::string>& texts,
                                const std::string& credential) {
  if (profile.dialect != "openai") {
    throw ConfigError("profile '" + profile.name + "': dialect '" + profile.dialect +
                      "' has no embedding endpoint adapter");
  }
  WireRequest req;
  req.url = profile.base_url + "/embeddings";
  req.headers = {{"Authorization", "Bearer " + credential}};
  json body;
  body["model"] = profile.model;
  body["input"] = texts;
  req.body = body.dump();
  return req;
}

std::vector<std::vector<double>> parse_embed_response(const ProviderProfile& profile,
                                                      const std::string& body,
                                                      std::size_t expected) {
  json obj;
  try {
    obj = json::parse(body);
    std::vector<std::vector<double>> vectors(expected);
    for (const auto& item : obj.at("data")) {
      const std::size_t index = item.at("index").get<std::size_t>();
      if (index >= expected) throw TransportError("embedding index out of range");
      vectors[index] = item.at("embedding").get<std::vector<double>>();
    }
    for (const auto& v : vectors) {
      if (v.empty()) throw TransportError("embedding response missing an input");
      if (v.size() != vectors.front().size()) {
        throw TransportError("inconsistent embedding dimensions in one batch");
      }
    }
    return vectors;
  } catch (const json::exception& e) {
    throw TransportError("profile '" + profile.name + "': bad embedding response: " + e.what());
  }
}

bool transient_status(int status) {
  return status == 0 || status == 408 || status == 429 ||
         (status >= 500 && status <= 504);
}

json fixture_body(const std::string& canonical, const json& response) {
  json fixture;
  fixture["request"] = json::parse(canonical);
  fixture["response"] = response;
  return fixture;
}

void write_fixture_file(const std::string& dir, const std::string& digest, const json& fixture) {
  fs::create_directories(dir);
  const std::string path = (fs::path(dir) / (digest + ".json")).string();
  if (fs::exists(path)) return;  // one fixture per digest
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write fixture '" + path + "'");
  out << fixture.dump(2) << '\n';
}

}  // namespace

std::unique_ptr<Transport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

std::string Gateway::canonical_chat_request(const ProviderProfile& profile,
                                            const std::vector<ChatMessage>& messages) {
  json req;
  req["kind"] = "chat";
  req["profile"] = profile.name;
  req["model"] = profile.model;
  req["temperature"] = profile.temperature;
  req["messages"] = json::array();
  for (const auto& m : messages) req["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return req.dump();
}

std::string Gateway::canonical_embed_request(const ProviderProfile& profile,
                                             const std::vector<std::string>& texts) {
  json req;
  req["kind"] = "embed";
  req["profile"] = profile.name;
  req["model"] = profile.model;
  req["texts"] = texts;
  return req.dump();
}

Gateway::Gateway(std::vector<ProviderProfile> profiles, GatewayMode mode, std::string fixtures_dir,
                 std::unique_ptr<Transport> transport)
    : profiles_(std::move(profiles)),
      mode_(mode),
      fixtures_dir_(std::move(fixtures_dir)),
      transport_(std::move(transport)) {
  for (std::size_t i = 0; i < profiles_.size(); ++i) {
    for (std::size_t j = i + 1; j < profiles_.size(); ++j) {
      if (profiles_[i].name == profiles_[j].name) {
        throw ConfigError("duplicate gateway profile '" + profiles_[i].name + "'");
      }
    }
  }
  if (transport_ == nullptr && mode_ != GatewayMode::kReplay) transport_ = make_http_transport();
  if (mode_ == GatewayMode::kReplay) {
    if (!fs::is_directory(fixtures_dir_)) {
      throw ConfigError("replay mode needs a fixtures directory, '" + fixtures_dir_ +
                        "' is not one");
    }
    // Load everything up front; replay lookups are then read-only.
    for (const auto& entry : fs::directory_iterator(fixtures_dir_)) {
      if (entry.path().extension() != ".json") continue;
      std::ifstream in(entry.path(), std::ios::binary);
      json fixture;
      try {
        in >> fixture;
      } catch (const json::exception& e) {
        throw DataError("bad fixture '" + entry.path().string() + "': " + e.what());
      }
      replay_cache_[entry.path().stem().string()] = fixture.at("response").dump();
    }
  }
}

const ProviderProfile& Gateway::profile(const std::string& name) const {
  for (const auto& p : profiles_) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown gateway profile '" + name + "'");
}

void Gateway::set_backoff(double base_seconds, std::function<void(double)> sleeper) {
  backoff_base_s_ = base_seconds;
  sleeper_ = std::move(sleeper);
}

std::string Gateway::fixture_path(const std::string& digest) const {
  return (fs::path(fixtures_dir_) / (digest + ".json")).string();
}

// Shared request path: replay lookup, otherwise retrying transport rounds,
// then fixture recording. `parse` turns a wire body into the stored payload.
std::string Gateway::run_request(const ProviderProfile& profile, const std::string& canonical,
                                 const std::string& url,
                                 const std::vector<std::pair<std::string, std::string>>& headers,
                                 const std::string& body,
                                 const std::function<std::string(const std::string&)>& parse) {
  const std::string digest = request_digest(canonical);
  if (mode_ == GatewayMode::kReplay) {
    auto it = replay_cache_.find(digest);
    if (it == replay_cache_.end()) {
      throw TransportError("replay: no fixture for digest " + digest + " under '" +
                           fixtures_dir_ + "'");
    }
    return it->second;
  }
  if (mode_ == GatewayMode::kRecord) {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::string path = fixture_path(digest);
    if (fs::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      json fixture;
      in >> fixture;
      return fixture.at("response").dump();
    }
  }

  HttpResponse last;
  for (int attempt = 0; attempt <= profile.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay = backoff_base_s_ * static_cast<double>(1 << (attempt - 1));
      if (sleeper_) {
        sleeper_(delay);
      } else if (delay > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      {
        std::lock_guard<std::mutex> lock(mutex_);
        ++retries_performed_;
      }
      std::cerr << "[gateway] retry " << attempt << " for profile '" << profile.name << "'\n";
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++transport_calls_;
    }
    last = transport_->post(url, headers, body, profile.timeout_s);
    if (last.status >= 200 && last.status < 300) {
      const std::string payload = parse(last.body);
      if (mode_ == GatewayMode::kRecord) {
        std::lock_guard<std::mutex> lock(mutex_);
        write_fixture_file(fixtures_dir_, digest, fixture_body(canonical, json::parse(payload)));
      }
      return payload;
    }
    if (!transient_status(last.status)) break;
  }
  throw TransportError("profile '" + profile.name + "': request failed after retries (status " +
                       std::to_string(last.status) +
                       (last.error.empty() ? "" : ", " + last.error) + ")");
}

std::string Gateway::chat(const std::string& profile_name,
                          const std::vector<ChatMessage>& messages) {
  const ProviderProfile& prof = profile(profile_name);
  const std::string canonical = canonical_chat_request(prof, messages);
  if (mode_ == GatewayMode::kReplay) {
    const std::string payload = run_request(prof, canonical, "", {}, "", {});
    return json::parse(payload).at("text").get<std::string>();
  }
  const std::string credential = credential_for(prof);
  const WireRequest wire = build_chat_request(prof, messages, credential);
  const std::string payload =
      run_request(prof, canonical, wire.url, wire.headers, wire.body,
                  [&prof](const std::string& body) {
                    json out;
                    out["text"] = parse_chat_response(prof, body);
                    return out.dump();
                  });
  return json::parse(payload).at("text").get<std::string>();
}

std::vector<std::vector<double>> Gateway::embed(const std::string& profile_name,
                                                const std::vector<std::string>& texts) {
  if (texts.empty()) throw ConfigError("embed: empty text list");
  const ProviderProfile& prof = profile(profile_name);

  std::vector<std::vector<double>> result(texts.size());
  std::vector<std::string> pending;
  std::vector<std::size_t> pending_pos;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto it = embed_cache_.find(prof.name + "\x1f" + texts[i]);
      if (it != embed_cache_.end()) {
        result[i] = it->second;
      } else {
        pending.push_back(texts[i]);
        pending_pos.push_back(i);
      }
    }
  }

  for (std::size_t start = 0; start < pending.size();
       start += static_cast<std::size_t>(prof.batch_limit)) {
    const std::size_t end =
        std::min(pending.size(), start + static_cast<std::size_t>(prof.batch_limit));
    const std::vector<std::string> batch(pending.begin() + static_cast<std::ptrdiff_t>(start),
                                         pending.begin() + static_cast<std::ptrdiff_t>(end));
    const std::string canonical = canonical_embed_request(prof, batch);
    std::string payload;
    if (mode_ == GatewayMode::kReplay) {
      payload = run_request(prof, canonical, "", {}, "", {});
    } else {
      const std::string credential = credential_for(prof);
      const WireRequest wire = build_embed_request(prof, batch, credential);
      payload = run_request(prof, canonical, wire.url, wire.headers, wire.body,
                            [&prof, &batch](const std::string& body) {
                              json out;
                              out["vectors"] = parse_embed_response(prof, body, batch.size());
                              return out.dump();
                            });
    }
    const auto vectors = json::parse(payload).at("vectors").get<std::vector<std::vector<double>>>();
    if (vectors.size() != batch.size()) {
      throw TransportError("embed: fixture has " + std::to_string(vectors.size()) +
                           " vectors for " + std::to_string(batch.size()) + " texts");
    }
    std::lock_guard<std::mutex> lock(mutex_);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      result[pending_pos[start + i]] = vectors[i];
      embed_cache_[prof.name + "\x1f" + batch[i]] = vectors[i];
    }
  }

  for (const auto& v : result) {
    if (v.size() != result.front().size()) {
      throw TransportError("embed: inconsistent dimensions across the batch");
    }
  }
  return result;
}

void write_chat_fixture(const std::string& fixtures_dir, const ProviderProfile& profile,
                        const std::vector<ChatMessage>& messages,
                        const std::string& response_text) {
  const std::string canonical = Gateway::canonical_chat_request(profile, messages);
  json response;
  response["text"] = response_text;
  write_fixture_file(fixtures_dir, request_digest(canonical), fixture_body(canonical, response));
}

void write_embed_fixture(const std::string& fixtures_dir, const ProviderProfile& profile,
                         const std::vector<std::string>& texts,
                         const std::vector<std::vector<double>>& vectors) {
  const std::string canonical = Gateway::canonical_embed_request(profile, texts);
  json response;
  response["vectors"] = vectors;
  write_fixture_file(fixtures_dir, request_digest(canonical), fixture_body(canonical, response));
}

}  // namespace vafuse
