#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vafuse/errors.hpp"

namespace vafuse {

// One named upstream endpoint. The credential is looked up from the named
// environment variable at call time and never serialized anywhere.
struct ProviderProfile {
  std::string name;
  std::string base_url;
  std::string model;
  std::string dialect = "openai";  // openai | anthropic | gemini
  std::string credential_env;
  double timeout_s = 60.0;
  int max_retries = 3;
  int max_tokens = 1024;
  int batch_limit = 64;
  double temperature = 0.0;
};

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

enum class GatewayMode { kReplay, kRecord, kLive };

GatewayMode parse_gateway_mode(const std::string& name);
std::string gateway_mode_name(GatewayMode mode);

struct HttpResponse {
  int status = 0;  // 0 = network-level failure
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            const std::string& body, double timeout_s) = 0;
};

std::unique_ptr<Transport> make_http_transport();

// Stable identity of a request: SHA-256 over the canonical JSON form, which
// includes the profile name and model so fixture drift is detectable.
std::string request_digest(const std::string& canonical_request);

// Chat/embedding access for the critic and predictor profiles. Replay mode
// serves fixtures only and performs no network activity; record mode writes
// one fixture per unique digest.
class Gateway {
 public:
  Gateway(std::vector<ProviderProfile> profiles, GatewayMode mode, std::string fixtures_dir,
          std::unique_ptr<Transport> transport = nullptr);

  std::string chat(const std::string& profile_name, const std::vector<ChatMessage>& messages);
  std::vector<std::vector<double>> embed(const std::string& profile_name,
                                         const std::vector<std::string>& texts);

  const ProviderProfile& profile(const std::string& name) const;
  GatewayMode mode() const { return mode_; }
  std::uint64_t transport_calls() const { return transport_calls_; }
  std::uint64_t retries_performed() const { return retries_performed_; }

  // Backoff schedule hook; tests inject a no-op sleeper.
  void set_backoff(double base_seconds, std::function<void(double)> sleeper = {});

  // Canonical request forms, exposed so tooling can precompute digests.
  static std::string canonical_chat_request(const ProviderProfile& profile,
                                            const std::vector<ChatMessage>& messages);
  static std::string canonical_embed_request(const ProviderProfile& profile,
                                             const std::vector<std::string>& texts);

 private:
  struct Fixture;

  std::string fixture_path(const std::string& digest) const;
  std::string run_request(const ProviderProfile& profile, const std::string& canonical,
                          const std::string& url,
                          const std::vector<std::pair<std::string, std::string>>& headers,
                          const std::string& body,
                          const std::function<std::string(const std::string&)>& parse);

  std::vector<ProviderProfile> profiles_;
  GatewayMode mode_;
  std::string fixtures_dir_;
  std::unique_ptr<Transport> transport_;
  std::unordered_map<std::string, std::string> replay_cache_;  // digest -> response payload JSON
  std::unordered_map<std::string, std::vector<double>> embed_cache_;
  std::uint64_t transport_calls_ = 0;
  std::uint64_t retries_performed_ = 0;
  double backoff_base_s_ = 0.5;
  std::function<void(double)> sleeper_;
  std::mutex mutex_;
};

// Writes a fixture for the given canonical request, as the record path does.
// Used by tests and tooling to seed replay directories.
void write_chat_fixture(const std::string& fixtures_dir, const ProviderProfile& profile,
                        const std::vector<ChatMessage>& messages, const std::string& response_text);
void write_embed_fixture(const std::string& fixtures_dir, const ProviderProfile& profile,
                         const std::vector<std::string>& texts,
                         const std::vector<std::vector<double>>& vectors);

}  // namespace vafuse
