#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "socratic/error.hpp"
#include "socratic/plan_model.hpp"
#include "socratic/prompt_forge.hpp"
#include "socratic/world_sim.hpp"

namespace socratic {

inline constexpr double kObjectTokenBias = 0.1;

struct DecodeParams {
  double temperature = 0.0;
  std::map<std::string, double> token_bias;  // keyed by surface word
  int max_tokens = 512;

  /// Greedy decoding with a small positive bias on every object name.
  static DecodeParams for_vocabulary(const ObjectVocabulary& vocab);
};

struct TokenCounts {
  std::uint64_t prompt = 0;
  std::uint64_t completion = 0;
};

struct Completion {
  std::string text;
  std::string provider_id;
  double latency_ms = 0.0;
  TokenCounts tokens;
};

enum class GatewayErrorKind { ProviderUnreachable, ProviderRejected, ScriptMiss, Timeout, MalformedScript };

std::string_view to_string(GatewayErrorKind kind);

class GatewayError : public Error {
 public:
  GatewayError(GatewayErrorKind kind, const std::string& detail, int status = 0, int attempts = 0);
  GatewayErrorKind kind() const { return kind_; }
  int status() const { return status_; }
  int attempts() const { return attempts_; }

 private:
  GatewayErrorKind kind_;
  int status_;
  int attempts_;
};

/// The text a request is identified by: system text, a blank line, then the
/// user message. Multimodal requests append the scene under "Observation:".
std::string user_message(const RenderedPrompt& prompt, const SceneSnapshot* scene);
std::string request_fingerprint(const RenderedPrompt& prompt, const SceneSnapshot* scene);

enum class MatcherKind { ExactPrompt, ContainsAll };

struct ScriptEntry {
  MatcherKind kind = MatcherKind::ContainsAll;
  std::string exact;                // ExactPrompt
  std::vector<std::string> needles;  // ContainsAll
  std::string reply;

  bool matches(std::string_view fingerprint) const;
};

/// Deterministic stand-in for a model: first matching entry wins.
struct OracleScript {
  std::vector<ScriptEntry> entries;
  bool strict = true;  // unmatched request -> ScriptMiss; otherwise fallback_reply
  std::string fallback_reply;

  const ScriptEntry* match(std::string_view fingerprint) const;
};

/// JSON layout:
///   {"mode": "strict" | "fallback", "fallback_reply": "...",
///    "entries": [{"contains_all": ["..", ".."], "reply": "..."},
///                {"exact": "...", "reply": ["line", "line"]}]}
/// A reply may be a string or an array of lines. Throws MalformedScript.
OracleScript load_script(const std::filesystem::path& path);
OracleScript parse_script(const nlohmann::json& j);
nlohmann::json script_to_json(const OracleScript& script);
void save_script(const OracleScript& script, const std::filesystem::path& path);

class Gateway {
 public:
  virtual ~Gateway() = default;
  virtual Completion complete(const RenderedPrompt& prompt, const DecodeParams& params) = 0;
  virtual Completion complete_multimodal(const RenderedPrompt& prompt, const SceneSnapshot& scene,
                                         const DecodeParams& params) = 0;
  virtual std::string provider_id() const = 0;
};

class ScriptedGateway final : public Gateway {
 public:
  explicit ScriptedGateway(OracleScript script);
  Completion complete(const RenderedPrompt& prompt, const DecodeParams& params) override;
  Completion complete_multimodal(const RenderedPrompt& prompt, const SceneSnapshot& scene,
                                 const DecodeParams& params) override;
  std::string provider_id() const override { return "scripted"; }
  const OracleScript& script() const { return script_; }

 private:
  Completion reply_for(const std::string& fingerprint) const;
  OracleScript script_;
};

struct HttpConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{60000};
  int retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::optional<std::filesystem::path> image_path;
  std::ptrdiff_t max_in_flight = 4;
};

/// OpenAI-style chat-completions client. Transient failures (connection,
/// timeout, 429, 5xx) are retried with exponential backoff; other non-2xx
/// statuses fail at once with ProviderRejected.
class HttpGateway final : public Gateway {
 public:
  explicit HttpGateway(HttpConfig config);
  Completion complete(const RenderedPrompt& prompt, const DecodeParams& params) override;
  Completion complete_multimodal(const RenderedPrompt& prompt, const SceneSnapshot& scene,
                                 const DecodeParams& params) override;
  std::string provider_id() const override { return "http:" + config_.model; }

  nlohmann::json build_request_body(const RenderedPrompt& prompt, const SceneSnapshot* scene,
                                    const DecodeParams& params) const;
  const HttpConfig& config() const { return config_; }

 private:
  Completion send(const nlohmann::json& body);

  HttpConfig config_;
  std::string base_url_;
  std::string path_;
  std::counting_semaphore<1024> in_flight_;
};

/// Forwards to another gateway and remembers every exchange as an ExactPrompt
/// entry so a live session can be replayed offline.
class RecordingGateway final : public Gateway {
 public:
  explicit RecordingGateway(std::shared_ptr<Gateway> inner);
  Completion complete(const RenderedPrompt& prompt, const DecodeParams& params) override;
  Completion complete_multimodal(const RenderedPrompt& prompt, const SceneSnapshot& scene,
                                 const DecodeParams& params) override;
  std::string provider_id() const override { return inner_->provider_id(); }
  OracleScript recorded() const;

 private:
  void remember(std::string fingerprint, const std::string& reply);

  std::shared_ptr<Gateway> inner_;
  mutable std::mutex mu_;
  OracleScript script_;
};

struct ScriptedConfig {
  std::filesystem::path script_path;
};

struct GatewayConfig {
  std::variant<HttpConfig, ScriptedConfig> kind;
};

/// Loads scripts eagerly so a bad path surfaces before any episode starts.
std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config);

}  // namespace socratic
