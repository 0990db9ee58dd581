#include "socratic/model_gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace socratic {
namespace {

using nlohmann::json;

std::uint64_t word_count(std::string_view s) {
  std::uint64_t n = 0;
  bool in_word = false;
  for (char c : s) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

[[noreturn]] void malformed(const std::string& detail) {
  throw GatewayError(GatewayErrorKind::MalformedScript, "MalformedScript: " + detail);
}

std::string reply_text(const json& r, const std::string& where) {
  if (r.is_string()) return r.get<std::string>();
  if (r.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!r[i].is_string()) malformed(where + ".reply[" + std::to_string(i) + "] is not a string");
      if (i) out += '\n';
      out += r[i].get<std::string>();
    }
    return out;
  }
  malformed(where + ".reply must be a string or an array of lines");
}

std::string excerpt(const std::string& body) { return body.size() <= 200 ? body : body.substr(0, 200) + "..."; }

}  // namespace

DecodeParams DecodeParams::for_vocabulary(const ObjectVocabulary& vocab) {
  DecodeParams p;
  for (const auto& word : vocab) p.token_bias[word] = kObjectTokenBias;
  return p;
}

std::string_view to_string(GatewayErrorKind kind) {
  switch (kind) {
    case GatewayErrorKind::ProviderUnreachable: return "ProviderUnreachable";
    case GatewayErrorKind::ProviderRejected: return "ProviderRejected";
    case GatewayErrorKind::ScriptMiss: return "ScriptMiss";
    case GatewayErrorKind::Timeout: return "Timeout";
    case GatewayErrorKind::MalformedScript: return "MalformedScript";
  }
  return "?";
}

GatewayError::GatewayError(GatewayErrorKind kind, const std::string& detail, int status, int attempts)
    : Error(detail), kind_(kind), status_(status), attempts_(attempts) {}

std::string user_message(const RenderedPrompt& prompt, const SceneSnapshot* scene) {
  std::string out = prompt.user_text;
  if (scene) {
    if (!out.empty() && out.back() != '\n') out += '\n';
    out += "\nObservation:\n" + scene->description;
  }
  return out;
}

std::string request_fingerprint(const RenderedPrompt& prompt, const SceneSnapshot* scene) {
  return prompt.system_text + "\n\n" + user_message(prompt, scene);
}

bool ScriptEntry::matches(std::string_view fingerprint) const {
  if (kind == MatcherKind::ExactPrompt) return fingerprint == exact;
  return std::all_of(needles.begin(), needles.end(),
                     [&](const std::string& n) { return fingerprint.find(n) != std::string_view::npos; });
}

const ScriptEntry* OracleScript::match(std::string_view fingerprint) const {
  for (const auto& e : entries) {
    if (e.matches(fingerprint)) return &e;
  }
  return nullptr;
}

OracleScript parse_script(const json& j) {
  if (!j.is_object()) malformed("top level must be an object");
  OracleScript s;
  const auto mode = j.value("mode", std::string("strict"));
  if (mode == "strict") {
    s.strict = true;
  } else if (mode == "fallback") {
    s.strict = false;
    if (!j.contains("fallback_reply")) malformed("fallback mode needs 'fallback_reply'");
    s.fallback_reply = reply_text(j.at("fallback_reply"), "fallback_reply");
  } else {
    malformed("unknown mode '" + mode + "'");
  }
  if (!j.contains("entries") || !j.at("entries").is_array()) malformed("'entries' must be an array");
  const auto& entries = j.at("entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& ej = entries[i];
    const auto where = "entries[" + std::to_string(i) + "]";
    if (!ej.is_object()) malformed(where + " is not an object");
    const bool exact = ej.contains("exact");
    const bool contains = ej.contains("contains_all");
    if (exact == contains) malformed(where + " needs exactly one of 'exact' or 'contains_all'");
    if (!ej.contains("reply")) malformed(where + " has no reply");
    ScriptEntry e;
    if (exact) {
      if (!ej.at("exact").is_string()) malformed(where + ".exact is not a string");
      e.kind = MatcherKind::ExactPrompt;
      e.exact = ej.at("exact").get<std::string>();
    } else {
      const auto& needles = ej.at("contains_all");
      if (!needles.is_array() || needles.empty()) malformed(where + ".contains_all must be a non-empty array");
      e.kind = MatcherKind::ContainsAll;
      for (const auto& n : needles) {
        if (!n.is_string()) malformed(where + ".contains_all holds a non-string");
        e.needles.push_back(n.get<std::string>());
      }
    }
    e.reply = reply_text(ej.at("reply"), where);
    s.entries.push_back(std::move(e));
  }
  return s;
}

OracleScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) malformed("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    malformed(path.string() + ": " + e.what());
  }
  return parse_script(j);
}

json script_to_json(const OracleScript& script) {
  json entries = json::array();
  for (const auto& e : script.entries) {
    json ej;
    if (e.kind == MatcherKind::ExactPrompt) {
      ej["exact"] = e.exact;
    } else {
      ej["contains_all"] = e.needles;
    }
    ej["reply"] = e.reply;
    entries.push_back(std::move(ej));
  }
  json j{{"mode", script.strict ? "strict" : "fallback"}, {"entries", entries}};
  if (!script.strict) j["fallback_reply"] = script.fallback_reply;
  return j;
}

void save_script(const OracleScript& script, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write script " + path.string());
  out << script_to_json(script).dump(2) << '\n';
}

ScriptedGateway::ScriptedGateway(OracleScript script) : script_(std::move(script)) {}

Completion ScriptedGateway::reply_for(const std::string& fingerprint) const {
  const auto* entry = script_.match(fingerprint);
  if (!entry && script_.strict) {
    auto head = fingerprint.substr(0, std::min<std::size_t>(fingerprint.size(), 160));
    throw GatewayError(GatewayErrorKind::ScriptMiss, "ScriptMiss: no script entry matches request starting '" + head + "'");
  }
  Completion c;
  c.text = entry ? entry->reply : script_.fallback_reply;
  c.provider_id = provider_id();
  c.tokens = {word_count(fingerprint), word_count(c.text)};
  return c;
}

Completion ScriptedGateway::complete(const RenderedPrompt& prompt, const DecodeParams&) {
  return reply_for(request_fingerprint(prompt, nullptr));
}

Completion ScriptedGateway::complete_multimodal(const RenderedPrompt& prompt, const SceneSnapshot& scene,
                                                const DecodeParams&) {
  return reply_for(request_fingerprint(prompt, &scene));
}

HttpGateway::HttpGateway(HttpConfig config)
    : config_(std::move(config)), in_flight_(std::clamp<std::ptrdiff_t>(config_.max_in_flight, 1, 1024)) {
  const auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos) throw Error("endpoint must start with http:// or https://: " + config_.endpoint);
  const auto slash = config_.endpoint.find('/', scheme + 3);
  base_url_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : config_.endpoint.substr(slash);
  if (config_.retries < 0) config_.retries = 0;
}

json HttpGateway::build_request_body(const RenderedPrompt& prompt, const SceneSnapshot* scene,
                                     const DecodeParams& params) const {
  json user_content = user_message(prompt, scene);
  if (scene && config_.image_path) {
    std::ifstream in(*config_.image_path, std::ios::binary);
    if (!in) throw Error("cannot read image " + config_.image_path->string());
    std::ostringstream buf;
    buf << in.rdbuf();
    user_content = json::array({
        {{"type", "text"}, {"text", user_message(prompt, scene)}},
        {{"type", "image_url"},
         {"image_url", {{"url", "data:image/png;base64," + httplib::detail::base64_encode(buf.str())}}}},
    });
  }
  json bias = json::object();
  for (const auto& [token, value] : params.token_bias) bias[token] = value;
  return json{{"model", config_.model},
              {"messages",
               json::array({{{"role", "system"}, {"content", prompt.system_text}},
                            {{"role", "user"}, {"content", std::move(user_content)}}})},
              {"temperature", params.temperature},
              {"logit_bias", std::move(bias)},
              {"max_tokens", params.max_tokens}};
}

Completion HttpGateway::complete(const RenderedPrompt& prompt, const DecodeParams& params) {
  return send(build_request_body(prompt, nullptr, params));
}

Completion HttpGateway::complete_multimodal(const RenderedPrompt& prompt, const SceneSnapshot& scene,
                                            const DecodeParams& params) {
  return send(build_request_body(prompt, &scene, params));
}

Completion HttpGateway::send(const json& body) {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const auto payload = body.dump();
  const int attempts = config_.retries + 1;
  GatewayErrorKind last_kind = GatewayErrorKind::ProviderUnreachable;
  std::string last_detail;
  int last_status = 0;

  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(config_.backoff_base * (1 << std::min(attempt - 2, 10)));

    httplib::Client client(base_url_);
    const auto secs = config_.timeout.count() / 1000;
    const auto usecs = (config_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, payload, "application/json");
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    if (!res) {
      const auto err = res.error();
      last_kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                      ? GatewayErrorKind::Timeout
                      : GatewayErrorKind::ProviderUnreachable;
      last_detail = httplib::to_string(err);
      last_status = 0;
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_kind = GatewayErrorKind::ProviderRejected;
      last_status = res->status;
      last_detail = excerpt(res->body);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw GatewayError(GatewayErrorKind::ProviderRejected,
                         "ProviderRejected(" + std::to_string(res->status) + "): " + excerpt(res->body), res->status,
                         attempt);
    }
    try {
      const auto reply = json::parse(res->body);
      Completion c;
      c.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
      c.provider_id = provider_id();
      c.latency_ms = elapsed;
      if (reply.contains("usage")) {
        c.tokens.prompt = reply["usage"].value("prompt_tokens", std::uint64_t{0});
        c.tokens.completion = reply["usage"].value("completion_tokens", std::uint64_t{0});
      }
      return c;
    } catch (const json::exception& e) {
      throw GatewayError(GatewayErrorKind::ProviderRejected,
                         "ProviderRejected(" + std::to_string(res->status) + "): malformed body: " + e.what(),
                         res->status, attempt);
    }
  }
  std::string what = std::string(to_string(last_kind));
  if (last_status) what += "(" + std::to_string(last_status) + ")";
  what += " after " + std::to_string(attempts) + " attempts: " + last_detail;
  throw GatewayError(last_kind, what, last_status, attempts);
}

RecordingGateway::RecordingGateway(std::shared_ptr<Gateway> inner) : inner_(std::move(inner)) {}

void RecordingGateway::remember(std::string fingerprint, const std::string& reply) {
  std::lock_guard lock(mu_);
  if (script_.match(fingerprint)) return;  // first wins on replay anyway
  ScriptEntry e;
  e.kind = MatcherKind::ExactPrompt;
  e.exact = std::move(fingerprint);
  e.reply = reply;
  script_.entries.push_back(std::move(e));
}

Completion RecordingGateway::complete(const RenderedPrompt& prompt, const DecodeParams& params) {
  auto c = inner_->complete(prompt, params);
  remember(request_fingerprint(prompt, nullptr), c.text);
  return c;
}

Completion RecordingGateway::complete_multimodal(const RenderedPrompt& prompt, const SceneSnapshot& scene,
                                                 const DecodeParams& params) {
  auto c = inner_->complete_multimodal(prompt, scene, params);
  remember(request_fingerprint(prompt, &scene), c.text);
  return c;
}

OracleScript RecordingGateway::recorded() const {
  std::lock_guard lock(mu_);
  auto out = script_;
  // Episodes may interleave; sorting keeps saved scripts stable across runs.
  std::sort(out.entries.begin(), out.entries.end(),
            [](const ScriptEntry& a, const ScriptEntry& b) { return a.exact < b.exact; });
  return out;
}

std::shared_ptr<Gateway> make_gateway(const GatewayConfig& config) {
  if (const auto* http = std::get_if<HttpConfig>(&config.kind)) return std::make_shared<HttpGateway>(*http);
  const auto& scripted = std::get<ScriptedConfig>(config.kind);
  return std::make_shared<ScriptedGateway>(load_script(scripted.script_path));
}

}  // namespace socratic
