#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "botforge/backend.hpp"
#include "botforge/error.hpp"

namespace botforge {

inline constexpr const char* kApiKeyEnv = "BOTFORGE_API_KEY";

struct HttpBackendOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;  // empty: no Authorization header
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::seconds timeout{60};
  int max_in_flight = 4;
  std::function<void(const std::string&)> on_retry;  // called before each retry
};

/// API key from BOTFORGE_API_KEY, or empty.
inline std::string api_key_from_env() {
  const char* v = std::getenv(kApiKeyEnv);
  return v ? std::string(v) : std::string();
}

/// Chat-completion request body: model, temperature, max_tokens and a
/// system + user message pair.
inline nlohmann::json chat_request_body(const std::string& system_text, const std::string& user_text,
                                        const GenerationParams& params) {
  return {{"model", params.model_name},
          {"temperature", params.temperature},
          {"max_tokens", params.max_tokens},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", system_text}},
                                  {{"role", "user"}, {"content", user_text}}})}};
}

/// Content of the first choice's message.
inline std::string chat_response_text(const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw BackendParseError("chat completion response is not JSON", body);
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw BackendParseError("chat completion response has no choices[0].message.content", body);
  }
}

/// Chat-completion client over HTTP(S) with bounded retries and an in-flight cap.
class HttpChatBackend final : public ContentBackend {
public:
  explicit HttpChatBackend(HttpBackendOptions opt)
      : opt_(std::move(opt)), slots_(std::max(1, opt_.max_in_flight)) {
    split_url(opt_.base_url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (origin_.starts_with("https://"))
      throw BackendError("https base URL requires a build with OpenSSL support");
#endif
  }

  std::string name() const override { return "llm-http"; }

  /// Number of HTTP requests issued so far, retries included.
  int requests_sent() const { return requests_.load(); }

  std::string complete(const std::string& system_text, const std::string& user_text,
                       const GenerationParams& params) override {
    const std::string body = chat_request_body(system_text, user_text, params).dump();
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};

    httplib::Client client(origin_);
    client.set_connection_timeout(opt_.timeout);
    client.set_read_timeout(opt_.timeout);
    client.set_write_timeout(opt_.timeout);
    httplib::Headers headers;
    if (!opt_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opt_.api_key);

    std::string last_error;
    auto backoff = opt_.initial_backoff;
    for (int attempt = 0; attempt <= opt_.max_retries; ++attempt) {
      if (attempt > 0) {
        if (opt_.on_retry)
          opt_.on_retry("retry " + std::to_string(attempt) + "/" + std::to_string(opt_.max_retries) +
                        " after " + last_error);
        std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, opt_.max_backoff);
      }
      ++requests_;
      auto res = client.Post(path_ + "/chat/completions", headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return chat_response_text(res->body);
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500);
      if (res->status != 429 && res->status < 500) break;  // client errors are final
    }
    throw BackendError("llm-http request to " + origin_ + path_ + " failed: " + last_error);
  }

private:
  void split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ValidationError("base URL '" + url + "' lacks a scheme");
    const auto slash = url.find('/', scheme + 3);
    origin_ = url.substr(0, slash);
    path_ = slash == std::string::npos ? "" : url.substr(slash);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
  }

  HttpBackendOptions opt_;
  std::string origin_;
  std::string path_;
  std::counting_semaphore<> slots_;
  std::atomic<int> requests_{0};
};

}  // namespace botforge
