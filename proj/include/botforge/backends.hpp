#pragma once

#include <memory>

#include "botforge/backend.hpp"
#include "botforge/http_backend.hpp"
#include "botforge/rng.hpp"
#include "botforge/simcore.hpp"
#include "botforge/template_backend.hpp"

namespace botforge {

inline std::uint64_t template_seed(std::uint64_t root) {
  return splitmix64(root ^ fnv1a64("backend-template"));
}

/// Backend selected by `cfg.backend`. The API key only ever comes from the environment.
inline std::unique_ptr<ContentBackend> make_backend(const ScenarioConfig& cfg,
                                                    std::function<void(const std::string&)> on_retry = {}) {
  if (cfg.backend == "template")
    return std::make_unique<TemplateBackend>(template_seed(cfg.seed), cfg.template_tone);
  if (cfg.backend == "llm-http") {
    HttpBackendOptions opt;
    opt.base_url = cfg.base_url;
    opt.api_key = api_key_from_env();
    opt.max_retries = cfg.max_retries;
    opt.max_in_flight = cfg.max_in_flight;
    opt.on_retry = std::move(on_retry);
    return std::make_unique<HttpChatBackend>(std::move(opt));
  }
  throw ValidationError("unknown backend '" + cfg.backend + "' (template|llm-http)");
}

}  // namespace botforge
