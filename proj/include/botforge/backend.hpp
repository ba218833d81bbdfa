#pragma once

#include <string>

namespace botforge {

struct GenerationParams {
  std::string model_name = "gpt-4.1-mini";
  double temperature = 0.0;
  int max_tokens = 400;
};

/// Text generation backend. Implementations must tolerate concurrent calls.
class ContentBackend {
public:
  virtual ~ContentBackend() = default;

  virtual std::string complete(const std::string& system_text, const std::string& user_text,
                               const GenerationParams& params) = 0;

  virtual std::string name() const = 0;
};

}  // namespace botforge
