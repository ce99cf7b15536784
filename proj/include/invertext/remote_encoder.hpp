#pragma once

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

#include "invertext/encoder.hpp"  // must precede httplib: Eigen breaks after its system includes
#include "httplib.h"
#include "json.hpp"

namespace invertext {

struct RemoteEncoderError : std::runtime_error {
  int status;  // 0 for transport-level failures
  RemoteEncoderError(int s, const std::string& msg)
      : std::runtime_error(msg), status(s) {}
};

// Adapter for remote embedding services. Returns the service's vector
// verbatim (no normalization); the dimension seen on the first call is
// enforced on every later call. Credential comes from INVERTEXT_API_KEY.
class RemoteEncoder : public Encoder {
 public:
  RemoteEncoder(std::string host, int port, std::string path, std::string model,
                int max_attempts = 3, int base_backoff_ms = 100)
      : host_(std::move(host)), port_(port), path_(std::move(path)),
        model_(std::move(model)), max_attempts_(max_attempts),
        base_backoff_ms_(base_backoff_ms) {
    const char* key = std::getenv("INVERTEXT_API_KEY");
    if (key) api_key_ = key;
  }

  Embedding encode(const std::string& text) const override {
    nlohmann::json req = {{"input", text}, {"model", model_}};
    std::string body = req.dump();
    int backoff = base_backoff_ms_;
    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt < max_attempts_; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff = std::min(backoff * 2, 2000);
      }
      httplib::Client client(host_, port_);
      client.set_read_timeout(10, 0);
      httplib::Headers headers;
      if (!api_key_.empty())
        headers.emplace("Authorization", "Bearer " + api_key_);
      auto res = client.Post(path_, headers, body, "application/json");
      if (!res) {
        last_error = "transport failure";
        continue;  // retryable
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "status " + std::to_string(res->status);
        continue;  // retryable
      }
      if (res->status < 200 || res->status >= 300)
        throw RemoteEncoderError(res->status,
                                 "remote encoder: HTTP " + std::to_string(res->status));
      return parse_embedding(res->body);
    }
    throw RemoteEncoderError(0, "remote encoder: retries exhausted (" + last_error + ")");
  }

  int dim() const override { return dim_; }

 private:
  Embedding parse_embedding(const std::string& body) const {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded())
      throw RemoteEncoderError(0, "remote encoder: malformed response body");
    const nlohmann::json* arr = find_numeric_array(j);
    if (!arr)
      throw RemoteEncoderError(0, "remote encoder: no numeric array in response");
    Embedding e(static_cast<Eigen::Index>(arr->size()));
    for (std::size_t i = 0; i < arr->size(); ++i) {
      double v = (*arr)[i].get<double>();
      if (!std::isfinite(v)) throw std::runtime_error("invalid embedding");
      e[static_cast<Eigen::Index>(i)] = static_cast<float>(v);
    }
    if (dim_ == 0) {
      dim_ = static_cast<int>(e.size());
    } else if (dim_ != static_cast<int>(e.size())) {
      throw std::runtime_error("dimension mismatch");
    }
    return e;
  }

  static const nlohmann::json* find_numeric_array(const nlohmann::json& j) {
    if (j.is_array() && !j.empty() && j[0].is_number()) return &j;
    if (j.is_array() || j.is_object()) {
      for (const auto& item : j) {
        if (const auto* found = find_numeric_array(item)) return found;
      }
    }
    return nullptr;
  }

  std::string host_;
  int port_;
  std::string path_;
  std::string model_;
  std::string api_key_;
  int max_attempts_;
  int base_backoff_ms_;
  mutable int dim_ = 0;  // recorded on first successful call
};

}  // namespace invertext
