// Copyright 2026 The simdistill Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cmath>
#include <cstdlib>

#include "simdistill/error.h"
#include "simdistill/llm_gateway.h"

namespace simdistill {

ApiAdapter ApiAdapter::FromJson(const nlohmann::json& j) {
  ApiAdapter a;
  auto read = [&j](const char* key, std::string& field) {
    if (j.contains(key)) field = j.at(key).get<std::string>();
  };
  read("complete_path", a.complete_path);
  read("logprobs_path", a.logprobs_path);
  read("sample_path", a.sample_path);
  read("prompt_field", a.prompt_field);
  read("max_tokens_field", a.max_tokens_field);
  read("stop_field", a.stop_field);
  read("candidates_field", a.candidates_field);
  read("count_field", a.count_field);
  read("text_pointer", a.text_pointer);
  read("logprobs_pointer", a.logprobs_pointer);
  read("samples_pointer", a.samples_pointer);
  if (j.contains("supports_logprobs")) {
    a.supports_logprobs = j.at("supports_logprobs").get<bool>();
  }
  if (j.contains("extra_body")) {
    a.extra_body = j.at("extra_body");
    if (!a.extra_body.is_object()) {
      throw Error(ErrorCode::kConfigError, "adapter.extra_body must be an object");
    }
  }
  return a;
}

void BackendConfig::Validate() const {
  if (timeout.count() <= 0) throw Error(ErrorCode::kConfigError, "timeout must be > 0");
  if (max_concurrency < 1) {
    throw Error(ErrorCode::kConfigError, "max_concurrency must be >= 1");
  }
  if (max_retries < 0) throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
  if (requests_per_minute && *requests_per_minute < 1) {
    throw Error(ErrorCode::kConfigError, "requests_per_minute must be positive");
  }
}

BackendConfig BackendConfig::FromJson(const nlohmann::json& j) {
  BackendConfig c;
  try {
    if (j.contains("endpoint")) c.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("auth_token_env")) {
      c.auth_token_env = j.at("auth_token_env").get<std::string>();
    }
    if (j.contains("timeout_ms")) {
      c.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long>());
    }
    if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
    if (j.contains("max_concurrency")) {
      c.max_concurrency = j.at("max_concurrency").get<int>();
    }
    if (j.contains("requests_per_minute") && !j.at("requests_per_minute").is_null()) {
      c.requests_per_minute = j.at("requests_per_minute").get<int>();
    }
    if (j.contains("adapter")) c.adapter = ApiAdapter::FromJson(j.at("adapter"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("backend config: ") + e.what());
  }
  c.Validate();
  return c;
}

RemoteBackend::RemoteBackend(BackendConfig config) : config_(std::move(config)) {
  config_.Validate();
  const std::string& url = config_.endpoint;
  const size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "endpoint '" + url + "' lacks a scheme");
  }
  const size_t path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    base_path_ = url.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }
  if (!config_.auth_token_env.empty()) {
    const char* token = std::getenv(config_.auth_token_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw Error(ErrorCode::kConfigError,
                  "environment variable " + config_.auth_token_env + " is not set");
    }
    token_ = token;
  }
}

nlohmann::json RemoteBackend::Post(const std::string& path,
                                   nlohmann::json body) const {
  for (const auto& [key, value] : config_.adapter.extra_body.items()) {
    body[key] = value;
  }
  httplib::Client client(scheme_host_port_);
  if (!client.is_valid()) {
    throw Error(ErrorCode::kConfigError, "cannot use endpoint " + config_.endpoint);
  }
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
      config_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  if (!token_.empty()) client.set_bearer_token_auth(token_);

  const auto started = std::chrono::steady_clock::now();
  const auto result =
      client.Post(base_path_ + path, body.dump(), "application/json");
  if (!result) {
    const auto err = result.error();
    const bool timed_out =
        err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read &&
         std::chrono::steady_clock::now() - started >= config_.timeout);
    if (timed_out) {
      throw Error(ErrorCode::kTimeout, "request to " + config_.endpoint + " timed out");
    }
    throw Error(ErrorCode::kBackendUnreachable,
                config_.endpoint + ": " + httplib::to_string(err));
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(ErrorCode::kBackendError,
                "status " + std::to_string(result->status) + " from " + path,
                result->status);
  }
  try {
    return nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackendError,
                std::string("malformed response body: ") + e.what(), result->status);
  }
}

namespace {

const nlohmann::json& At(const nlohmann::json& response, const std::string& pointer) {
  try {
    return response.at(nlohmann::json::json_pointer(pointer));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackendError,
                "response lacks " + pointer + ": " + e.what(), 200);
  }
}

}  // namespace

std::string RemoteBackend::Complete(const CompletionRequest& request) {
  const ApiAdapter& a = config_.adapter;
  nlohmann::json body;
  body[a.prompt_field] = request.prompt;
  body[a.max_tokens_field] = request.max_tokens;
  body[a.stop_field] = request.stop_sequences;
  const auto response = Post(a.complete_path, std::move(body));
  const auto& text = At(response, a.text_pointer);
  if (!text.is_string()) {
    throw Error(ErrorCode::kBackendError, "completion text is not a string", 200);
  }
  return text.get<std::string>();
}

std::map<std::string, double> RemoteBackend::NextTokenMasses(
    const std::string& prompt, const std::vector<std::string>& candidates) {
  const ApiAdapter& a = config_.adapter;
  if (!a.supports_logprobs) {
    throw Error(ErrorCode::kCapabilityError, "adapter has no log-probability endpoint");
  }
  nlohmann::json body;
  body[a.prompt_field] = prompt;
  body[a.candidates_field] = candidates;
  const auto response = Post(a.logprobs_path, std::move(body));
  const auto& logprobs = At(response, a.logprobs_pointer);
  std::map<std::string, double> out;
  for (const auto& c : candidates) {
    if (!logprobs.contains(c) || logprobs.at(c).is_null()) {
      out[c] = 0.0;
      continue;
    }
    const double lp = logprobs.at(c).get<double>();
    if (std::isnan(lp) || lp > 0.0) {
      throw Error(ErrorCode::kBackendError,
                  "invalid log-probability for candidate '" + c + "'", 200);
    }
    out[c] = std::exp(lp);
  }
  return out;
}

std::vector<std::string> RemoteBackend::SampleNextTokens(const std::string& prompt,
                                                         int count) {
  const ApiAdapter& a = config_.adapter;
  if (a.sample_path.empty()) {
    throw Error(ErrorCode::kCapabilityError, "adapter has no sampling endpoint");
  }
  nlohmann::json body;
  body[a.prompt_field] = prompt;
  body[a.count_field] = count;
  body[a.max_tokens_field] = 1;
  body["temperature"] = 1.0;
  const auto response = Post(a.sample_path, std::move(body));
  const auto& samples = At(response, a.samples_pointer);
  try {
    return samples.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBackendError, std::string("bad samples: ") + e.what(), 200);
  }
}

}  // namespace simdistill
