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

// Access to a language model through two query modes: greedy completion and
// next-token probability mass over a small candidate set.
//
// A Backend talks to one model. The Gateway wraps a Backend with the
// concurrency bound, the token-bucket rate limit, retries with capped
// exponential backoff, stop-sequence truncation and the sampling fallback for
// backends that cannot return log-probabilities.

#ifndef SIMDISTILL_LLM_GATEWAY_H_
#define SIMDISTILL_LLM_GATEWAY_H_

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace simdistill {

// Decoding is always greedy; there are no sampling knobs.
struct CompletionRequest {
  std::string prompt;
  int max_tokens = 512;
  std::vector<std::string> stop_sequences = {"\n\nD)"};
};

inline constexpr int kNumScores = 5;

// Mass per score 0..4.
struct ScoreDistribution {
  std::array<double, kNumScores> probabilities{};
  bool normalized = false;
};

enum class EstimationMode { kLogprob, kSampled };
std::string_view EstimationModeName(EstimationMode mode);

// Raw mass per candidate surface, as reported by the backend.
struct TokenMasses {
  std::map<std::string, double> masses;
  EstimationMode mode = EstimationMode::kLogprob;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string Complete(const CompletionRequest& request) = 0;

  // Probability mass of each candidate as the immediate next token. Masses
  // need not sum to one. Throws capability-error when unsupported.
  virtual std::map<std::string, double> NextTokenMasses(
      const std::string& prompt, const std::vector<std::string>& candidates) = 0;

  // `count` single-token samples at temperature 1. The default throws
  // capability-error.
  virtual std::vector<std::string> SampleNextTokens(const std::string& prompt,
                                                    int count);

  // Throws config-error if a candidate cannot be a single token. Without a
  // tokenizer the default accepts optional leading whitespace followed by
  // exactly one non-whitespace scalar.
  virtual void ValidateCandidates(
      const std::vector<std::string>& candidates) const;
};

// Fixture-driven backend keyed by the SHA-256 of the exact prompt text.
//
// Fixture file: one JSON object per line,
//   {"prompt_sha256": hex, "response": "completion text"}
//   {"prompt_sha256": hex, "response": {"logprobs": {"0": -4.6, ...}}}
//   {"prompt_sha256": hex, "response": {"probs": {"0": 0.01, ...}}}
//   {"prompt_sha256": hex, "response": {"samples": ["4", "3", ...]}}
// Entries for the same digest are merged, later fields winning.
class ScriptedBackend : public Backend {
 public:
  struct Fixture {
    std::optional<std::string> completion;
    std::optional<std::map<std::string, double>> logprobs;
    std::optional<std::map<std::string, double>> probs;
    std::optional<std::vector<std::string>> samples;
  };

  ScriptedBackend() = default;
  static std::unique_ptr<ScriptedBackend> FromFile(
      const std::filesystem::path& path);

  void AddFixtureLine(const nlohmann::json& line);
  void AddCompletion(const std::string& prompt, std::string completion);
  void AddProbs(const std::string& prompt, std::map<std::string, double> probs);
  void AddLogprobs(const std::string& prompt,
                   std::map<std::string, double> logprobs);
  void AddSamples(const std::string& prompt, std::vector<std::string> samples);

  std::string Complete(const CompletionRequest& request) override;
  std::map<std::string, double> NextTokenMasses(
      const std::string& prompt,
      const std::vector<std::string>& candidates) override;
  std::vector<std::string> SampleNextTokens(const std::string& prompt,
                                            int count) override;

  size_t size() const { return fixtures_.size(); }

 private:
  const Fixture& Lookup(const std::string& prompt) const;

  std::unordered_map<std::string, Fixture> fixtures_;
};

// Maps the native wire contract onto other JSON-over-HTTP API shapes.
struct ApiAdapter {
  std::string complete_path = "/v1/complete";
  std::string logprobs_path = "/v1/next_token_logprobs";
  // Optional sampling endpoint used by the fallback; empty disables it.
  std::string sample_path;
  std::string prompt_field = "prompt";
  std::string max_tokens_field = "max_tokens";
  std::string stop_field = "stop";
  std::string candidates_field = "candidates";
  std::string count_field = "n";
  // JSON pointers into the response bodies.
  std::string text_pointer = "/text";
  std::string logprobs_pointer = "/logprobs";
  std::string samples_pointer = "/samples";
  bool supports_logprobs = true;
  // Merged into every request body, e.g. {"model": "..."}.
  nlohmann::json extra_body = nlohmann::json::object();

  static ApiAdapter FromJson(const nlohmann::json& j);
};

struct BackendConfig {
  std::string endpoint;
  // Name of the environment variable holding the bearer token; empty sends
  // no Authorization header.
  std::string auth_token_env;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 2;
  int max_concurrency = 4;
  std::optional<int> requests_per_minute;
  ApiAdapter adapter;

  // Throws config-error on a violated invariant.
  void Validate() const;
  static BackendConfig FromJson(const nlohmann::json& j);
};

// JSON over HTTP(S). A fresh connection is used per request so the backend
// can be shared by many workers.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(BackendConfig config);

  std::string Complete(const CompletionRequest& request) override;
  std::map<std::string, double> NextTokenMasses(
      const std::string& prompt,
      const std::vector<std::string>& candidates) override;
  std::vector<std::string> SampleNextTokens(const std::string& prompt,
                                            int count) override;

 private:
  nlohmann::json Post(const std::string& path, nlohmann::json body) const;

  BackendConfig config_;
  std::string scheme_host_port_;
  std::string base_path_;
  std::string token_;
};

// Token bucket. Acquire() reserves one token and sleeps until the
// reservation is due, so the long-run rate never exceeds the refill rate.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;
  using NowFn = std::function<Clock::time_point()>;
  using SleepFn = std::function<void(Clock::duration)>;

  RateLimiter(double requests_per_minute, double burst = 1.0,
              NowFn now = nullptr, SleepFn sleep = nullptr);

  void Acquire();

 private:
  double rate_per_second_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  NowFn now_;
  SleepFn sleep_;
  std::mutex mu_;
};

// Blocks while `limit` holders are inside.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int limit);

  class Slot {
   public:
    explicit Slot(ConcurrencyLimiter& owner) : owner_(owner) { owner_.Enter(); }
    ~Slot() { owner_.Leave(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    ConcurrencyLimiter& owner_;
  };

 private:
  void Enter();
  void Leave();

  int limit_;
  int in_use_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds max_backoff{5000};
};

struct GatewayOptions {
  int max_concurrency = 4;
  std::optional<int> requests_per_minute;
  RetryPolicy retry;
  // Samples drawn per query when the backend has no log-probabilities.
  int sample_count = 32;
  std::function<void(std::chrono::milliseconds)> sleep;

  static GatewayOptions FromBackendConfig(const BackendConfig& config);
};

// True for failures worth another attempt: transport errors, timeouts,
// HTTP 429 and 5xx.
bool IsRetriable(const std::exception& e);

class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayOptions options);

  // Greedy completion truncated at the first stop sequence.
  std::string Complete(const CompletionRequest& request);

  // Falls back to `sample_count` samples when the backend reports a
  // capability-error; the result is then marked EstimationMode::kSampled.
  TokenMasses NextTokenDistribution(const std::string& prompt,
                                    const std::vector<std::string>& candidates);

  void ValidateCandidates(const std::vector<std::string>& candidates) const {
    backend_->ValidateCandidates(candidates);
  }

  // Backend calls issued, including retries.
  long attempts() const { return attempts_.load(); }
  const GatewayOptions& options() const { return options_; }

 private:
  template <typename Fn>
  auto WithRetries(Fn&& fn) -> decltype(fn());

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;
  ConcurrencyLimiter concurrency_;
  std::unique_ptr<RateLimiter> rate_limiter_;
  std::atomic<long> attempts_{0};
};

std::string TruncateAtStop(std::string text,
                           const std::vector<std::string>& stop_sequences);

}  // namespace simdistill

#endif  // SIMDISTILL_LLM_GATEWAY_H_
