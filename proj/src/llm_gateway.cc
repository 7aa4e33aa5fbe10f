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

#include "simdistill/llm_gateway.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "simdistill/digest.h"
#include "simdistill/error.h"
#include "simdistill/unicode.h"

namespace simdistill {

std::string_view EstimationModeName(EstimationMode mode) {
  return mode == EstimationMode::kLogprob ? "logprob" : "sampled";
}

std::vector<std::string> Backend::SampleNextTokens(const std::string&, int) {
  throw Error(ErrorCode::kCapabilityError, "backend cannot sample tokens");
}

void Backend::ValidateCandidates(
    const std::vector<std::string>& candidates) const {
  for (const auto& candidate : candidates) {
    const std::u32string scalars = unicode::Decode(candidate);
    size_t i = 0;
    while (i < scalars.size() && unicode::IsWhitespace(scalars[i])) ++i;
    if (scalars.size() - i != 1) {
      throw Error(ErrorCode::kConfigError,
                  "candidate '" + candidate + "' is not a single token");
    }
  }
}

// ---------------------------------------------------------------------------
// ScriptedBackend
// ---------------------------------------------------------------------------

std::unique_ptr<ScriptedBackend> ScriptedBackend::FromFile(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open fixtures " + path.string());
  auto backend = std::make_unique<ScriptedBackend>();
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (unicode::Trim(line).empty()) continue;
    try {
      backend->AddFixtureLine(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfigError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what(),
                  line_no);
    }
  }
  return backend;
}

void ScriptedBackend::AddFixtureLine(const nlohmann::json& line) {
  const auto digest = line.at("prompt_sha256").get<std::string>();
  const auto& response = line.at("response");
  Fixture& fixture = fixtures_[digest];
  if (response.is_string()) {
    fixture.completion = response.get<std::string>();
    return;
  }
  if (!response.is_object()) {
    throw Error(ErrorCode::kConfigError, "fixture response must be a string or object");
  }
  if (response.contains("logprobs")) {
    fixture.logprobs = response["logprobs"].get<std::map<std::string, double>>();
  }
  if (response.contains("probs")) {
    fixture.probs = response["probs"].get<std::map<std::string, double>>();
  }
  if (response.contains("samples")) {
    fixture.samples = response["samples"].get<std::vector<std::string>>();
  }
}

void ScriptedBackend::AddCompletion(const std::string& prompt,
                                    std::string completion) {
  fixtures_[Sha256Hex(prompt)].completion = std::move(completion);
}

void ScriptedBackend::AddProbs(const std::string& prompt,
                               std::map<std::string, double> probs) {
  fixtures_[Sha256Hex(prompt)].probs = std::move(probs);
}

void ScriptedBackend::AddLogprobs(const std::string& prompt,
                                  std::map<std::string, double> logprobs) {
  fixtures_[Sha256Hex(prompt)].logprobs = std::move(logprobs);
}

void ScriptedBackend::AddSamples(const std::string& prompt,
                                 std::vector<std::string> samples) {
  fixtures_[Sha256Hex(prompt)].samples = std::move(samples);
}

const ScriptedBackend::Fixture& ScriptedBackend::Lookup(
    const std::string& prompt) const {
  const std::string digest = Sha256Hex(prompt);
  const auto it = fixtures_.find(digest);
  if (it == fixtures_.end()) {
    throw Error(ErrorCode::kBackendError, "unknown-fixture " + digest);
  }
  return it->second;
}

std::string ScriptedBackend::Complete(const CompletionRequest& request) {
  const Fixture& fixture = Lookup(request.prompt);
  if (!fixture.completion) {
    throw Error(ErrorCode::kBackendError,
                "unknown-fixture: no completion for " + Sha256Hex(request.prompt));
  }
  return *fixture.completion;
}

std::map<std::string, double> ScriptedBackend::NextTokenMasses(
    const std::string& prompt, const std::vector<std::string>& candidates) {
  const Fixture& fixture = Lookup(prompt);
  std::map<std::string, double> out;
  if (fixture.probs) {
    for (const auto& c : candidates) {
      const auto it = fixture.probs->find(c);
      out[c] = it == fixture.probs->end() ? 0.0 : it->second;
    }
    return out;
  }
  if (fixture.logprobs) {
    for (const auto& c : candidates) {
      const auto it = fixture.logprobs->find(c);
      out[c] = it == fixture.logprobs->end() ? 0.0 : std::exp(it->second);
    }
    return out;
  }
  throw Error(ErrorCode::kCapabilityError,
              "fixture has no log-probabilities for " + Sha256Hex(prompt));
}

std::vector<std::string> ScriptedBackend::SampleNextTokens(
    const std::string& prompt, int count) {
  const Fixture& fixture = Lookup(prompt);
  if (!fixture.samples || fixture.samples->empty()) {
    throw Error(ErrorCode::kCapabilityError,
                "fixture has no samples for " + Sha256Hex(prompt));
  }
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back((*fixture.samples)[static_cast<size_t>(i) % fixture.samples->size()]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Limiters
// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_minute, double burst, NowFn now,
                         SleepFn sleep)
    : rate_per_second_(requests_per_minute / 60.0),
      burst_(burst),
      tokens_(burst),
      now_(now ? std::move(now) : NowFn([] { return Clock::now(); })),
      sleep_(sleep ? std::move(sleep)
                   : SleepFn([](Clock::duration d) { std::this_thread::sleep_for(d); })) {
  if (!(requests_per_minute > 0) || !(burst >= 1.0)) {
    throw Error(ErrorCode::kConfigError, "rate limit and burst must be positive");
  }
  last_ = now_();
}

void RateLimiter::Acquire() {
  Clock::duration wait{0};
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto now = now_();
    if (now > last_) {
      const double elapsed = std::chrono::duration<double>(now - last_).count();
      tokens_ = std::min(burst_, tokens_ + elapsed * rate_per_second_);
      last_ = now;
    }
    tokens_ -= 1.0;
    if (tokens_ < 0) {
      wait = std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double>(-tokens_ / rate_per_second_));
    }
  }
  if (wait > Clock::duration::zero()) sleep_(wait);
}

ConcurrencyLimiter::ConcurrencyLimiter(int limit) : limit_(limit) {
  if (limit < 1) throw Error(ErrorCode::kConfigError, "max_concurrency must be >= 1");
}

void ConcurrencyLimiter::Enter() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [this] { return in_use_ < limit_; });
  ++in_use_;
}

void ConcurrencyLimiter::Leave() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    --in_use_;
  }
  cv_.notify_one();
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

GatewayOptions GatewayOptions::FromBackendConfig(const BackendConfig& config) {
  GatewayOptions options;
  options.max_concurrency = config.max_concurrency;
  options.requests_per_minute = config.requests_per_minute;
  options.retry.max_retries = config.max_retries;
  return options;
}

bool IsRetriable(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (err == nullptr) return false;
  switch (err->code()) {
    case ErrorCode::kBackendUnreachable:
    case ErrorCode::kTimeout:
      return true;
    case ErrorCode::kBackendError:
      return err->detail() == 429 || err->detail() >= 500;
    default:
      return false;
  }
}

std::string TruncateAtStop(std::string text,
                           const std::vector<std::string>& stop_sequences) {
  size_t cut = text.size();
  for (const auto& stop : stop_sequences) {
    if (stop.empty()) continue;
    cut = std::min(cut, text.find(stop));
  }
  text.resize(cut);
  return text;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      concurrency_(options_.max_concurrency) {
  if (!backend_) throw Error(ErrorCode::kConfigError, "gateway needs a backend");
  if (options_.retry.max_retries < 0) {
    throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
  }
  if (options_.sample_count < 1) {
    throw Error(ErrorCode::kConfigError, "sample_count must be >= 1");
  }
  if (options_.requests_per_minute) {
    rate_limiter_ = std::make_unique<RateLimiter>(*options_.requests_per_minute);
  }
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

template <typename Fn>
auto Gateway::WithRetries(Fn&& fn) -> decltype(fn()) {
  auto backoff = options_.retry.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      ConcurrencyLimiter::Slot slot(concurrency_);
      if (rate_limiter_) rate_limiter_->Acquire();
      ++attempts_;
      return fn();
    } catch (const std::exception& e) {
      if (attempt >= options_.retry.max_retries || !IsRetriable(e)) throw;
    }
    options_.sleep(backoff);
    backoff = std::min(backoff * 2, options_.retry.max_backoff);
  }
}

std::string Gateway::Complete(const CompletionRequest& request) {
  if (request.prompt.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty prompt");
  }
  if (request.max_tokens < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens must be positive");
  }
  return TruncateAtStop(WithRetries([&] { return backend_->Complete(request); }),
                        request.stop_sequences);
}

TokenMasses Gateway::NextTokenDistribution(
    const std::string& prompt, const std::vector<std::string>& candidates) {
  try {
    return {WithRetries([&] { return backend_->NextTokenMasses(prompt, candidates); }),
            EstimationMode::kLogprob};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kCapabilityError) throw;
  }
  const auto samples = WithRetries(
      [&] { return backend_->SampleNextTokens(prompt, options_.sample_count); });
  TokenMasses result{{}, EstimationMode::kSampled};
  for (const auto& c : candidates) result.masses[c] = 0.0;
  for (const auto& s : samples) {
    const auto it = result.masses.find(s);
    if (it != result.masses.end()) it->second += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  for (auto& [c, mass] : result.masses) mass /= n;
  return result;
}

}  // namespace simdistill
