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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <thread>
#include <vector>

#include "gtest/gtest.h"
#include "simdistill/digest.h"
#include "simdistill/error.h"
#include "test_util.h"

namespace simdistill {

namespace {

using ::simdistill::testing::CodeOf;
using ::simdistill::testing::Spit;
using ::simdistill::testing::TempDir;
using namespace std::chrono_literals;

GatewayOptions NoSleep(int max_retries = 2) {
  GatewayOptions o;
  o.retry.max_retries = max_retries;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

TEST(ScriptedBackend, FixturesKeyedByPromptDigest) {
  TempDir dir;
  const std::string prompt = "Rewrite: The sky is clear.";
  nlohmann::json a = {{"prompt_sha256", Sha256Hex(prompt)},
                      {"response", "C) Sample Output\nThe heavens are cloudless."}};
  nlohmann::json b = {{"prompt_sha256", Sha256Hex(prompt)},
                      {"response", {{"logprobs", {{"4", std::log(0.5)}, {"3", -1e9}}}}}};
  Spit(dir / "f.jsonl", a.dump() + "\n\n" + b.dump() + "\n");
  auto backend = std::shared_ptr<Backend>(ScriptedBackend::FromFile(dir / "f.jsonl"));
  Gateway gateway(backend, NoSleep());
  CompletionRequest request;
  request.prompt = prompt;
  const std::string first = gateway.Complete(request);
  EXPECT_EQ(first, "C) Sample Output\nThe heavens are cloudless.");
  EXPECT_EQ(gateway.Complete(request), first);
  const auto masses = gateway.NextTokenDistribution(prompt, {"3", "4", "0"});
  EXPECT_EQ(masses.mode, EstimationMode::kLogprob);
  EXPECT_NEAR(masses.masses.at("4"), 0.5, 1e-15);
  EXPECT_EQ(masses.masses.at("0"), 0.0);
  EXPECT_EQ(masses.masses.at("3"), 0.0);  // exp(-1e9) underflows to zero
}

TEST(ScriptedBackend, UnknownPromptIsNotRetried) {
  auto backend = std::make_shared<ScriptedBackend>();
  Gateway gateway(backend, NoSleep(5));
  CompletionRequest request;
  request.prompt = "never seen";
  try {
    gateway.Complete(request);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendError);
    EXPECT_NE(std::string(e.what()).find("unknown-fixture"), std::string::npos);
  }
  EXPECT_EQ(gateway.attempts(), 1);
}

TEST(ScriptedBackend, BadFixtureFile) {
  TempDir dir;
  Spit(dir / "bad.jsonl", "{\"prompt_sha256\": \"ab\", \"response\": 3}\n");
  EXPECT_EQ(CodeOf([&] { ScriptedBackend::FromFile(dir / "bad.jsonl"); }),
            ErrorCode::kConfigError);
  EXPECT_EQ(CodeOf([&] { ScriptedBackend::FromFile(dir / "none.jsonl"); }),
            ErrorCode::kConfigError);
}

TEST(Gateway, StopSequenceTruncation) {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->AddCompletion("p", "C) Sample Output\nx\n\nD) more");
  Gateway gateway(backend, NoSleep());
  CompletionRequest request;
  request.prompt = "p";
  EXPECT_EQ(gateway.Complete(request), "C) Sample Output\nx");
  request.prompt = "";
  EXPECT_EQ(CodeOf([&] { gateway.Complete(request); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(TruncateAtStop("abcabc", {"c", "b"}), "a");
  EXPECT_EQ(TruncateAtStop("abc", {}), "abc");
}

TEST(Gateway, SamplingFallback) {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->AddSamples("p", {"4", "4", "3", "x"});
  GatewayOptions options = NoSleep();
  options.sample_count = 8;
  Gateway gateway(backend, options);
  const auto masses = gateway.NextTokenDistribution("p", {"3", "4"});
  EXPECT_EQ(masses.mode, EstimationMode::kSampled);
  EXPECT_EQ(masses.masses.at("4"), 0.5);
  EXPECT_EQ(masses.masses.at("3"), 0.25);
  // No samples either: the capability error surfaces.
  backend->AddCompletion("q", "text");
  EXPECT_EQ(CodeOf([&] { gateway.NextTokenDistribution("q", {"1"}); }),
            ErrorCode::kCapabilityError);
}

TEST(Backend, ValidateCandidates) {
  ScriptedBackend backend;
  EXPECT_NO_THROW(backend.ValidateCandidates({"0", " 1", "\t4", "東"}));
  EXPECT_EQ(CodeOf([&] { backend.ValidateCandidates({"10"}); }), ErrorCode::kConfigError);
  EXPECT_EQ(CodeOf([&] { backend.ValidateCandidates({" "}); }), ErrorCode::kConfigError);
}

TEST(IsRetriable, Classes) {
  EXPECT_TRUE(IsRetriable(Error(ErrorCode::kTimeout, "t")));
  EXPECT_TRUE(IsRetriable(Error(ErrorCode::kBackendUnreachable, "u")));
  EXPECT_TRUE(IsRetriable(Error(ErrorCode::kBackendError, "s", 429)));
  EXPECT_TRUE(IsRetriable(Error(ErrorCode::kBackendError, "s", 503)));
  EXPECT_FALSE(IsRetriable(Error(ErrorCode::kBackendError, "s", 400)));
  EXPECT_FALSE(IsRetriable(Error(ErrorCode::kCapabilityError, "c")));
  EXPECT_FALSE(IsRetriable(std::runtime_error("x")));
}

// Fails with a configurable error for the first `failures` calls.
class FlakyBackend : public Backend {
 public:
  FlakyBackend(int failures, Error error) : failures_(failures), error_(std::move(error)) {}
  std::string Complete(const CompletionRequest&) override {
    if (calls_++ < failures_) throw error_;
    return "ok";
  }
  std::map<std::string, double> NextTokenMasses(const std::string&,
                                                const std::vector<std::string>&) override {
    throw Error(ErrorCode::kCapabilityError, "none");
  }
  int calls() const { return calls_; }

 private:
  int failures_;
  Error error_;
  std::atomic<int> calls_{0};
};

TEST(Gateway, RetriesWithCappedBackoff) {
  auto backend = std::make_shared<FlakyBackend>(3, Error(ErrorCode::kTimeout, "slow"));
  GatewayOptions options = NoSleep(3);
  options.retry.initial_backoff = 100ms;
  options.retry.max_backoff = 250ms;
  std::vector<std::chrono::milliseconds> sleeps;
  options.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  Gateway gateway(backend, options);
  CompletionRequest request;
  request.prompt = "p";
  EXPECT_EQ(gateway.Complete(request), "ok");
  EXPECT_EQ(gateway.attempts(), 4);
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{100ms, 200ms, 250ms}));
}

TEST(Gateway, GivesUpAfterMaxRetries) {
  auto backend = std::make_shared<FlakyBackend>(100, Error(ErrorCode::kBackendError, "", 500));
  Gateway gateway(backend, NoSleep(2));
  CompletionRequest request;
  request.prompt = "p";
  EXPECT_EQ(CodeOf([&] { gateway.Complete(request); }), ErrorCode::kBackendError);
  EXPECT_EQ(backend->calls(), 3);
}

// Counts concurrent callers and remembers the peak.
class InstrumentedBackend : public Backend {
 public:
  std::string Complete(const CompletionRequest&) override {
    const int now = ++in_flight_;
    int peak = peak_.load();
    while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
    }
    std::this_thread::sleep_for(2ms);
    --in_flight_;
    return "done";
  }
  std::map<std::string, double> NextTokenMasses(const std::string&,
                                                const std::vector<std::string>&) override {
    return {};
  }
  int peak() const { return peak_.load(); }

 private:
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

TEST(Gateway, ConcurrencyBound) {
  auto backend = std::make_shared<InstrumentedBackend>();
  GatewayOptions options = NoSleep();
  options.max_concurrency = 3;
  Gateway gateway(backend, options);
  std::vector<std::thread> threads;
  for (int t = 0; t < 12; ++t) {
    threads.emplace_back([&] {
      CompletionRequest request;
      request.prompt = "p";
      for (int i = 0; i < 5; ++i) gateway.Complete(request);
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_LE(backend->peak(), 3);
  EXPECT_GE(backend->peak(), 1);
  EXPECT_EQ(gateway.attempts(), 60);
}

TEST(RateLimiter, SpacesRequestsOnAFakeClock) {
  RateLimiter::Clock::time_point now{};
  std::vector<RateLimiter::Clock::duration> waits;
  RateLimiter limiter(
      60.0, 1.0, [&] { return now; },
      [&](RateLimiter::Clock::duration d) {
        waits.push_back(d);
        now += d;
      });
  for (int i = 0; i < 4; ++i) limiter.Acquire();
  // One per second: the first is free, the rest wait a second each.
  ASSERT_EQ(waits.size(), 3u);
  for (const auto& w : waits) {
    EXPECT_NEAR(std::chrono::duration<double>(w).count(), 1.0, 1e-6);
  }
  now += std::chrono::seconds(10);
  waits.clear();
  limiter.Acquire();
  EXPECT_TRUE(waits.empty());
  EXPECT_EQ(CodeOf([] { RateLimiter(0.0); }), ErrorCode::kConfigError);
}

// In-process HTTP server standing in for a model API.
class FakeServer {
 public:
  FakeServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

BackendConfig ConfigFor(const FakeServer& server) {
  BackendConfig config;
  config.endpoint = server.url() + "/api/";
  config.timeout = 2000ms;
  return config;
}

TEST(RemoteBackend, FailOnceThenSucceed) {
  FakeServer fake;
  std::atomic<int> hits{0};
  nlohmann::json last_body;
  fake.server().Post("/api/v1/complete", [&](const httplib::Request& req,
                                             httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 503;
      return;
    }
    last_body = nlohmann::json::parse(req.body);
    res.set_content(R"({"text": "C) Sample Output\nHi.\n\nD) rest"})", "application/json");
  });
  auto backend = std::make_shared<RemoteBackend>(ConfigFor(fake));
  Gateway gateway(backend, NoSleep(2));
  CompletionRequest request;
  request.prompt = "prompt";
  EXPECT_EQ(gateway.Complete(request), "C) Sample Output\nHi.");
  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(gateway.attempts(), 2);
  EXPECT_EQ(last_body["prompt"], "prompt");
  EXPECT_EQ(last_body["max_tokens"], 512);
}

TEST(RemoteBackend, AttemptsNeverExceedRetriesPlusOne) {
  FakeServer fake;
  std::atomic<int> hits{0};
  fake.server().Post("/api/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  auto backend = std::make_shared<RemoteBackend>(ConfigFor(fake));
  Gateway gateway(backend, NoSleep(3));
  CompletionRequest request;
  request.prompt = "p";
  try {
    gateway.Complete(request);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendError);
    EXPECT_EQ(e.detail(), 500);
  }
  EXPECT_EQ(hits.load(), 4);
}

TEST(RemoteBackend, ClientErrorsAreNotRetried) {
  FakeServer fake;
  std::atomic<int> hits{0};
  fake.server().Post("/api/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
  });
  auto backend = std::make_shared<RemoteBackend>(ConfigFor(fake));
  Gateway gateway(backend, NoSleep(3));
  CompletionRequest request;
  request.prompt = "p";
  EXPECT_EQ(CodeOf([&] { gateway.Complete(request); }), ErrorCode::kBackendError);
  EXPECT_EQ(hits.load(), 1);
}

TEST(RemoteBackend, Timeout) {
  FakeServer fake;
  fake.server().Post("/api/v1/complete", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(600ms);
    res.set_content(R"({"text": "late"})", "application/json");
  });
  BackendConfig config = ConfigFor(fake);
  config.timeout = 100ms;
  RemoteBackend backend(config);
  CompletionRequest request;
  request.prompt = "p";
  EXPECT_EQ(CodeOf([&] { backend.Complete(request); }), ErrorCode::kTimeout);
}

TEST(RemoteBackend, Unreachable) {
  BackendConfig config;
  config.endpoint = "http://127.0.0.1:1";  // nothing listens on tcpmux
  config.timeout = 500ms;
  RemoteBackend backend(config);
  CompletionRequest request;
  request.prompt = "p";
  EXPECT_EQ(CodeOf([&] { backend.Complete(request); }), ErrorCode::kBackendUnreachable);
}

TEST(RemoteBackend, LogprobsAndAdapter) {
  FakeServer fake;
  nlohmann::json seen;
  fake.server().Post("/api/score", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    res.set_content(R"({"result": {"lp": {"4": -0.1, "3": -2.5}}})", "application/json");
  });
  BackendConfig config = ConfigFor(fake);
  config.adapter = ApiAdapter::FromJson({{"logprobs_path", "/score"},
                                         {"candidates_field", "options"},
                                         {"logprobs_pointer", "/result/lp"},
                                         {"extra_body", {{"model", "m1"}}}});
  RemoteBackend backend(config);
  const auto masses = backend.NextTokenMasses("p", {"3", "4", "0"});
  EXPECT_NEAR(masses.at("4"), std::exp(-0.1), 1e-15);
  EXPECT_NEAR(masses.at("3"), std::exp(-2.5), 1e-15);
  EXPECT_EQ(masses.at("0"), 0.0);
  EXPECT_EQ(seen["model"], "m1");
  EXPECT_EQ(seen["options"], (nlohmann::json{"3", "4", "0"}));
}

TEST(RemoteBackend, NoLogprobsFallsBackToSampling) {
  FakeServer fake;
  fake.server().Post("/api/sample", [](const httplib::Request& req, httplib::Response& res) {
    const int n = nlohmann::json::parse(req.body)["n"].get<int>();
    nlohmann::json samples = nlohmann::json::array();
    for (int i = 0; i < n; ++i) samples.push_back(i % 4 == 0 ? "2" : "3");
    res.set_content(nlohmann::json{{"samples", samples}}.dump(), "application/json");
  });
  BackendConfig config = ConfigFor(fake);
  config.adapter = ApiAdapter::FromJson({{"supports_logprobs", false}, {"sample_path", "/sample"}});
  GatewayOptions options = NoSleep();
  options.sample_count = 8;
  Gateway gateway(std::make_shared<RemoteBackend>(config), options);
  const auto masses = gateway.NextTokenDistribution("p", {"2", "3"});
  EXPECT_EQ(masses.mode, EstimationMode::kSampled);
  EXPECT_EQ(masses.masses.at("2"), 0.25);
  EXPECT_EQ(masses.masses.at("3"), 0.75);
}

TEST(BackendConfig, Validation) {
  EXPECT_EQ(CodeOf([] { BackendConfig::FromJson({{"max_concurrency", 0}}); }),
            ErrorCode::kConfigError);
  EXPECT_EQ(CodeOf([] { BackendConfig::FromJson({{"timeout_ms", "soon"}}); }),
            ErrorCode::kConfigError);
  BackendConfig config;
  config.endpoint = "localhost:80";
  EXPECT_EQ(CodeOf([&] { RemoteBackend{config}; }), ErrorCode::kConfigError);
  config.endpoint = "http://localhost:80";
  config.auth_token_env = "SIMDISTILL_SURELY_UNSET_VARIABLE";
  EXPECT_EQ(CodeOf([&] { RemoteBackend{config}; }), ErrorCode::kConfigError);
}

}  // namespace

}  // namespace simdistill
