#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "lark/backend.hpp"
#include "lark/executor.hpp"
#include "test_support.hpp"

namespace lark {
namespace {

RemoteConfig config_for(const testing::MockChatServer& server) {
  RemoteConfig cfg;
  cfg.endpoint = server.url();
  cfg.model = "test-model";
  cfg.api_key = "secret";
  cfg.initial_backoff = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(5);
  return cfg;
}

TEST(RemoteBackend, SendsChatCompletionRequest) {
  testing::MockChatServer server([](const std::string& prompt) { return "echo: " + prompt; });
  auto cfg = config_for(server);
  cfg.max_tokens = 64;
  RemoteBackend backend(cfg);
  const auto reply = backend.complete("Which entities?");
  EXPECT_FALSE(reply.failed) << reply.error;
  EXPECT_EQ(reply.text, "echo: Which entities?");
  EXPECT_EQ(server.last_authorization(), "Bearer secret");
  const auto body = nlohmann::json::parse(server.last_body());
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 64);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "Which entities?");
}

TEST(RemoteBackend, RetriesTransientFailures) {
  std::atomic<int> calls{0};
  testing::MockChatServer server([&](const std::string&) -> std::optional<std::string> {
    if (++calls < 3) return std::nullopt;
    return "e1";
  });
  RemoteBackend backend(config_for(server));
  const auto reply = backend.complete("p");
  EXPECT_FALSE(reply.failed);
  EXPECT_EQ(reply.text, "e1");
  EXPECT_EQ(server.requests(), 3);
}

TEST(RemoteBackend, GivesUpAfterAttempts) {
  testing::MockChatServer server([](const std::string&) -> std::optional<std::string> { return std::nullopt; });
  RemoteBackend backend(config_for(server));
  const auto reply = backend.complete("p");
  EXPECT_TRUE(reply.failed);
  EXPECT_NE(reply.error.find("500"), std::string::npos) << reply.error;
  EXPECT_EQ(server.requests(), 3);
}

TEST(RemoteBackend, UnreachableEndpointFails) {
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  cfg.model = "m";
  cfg.attempts = 2;
  cfg.initial_backoff = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(2);
  RemoteBackend backend(cfg);
  EXPECT_TRUE(backend.complete("p").failed);
}

TEST(RemoteBackend, BatchRepliesStayAligned) {
  testing::MockChatServer server([](const std::string& prompt) { return "reply to " + prompt; });
  auto cfg = config_for(server);
  cfg.parallelism = 3;
  RemoteBackend backend(cfg);
  std::vector<BackendRequest> reqs;
  for (int i = 0; i < 10; ++i) reqs.push_back({"q", "prompt " + std::to_string(i), {}, FullTask{}});
  const auto replies = backend.answer(reqs);
  ASSERT_EQ(replies.size(), reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) EXPECT_EQ(replies[i].text, "reply to " + reqs[i].prompt);
}

TEST(RemoteBackend, ApiKeyFromEnvironment) {
  ::setenv("LARK_API_KEY", "from-env", 1);
  EXPECT_EQ(api_key_from_env(), "from-env");
  ::unsetenv("LARK_API_KEY");
  EXPECT_EQ(api_key_from_env(), "");
}

TEST(RemoteBackend, DrivesExecutorEndToEnd) {
  testing::MockChatServer server([](const std::string& prompt) { return testing::scripted_reply(prompt); });
  RemoteBackend remote(config_for(server));
  const auto kg = testing::g0();
  const auto q = testing::make_query(QueryType::kPi, {1, 3}, {1, 2, 3});
  const auto nb = retrieve_neighborhood(kg, q, {});
  RecordingBackend rec(remote);
  const auto live = execute_decomposed(q, decompose(q), nb, rec);
  ReplayBackend replay(rec.entries());
  const auto again = execute_decomposed(q, decompose(q), nb, replay);
  EXPECT_EQ(to_json(live).dump(), to_json(again).dump());
  EXPECT_EQ(server.requests(), 4);
}

}  // namespace
}  // namespace lark
