#include <algorithm>
#include <cstdlib>
#include <future>
#include <thread>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "lark/backend.hpp"
#include "lark/error.hpp"

namespace lark {

std::string api_key_from_env() {
  const char* key = std::getenv("LARK_API_KEY");
  return key ? std::string(key) : std::string();
}

RemoteBackend::RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw Error(ErrorKind::kInvalidConfig, "remote backend needs an endpoint");
  if (cfg_.model.empty()) throw Error(ErrorKind::kInvalidConfig, "remote backend needs a model name");
  if (cfg_.attempts < 1) cfg_.attempts = 1;
  if (cfg_.parallelism < 1) cfg_.parallelism = 1;

  const auto scheme_end = cfg_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kInvalidConfig, "remote endpoint must be an http(s) URL: " + cfg_.endpoint);
  }
  const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = cfg_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
}

BackendReply RemoteBackend::complete(const std::string& prompt) const {
  const nlohmann::json body = {
      {"model", cfg_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg_.temperature},
      {"max_tokens", cfg_.max_tokens},
  };
  const std::string payload = body.dump();

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(cfg_.timeout);
  client.set_read_timeout(cfg_.timeout);
  client.set_write_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  std::string last_error;
  auto backoff = cfg_.initial_backoff;
  for (int attempt = 1; attempt <= cfg_.attempts; ++attempt) {
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      try {
        const auto reply = nlohmann::json::parse(res->body);
        const auto& choice = reply.at("choices").at(0);
        if (choice.contains("message")) return {choice.at("message").at("content").get<std::string>(), false, {}};
        return {choice.at("text").get<std::string>(), false, {}};
      } catch (const nlohmann::json::exception& e) {
        // A malformed body is not retried; the server answered.
        return {{}, true, std::string("unreadable response body: ") + e.what()};
      }
    }
    if (attempt < cfg_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  return {{}, true, last_error + " after " + std::to_string(cfg_.attempts) + " attempts"};
}

std::vector<BackendReply> RemoteBackend::answer(std::span<const BackendRequest> requests) {
  std::vector<BackendReply> replies(requests.size());
  const std::size_t width = static_cast<std::size_t>(cfg_.parallelism);
  for (std::size_t start = 0; start < requests.size(); start += width) {
    const std::size_t end = std::min(requests.size(), start + width);
    std::vector<std::future<BackendReply>> inflight;
    for (std::size_t i = start; i < end; ++i) {
      inflight.push_back(std::async(std::launch::async, [this, &requests, i] { return complete(requests[i].prompt); }));
    }
    for (std::size_t i = start; i < end; ++i) replies[i] = inflight[i - start].get();
  }
  return replies;
}

}  // namespace lark
