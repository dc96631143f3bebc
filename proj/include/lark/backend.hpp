#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lark/ids.hpp"
#include "lark/planner.hpp"
#include "lark/query.hpp"

namespace lark {

// Exact inputs behind a step prompt: the step plus the resolved entity list
// of each consumed placeholder, in step.inputs order.
struct StepTask {
  ElementaryStep step;
  std::vector<std::vector<EntityId>> inputs;
};

// Exact input behind a full prompt.
struct FullTask {
  QueryDag query;
};

struct BackendRequest {
  std::string query_id;
  std::string prompt;
  // Retrieved context the prompt was rendered from; exact backends answer
  // over these triplets only.
  std::span<const Triplet> context;
  std::variant<StepTask, FullTask> task;
};

struct BackendReply {
  std::string text;
  bool failed = false;
  std::string error;  // cause, when failed
};

/// Answer provider. answer() returns exactly one reply per request, in
/// request order. Items that could not be answered come back with
/// failed = true; errors that invalidate the whole run are thrown.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string_view kind() const = 0;
  // Largest number of requests accepted by one answer() call.
  virtual std::size_t max_batch() const = 0;
  virtual std::vector<BackendReply> answer(std::span<const BackendRequest> requests) = 0;
};

/// Exact set-algebra over the request's context triplets.
std::vector<EntityId> symbolic_answer(const ElementaryStep& step, std::span<const std::vector<EntityId>> inputs,
                                      std::span<const Triplet> context);

/// Exact answer of a whole query over context triplets, evaluated through
/// its decomposition.
std::vector<EntityId> symbolic_full_answer(const QueryDag& q, std::span<const Triplet> context);

/// IDs of the form e<digits> in order of first appearance, deduplicated.
std::vector<EntityId> parse_answer(std::string_view text);

/// True when the reply names no entity and does not say "none" either, i.e.
/// the answer could not be read.
bool is_unreadable_answer(std::string_view text);

class SymbolicBackend final : public Backend {
 public:
  explicit SymbolicBackend(int threads = 1, std::size_t batch = 4096) : threads_(threads), batch_(batch) {}
  std::string_view kind() const override { return "symbolic"; }
  std::size_t max_batch() const override { return batch_; }
  std::vector<BackendReply> answer(std::span<const BackendRequest> requests) override;

 private:
  int threads_;
  std::size_t batch_;
};

// 16 lowercase hex digits of the 64-bit FNV-1a hash.
std::string content_hash(std::string_view text);

struct TraceEntry {
  std::string hash;
  std::string prompt;
  std::string response;
};

/// Newline-delimited `{hash, prompt, response}` records.
std::vector<TraceEntry> read_trace(std::istream& in);
void write_trace(std::ostream& out, std::span<const TraceEntry> entries);

/// Answers from a recorded trace keyed by prompt hash. A prompt without an
/// entry throws MissingTrace naming the hash.
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(std::span<const TraceEntry> entries);
  std::string_view kind() const override { return "replay"; }
  std::size_t max_batch() const override { return 1u << 20; }
  std::vector<BackendReply> answer(std::span<const BackendRequest> requests) override;

 private:
  std::map<std::string, TraceEntry> entries_;
};

/// Forwards to another backend and keeps every successful exchange.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}
  std::string_view kind() const override { return inner_.kind(); }
  std::size_t max_batch() const override { return inner_.max_batch(); }
  std::vector<BackendReply> answer(std::span<const BackendRequest> requests) override;

  // Entries sorted by hash.
  std::vector<TraceEntry> entries() const;

 private:
  Backend& inner_;
  mutable std::mutex mutex_;
  std::map<std::string, TraceEntry> entries_;
};

struct RemoteConfig {
  std::string endpoint;  // full URL of the chat-completions route
  std::string model;
  double temperature = 0.0;
  int max_tokens = 256;
  std::string api_key;  // sent as a bearer token when non-empty
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};
  int parallelism = 4;
};

/// API key from LARK_API_KEY, empty when unset.
std::string api_key_from_env();

/// Chat-completions client. Each request becomes one POST carrying
/// {model, messages:[{role:"user", content}], temperature, max_tokens};
/// the reply text is choices[0].message.content. Transport errors and
/// non-2xx statuses are retried with exponential backoff up to `attempts`.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig cfg);
  std::string_view kind() const override { return "remote"; }
  std::size_t max_batch() const override { return static_cast<std::size_t>(cfg_.parallelism) * 8; }
  std::vector<BackendReply> answer(std::span<const BackendRequest> requests) override;

  // One prompt, with retries.
  BackendReply complete(const std::string& prompt) const;

 private:
  RemoteConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace lark
