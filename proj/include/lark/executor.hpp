#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lark/backend.hpp"
#include "lark/planner.hpp"
#include "lark/query.hpp"
#include "lark/retrieval.hpp"
#include "lark/tokenizer.hpp"

namespace lark {

enum class ExecutionMode { kFull, kDecomposed };

std::string_view to_string(ExecutionMode mode);

struct ExecutorConfig {
  PlannerOptions planner;
  // Requests per answer() call; 0 means the backend's own limit.
  std::size_t batch_limit = 0;
};

struct RunRecord {
  std::string query_id;
  QueryType type = QueryType::k1p;
  ExecutionMode mode = ExecutionMode::kDecomposed;
  std::vector<int> steps;  // step index of each prompt; 0 in full mode
  std::vector<std::string> prompts;
  std::vector<std::string> raw_responses;
  std::vector<std::vector<EntityId>> parsed;
  std::vector<EntityId> final_answers;  // emission order, the ranking used by metrics
  bool truncated = false;
  bool degraded = false;
  std::vector<std::string> failures;
  std::size_t context_tokens = 0;
  std::vector<double> phase_ms;
};

/// Runs the decomposed plans of many queries phase by phase: every step of
/// phase p, across all queries, is answered and cached before any phase
/// p + 1 prompt is rendered. A failed or unreadable reply leaves the step's
/// slot empty and marks the record degraded; the empty set propagates.
std::vector<RunRecord> execute_decomposed_batch(std::span<const QueryDag> queries,
                                                std::span<const Neighborhood> neighborhoods, Backend& backend,
                                                const ExecutorConfig& cfg,
                                                const Tokenizer& tokenizer = default_tokenizer());

/// One full prompt per query.
std::vector<RunRecord> execute_full_batch(std::span<const QueryDag> queries,
                                          std::span<const Neighborhood> neighborhoods, Backend& backend,
                                          const ExecutorConfig& cfg, const Tokenizer& tokenizer = default_tokenizer());

/// Single-query form of the phase loop for an explicit plan.
RunRecord execute_decomposed(const QueryDag& q, const DecompositionPlan& plan, const Neighborhood& nb,
                             Backend& backend, const ExecutorConfig& cfg = {},
                             const Tokenizer& tokenizer = default_tokenizer());

RunRecord execute_full(const QueryDag& q, const Neighborhood& nb, Backend& backend, const ExecutorConfig& cfg = {},
                       const Tokenizer& tokenizer = default_tokenizer());

nlohmann::json to_json(const RunRecord& record, bool include_timing = false);
RunRecord run_record_from_json(const nlohmann::json& j);

}  // namespace lark
