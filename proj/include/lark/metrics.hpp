#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lark/executor.hpp"
#include "lark/ids.hpp"
#include "lark/query.hpp"

namespace lark {

// `gold` must be sorted ascending.
double reciprocal_rank(std::span<const EntityId> predicted, std::span<const EntityId> gold);
double hits_at_k(std::span<const EntityId> predicted, std::span<const EntityId> gold, std::size_t k);

struct TypeMetrics {
  double mrr = 0;
  double hits1 = 0;
  double hits3 = 0;
  double hits10 = 0;
  std::size_t n_queries = 0;
};

struct TokenStats {
  double mean = 0;
  double median = 0;
  std::size_t min = 0;
  std::size_t max = 0;
  double coverage_percent = 0;  // share of counts strictly below the limit
  std::size_t n = 0;
};

/// Throws EmptyBucket for an empty sample.
TokenStats token_stats(std::span<const std::size_t> counts, std::size_t limit);

// How a record's answer list becomes a ranking.
enum class RankOrder { kEmission, kSortedId };

struct MetricsReport {
  std::map<QueryType, TypeMetrics> per_type;
  TypeMetrics aggregate;  // mean over all queries
  std::size_t degraded = 0;
};

/// Scores each record against its gold set. Throws MissingGold naming up
/// to five record ids that have no gold entry.
MetricsReport evaluate(std::span<const RunRecord> records, const std::map<std::string, std::vector<EntityId>>& gold,
                       RankOrder order = RankOrder::kEmission);

/// Two blocks of per-type columns (projection/geometric/compound, then
/// negation) with MRR and HITS@1/3/10 rows, values in percent.
std::string format_report(const MetricsReport& report);
nlohmann::json to_json(const MetricsReport& report);

std::string format_token_report(const std::map<QueryType, TokenStats>& stats);
nlohmann::json to_json(const std::map<QueryType, TokenStats>& stats);

}  // namespace lark
