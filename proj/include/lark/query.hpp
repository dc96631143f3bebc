#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lark/ids.hpp"

namespace lark {

class KnowledgeGraph;

// The 14 fixed query shapes. Enumerator order is the report column order:
// projection, geometric and compound types first, negation types last.
enum class QueryType : std::uint8_t {
  k1p, k2p, k3p, k2i, k3i, kIp, kPi, k2u, kUp,
  k2in, k3in, kInp, kPin, kPni,
};

inline constexpr std::array<QueryType, 14> kAllQueryTypes = {
    QueryType::k1p, QueryType::k2p,  QueryType::k3p,  QueryType::k2i,  QueryType::k3i,
    QueryType::kIp, QueryType::kPi,  QueryType::k2u,  QueryType::kUp,  QueryType::k2in,
    QueryType::k3in, QueryType::kInp, QueryType::kPin, QueryType::kPni,
};

std::string_view to_string(QueryType type);
std::optional<QueryType> parse_query_type(std::string_view tag);

struct SlotCounts {
  std::size_t anchors;
  std::size_t relations;
  bool operator==(const SlotCounts&) const = default;
};

SlotCounts slot_counts(QueryType type);
bool has_negation(QueryType type);

// Longest chain of relation hops in the query shape; never more than 3.
int traversal_depth(QueryType type);

/// A query is a type tag plus ordered slots; the tag fixes the DAG.
///
/// Slot order follows the left-to-right reading of the query's natural
/// language template: for ip/pi/up/inp/pin/pni, anchors[0] starts the chain
/// or first branch and anchors[1] the other branch; relations[2] is the hop
/// applied after the first two atoms (ip, up, inp) or the branch relation
/// (pi, pin, pni).
struct QueryDag {
  std::string id;
  QueryType type = QueryType::k1p;
  std::vector<EntityId> anchors;
  std::vector<RelationId> relations;

  bool operator==(const QueryDag&) const = default;
};

/// Parses `{id, type, anchors, relations}`. Throws Parse for missing or
/// ill-typed fields and bad ID strings, UnknownType, or SlotMismatch.
QueryDag parse_query(const nlohmann::json& record);
nlohmann::json to_json(const QueryDag& q);

/// Throws UnknownId if any anchor or relation is absent from the graph.
void validate_against(const QueryDag& q, const KnowledgeGraph& kg);

/// Deduplicated, ascending anchor and relation sets.
std::pair<std::vector<EntityId>, std::vector<RelationId>> entities_and_relations(const QueryDag& q);

/// Newline-delimited query records; blank lines skipped.
std::vector<QueryDag> read_queries(std::istream& in);
void write_queries(std::ostream& out, const std::vector<QueryDag>& queries);

}  // namespace lark
