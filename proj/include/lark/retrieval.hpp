#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lark/ids.hpp"
#include "lark/kg_store.hpp"
#include "lark/query.hpp"
#include "lark/tokenizer.hpp"

namespace lark {

inline constexpr std::size_t kUnboundedTokens = std::numeric_limits<std::size_t>::max();

struct RetrievalConfig {
  std::size_t token_limit = 2048;
  int depth_limit = 3;
  bool relation_constrained_first_level = true;
  bool negation_relaxation = true;
  // Treat every intersection branch of 2in/3in as negated (matches the
  // planner's negate_every_branch wording).
  bool negate_every_branch = false;
};

/// Throws InvalidConfig unless token_limit >= 1 and depth_limit is in 1..3.
void validate(const RetrievalConfig& cfg);

struct Neighborhood {
  std::vector<Triplet> triplets;  // retrieval order
  std::vector<int> levels;        // levels[i] is the level of triplets[i], 1-based
  bool truncated = false;
  std::size_t token_count = 0;    // tokens of serialize_context(triplets)
};

std::string_view context_preamble();

/// Preamble, then " " and the ", "-joined "(h,r,t)" tuples, then ".".
/// An empty list renders as preamble + " .".
std::string serialize_context(std::span<const Triplet> triplets);

/// Depth-first k-level neighborhood of the query under a token budget.
///
/// Expansion starts from the anchors in ascending ID order. Visiting an
/// entity at level j walks its incident triplets in (head, relation, tail)
/// order; each triplet passing the level's relation filter is appended if
/// new, and while j < k the traversal descends into the triplet's other
/// endpoint at level j + 1. k = min(traversal_depth(type), depth_limit).
///
/// With relation_constrained_first_level the filter is the query's relation
/// set at every level; otherwise there is none. Under negation_relaxation the
/// negated anchors (level 1) and, for pni, every level-2 entity accept all
/// relations, since their question asks for "any relation other than" one.
///
/// The walk stops, and truncated is set, the first time the next triplet
/// would push the serialized context past token_limit. A limit below the
/// empty context yields no triplets, truncated, and the empty context count.
/// Throws UnknownId when the query references IDs absent from the graph.
Neighborhood retrieve_neighborhood(const KnowledgeGraph& kg, const QueryDag& q, const RetrievalConfig& cfg,
                                   const Tokenizer& tokenizer = default_tokenizer());

}  // namespace lark
