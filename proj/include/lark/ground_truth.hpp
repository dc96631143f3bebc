#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lark/ids.hpp"
#include "lark/kg_store.hpp"
#include "lark/query.hpp"

namespace lark {

// How a negated atom is read.
//   kTemplateOtherRelation: entities reached from the anchor by any relation
//                           other than the named one (what the prompts ask).
//   kFolComplement:         every graph entity not reached by the relation.
enum class NegationSemantics { kTemplateOtherRelation, kFolComplement };

std::string_view to_string(NegationSemantics s);
std::optional<NegationSemantics> parse_negation_semantics(std::string_view text);

struct GoldAnswers {
  std::string query_id;
  std::vector<EntityId> answers;  // ascending
  NegationSemantics semantics = NegationSemantics::kTemplateOtherRelation;
};

/// Exact evaluation of the query over the whole graph with set algebra.
/// Throws UnknownId for IDs absent from the graph.
GoldAnswers ground_truth(const KnowledgeGraph& kg, const QueryDag& q,
                         NegationSemantics semantics = NegationSemantics::kTemplateOtherRelation);

/// Gold file: a header record `{"semantics": ...}` followed by one
/// `{"id", "answers"}` record per query.
void write_gold(std::ostream& out, std::span<const GoldAnswers> gold, NegationSemantics semantics);

struct GoldFile {
  std::optional<NegationSemantics> semantics;
  std::map<std::string, std::vector<EntityId>> answers;
};

GoldFile read_gold(std::istream& in);

}  // namespace lark
