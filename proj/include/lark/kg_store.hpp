#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lark/ids.hpp"

namespace lark {

/// Immutable triplet store over abstract IDs.
///
/// Triplets are deduplicated and kept sorted by (head, relation, tail); a
/// second copy sorted by (tail, relation, head) serves backward lookups, and a
/// CSR-style table lists every triplet incident to an entity. All indexes are
/// built in the constructor and never change, so concurrent readers need no
/// synchronisation.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  explicit KnowledgeGraph(std::vector<Triplet> triplets);

  std::span<const Triplet> triplets() const { return triplets_; }
  std::span<const EntityId> entities() const { return entities_; }
  std::span<const RelationId> relations() const { return relations_; }
  std::size_t size() const { return triplets_.size(); }
  bool empty() const { return triplets_.empty(); }

  bool contains(EntityId e) const;
  bool contains(RelationId r) const;
  bool contains(const Triplet& t) const;

  // { t : (e, r, t) }, ascending. Throws UnknownId for absent IDs.
  std::vector<EntityId> successors(EntityId e, RelationId r) const;
  // { h : (h, r, t) }, ascending. Throws UnknownId for absent IDs.
  std::vector<EntityId> predecessors(EntityId t, RelationId r) const;
  // { t : exists r' != r with (e, r', t) }, ascending. Throws UnknownId.
  std::vector<EntityId> successors_excluding(EntityId e, RelationId r) const;

  // Outgoing triplets of e, sorted; empty for unknown entities.
  std::span<const Triplet> outgoing(EntityId e) const;
  // Triplets with head == e or tail == e, sorted by (head, relation, tail);
  // empty for unknown entities.
  std::span<const Triplet> incident(EntityId e) const;

  // Triplets incident to any frontier entity, optionally restricted to the
  // given relations. Result is sorted and duplicate-free.
  std::vector<Triplet> incident_triplets(std::span<const EntityId> frontier,
                                         const std::optional<std::vector<RelationId>>& relation_filter) const;

 private:
  void require(EntityId e) const;
  void require(RelationId r) const;
  std::optional<std::size_t> entity_rank(EntityId e) const;

  std::vector<Triplet> triplets_;  // sorted (h, r, t)
  std::vector<Triplet> by_tail_;   // sorted (t, r, h)
  std::vector<EntityId> entities_;
  std::vector<RelationId> relations_;
  std::vector<std::size_t> incident_offsets_;
  std::vector<Triplet> incident_;
};

/// Bidirectional label <-> abstract ID table built while loading.
class IdMap {
 public:
  EntityId intern_entity(std::string_view label);
  RelationId intern_relation(std::string_view label);

  std::optional<EntityId> find_entity(std::string_view label) const;
  std::optional<RelationId> find_relation(std::string_view label) const;

  const std::string& label(EntityId id) const { return entity_names_.at(id.value); }
  const std::string& label(RelationId id) const { return relation_names_.at(id.value); }

  std::size_t entity_count() const { return entity_names_.size(); }
  std::size_t relation_count() const { return relation_names_.size(); }

  // Two-column TSV, "id<TAB>label", in ID order.
  void write_entities(std::ostream& out) const;
  void write_relations(std::ostream& out) const;

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, std::uint32_t> entity_index_;
  std::unordered_map<std::string, std::uint32_t> relation_index_;
};

struct LoadedGraph {
  KnowledgeGraph graph;
  IdMap ids;
  // Deduplicated triplets in first-appearance order; writing these back out
  // and reloading reproduces the same IDs.
  std::vector<Triplet> file_order;
};

/// Reads `head<TAB>relation<TAB>tail` lines and interns labels to e<i>/r<j>
/// in first-appearance order. Blank lines are skipped; a trailing '\r' is
/// stripped. Throws MalformedLine or EmptyGraph.
LoadedGraph load_triplets(std::istream& in);

/// Reads a TSV whose fields are already abstract IDs, keeping them as-is.
/// Throws MalformedLine (also for fields that are not e<digits>/r<digits>)
/// or EmptyGraph.
KnowledgeGraph load_abstract_triplets(std::istream& in);

void write_abstract_triplets(std::ostream& out, std::span<const Triplet> triplets);

}  // namespace lark
