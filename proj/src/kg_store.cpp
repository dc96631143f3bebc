#include "lark/kg_store.hpp"

#include <algorithm>
#include <iterator>
#include <tuple>
#include <unordered_set>

#include "lark/error.hpp"

namespace lark {

namespace {

bool tail_order(const Triplet& a, const Triplet& b) {
  return std::tie(a.tail, a.relation, a.head) < std::tie(b.tail, b.relation, b.head);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
  throw Error(ErrorKind::kMalformedLine, "malformed line " + std::to_string(line_no) + ": " + why);
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      malformed(line_no, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    for (auto f : fields) {
      if (f.empty()) malformed(line_no, "empty field");
    }
    fn(line_no, fields[0], fields[1], fields[2]);
  }
}

}  // namespace

KnowledgeGraph::KnowledgeGraph(std::vector<Triplet> triplets) : triplets_(std::move(triplets)) {
  std::sort(triplets_.begin(), triplets_.end());
  triplets_.erase(std::unique(triplets_.begin(), triplets_.end()), triplets_.end());

  by_tail_ = triplets_;
  std::sort(by_tail_.begin(), by_tail_.end(), tail_order);

  for (const auto& t : triplets_) {
    entities_.push_back(t.head);
    entities_.push_back(t.tail);
    relations_.push_back(t.relation);
  }
  std::sort(entities_.begin(), entities_.end());
  entities_.erase(std::unique(entities_.begin(), entities_.end()), entities_.end());
  std::sort(relations_.begin(), relations_.end());
  relations_.erase(std::unique(relations_.begin(), relations_.end()), relations_.end());

  // Counting pass then fill; triplets_ is visited in sorted order so each
  // entity's bucket comes out sorted. Self-loops land in their bucket once.
  incident_offsets_.assign(entities_.size() + 1, 0);
  for (const auto& t : triplets_) {
    ++incident_offsets_[*entity_rank(t.head) + 1];
    if (t.tail != t.head) ++incident_offsets_[*entity_rank(t.tail) + 1];
  }
  for (std::size_t i = 1; i < incident_offsets_.size(); ++i) incident_offsets_[i] += incident_offsets_[i - 1];
  incident_.resize(incident_offsets_.back());
  std::vector<std::size_t> cursor(incident_offsets_.begin(), incident_offsets_.end() - 1);
  for (const auto& t : triplets_) {
    incident_[cursor[*entity_rank(t.head)]++] = t;
    if (t.tail != t.head) incident_[cursor[*entity_rank(t.tail)]++] = t;
  }
}

std::optional<std::size_t> KnowledgeGraph::entity_rank(EntityId e) const {
  auto it = std::lower_bound(entities_.begin(), entities_.end(), e);
  if (it == entities_.end() || *it != e) return std::nullopt;
  return static_cast<std::size_t>(it - entities_.begin());
}

bool KnowledgeGraph::contains(EntityId e) const { return std::binary_search(entities_.begin(), entities_.end(), e); }

bool KnowledgeGraph::contains(RelationId r) const {
  return std::binary_search(relations_.begin(), relations_.end(), r);
}

bool KnowledgeGraph::contains(const Triplet& t) const {
  return std::binary_search(triplets_.begin(), triplets_.end(), t);
}

void KnowledgeGraph::require(EntityId e) const {
  if (!contains(e)) throw Error(ErrorKind::kUnknownId, "unknown entity " + to_string(e));
}

void KnowledgeGraph::require(RelationId r) const {
  if (!contains(r)) throw Error(ErrorKind::kUnknownId, "unknown relation " + to_string(r));
}

std::vector<EntityId> KnowledgeGraph::successors(EntityId e, RelationId r) const {
  require(e);
  require(r);
  auto lo = std::lower_bound(triplets_.begin(), triplets_.end(), Triplet{e, r, EntityId{0}});
  std::vector<EntityId> out;
  for (auto it = lo; it != triplets_.end() && it->head == e && it->relation == r; ++it) out.push_back(it->tail);
  return out;
}

std::vector<EntityId> KnowledgeGraph::predecessors(EntityId t, RelationId r) const {
  require(t);
  require(r);
  auto lo = std::lower_bound(by_tail_.begin(), by_tail_.end(), Triplet{EntityId{0}, r, t}, tail_order);
  std::vector<EntityId> out;
  for (auto it = lo; it != by_tail_.end() && it->tail == t && it->relation == r; ++it) out.push_back(it->head);
  return out;
}

std::vector<EntityId> KnowledgeGraph::successors_excluding(EntityId e, RelationId r) const {
  require(e);
  require(r);
  std::vector<EntityId> out;
  for (const auto& t : outgoing(e)) {
    if (t.relation != r) out.push_back(t.tail);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::span<const Triplet> KnowledgeGraph::outgoing(EntityId e) const {
  auto lo = std::lower_bound(triplets_.begin(), triplets_.end(), Triplet{e, RelationId{0}, EntityId{0}});
  auto hi = lo;
  while (hi != triplets_.end() && hi->head == e) ++hi;
  return {lo, hi};
}

std::span<const Triplet> KnowledgeGraph::incident(EntityId e) const {
  auto rank = entity_rank(e);
  if (!rank) return {};
  return std::span<const Triplet>(incident_).subspan(incident_offsets_[*rank],
                                                     incident_offsets_[*rank + 1] - incident_offsets_[*rank]);
}

std::vector<Triplet> KnowledgeGraph::incident_triplets(
    std::span<const EntityId> frontier, const std::optional<std::vector<RelationId>>& relation_filter) const {
  std::vector<Triplet> out;
  for (EntityId e : frontier) {
    for (const auto& t : incident(e)) {
      if (relation_filter &&
          std::find(relation_filter->begin(), relation_filter->end(), t.relation) == relation_filter->end()) {
        continue;
      }
      out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EntityId IdMap::intern_entity(std::string_view label) {
  auto [it, inserted] = entity_index_.try_emplace(std::string(label), static_cast<std::uint32_t>(entity_names_.size()));
  if (inserted) entity_names_.emplace_back(label);
  return EntityId{it->second};
}

RelationId IdMap::intern_relation(std::string_view label) {
  auto [it, inserted] =
      relation_index_.try_emplace(std::string(label), static_cast<std::uint32_t>(relation_names_.size()));
  if (inserted) relation_names_.emplace_back(label);
  return RelationId{it->second};
}

std::optional<EntityId> IdMap::find_entity(std::string_view label) const {
  auto it = entity_index_.find(std::string(label));
  if (it == entity_index_.end()) return std::nullopt;
  return EntityId{it->second};
}

std::optional<RelationId> IdMap::find_relation(std::string_view label) const {
  auto it = relation_index_.find(std::string(label));
  if (it == relation_index_.end()) return std::nullopt;
  return RelationId{it->second};
}

void IdMap::write_entities(std::ostream& out) const {
  for (std::uint32_t i = 0; i < entity_names_.size(); ++i) out << to_string(EntityId{i}) << '\t' << entity_names_[i] << '\n';
}

void IdMap::write_relations(std::ostream& out) const {
  for (std::uint32_t i = 0; i < relation_names_.size(); ++i) {
    out << to_string(RelationId{i}) << '\t' << relation_names_[i] << '\n';
  }
}

LoadedGraph load_triplets(std::istream& in) {
  LoadedGraph loaded;
  std::vector<Triplet> raw;
  for_each_record(in, [&](std::size_t, std::string_view h, std::string_view r, std::string_view t) {
    // Interning order is head, relation, tail within a line.
    EntityId head = loaded.ids.intern_entity(h);
    RelationId rel = loaded.ids.intern_relation(r);
    EntityId tail = loaded.ids.intern_entity(t);
    raw.push_back({head, rel, tail});
  });
  if (raw.empty()) throw Error(ErrorKind::kEmptyGraph, "no triplets in input");

  std::unordered_set<Triplet> seen;
  for (const auto& t : raw) {
    if (seen.insert(t).second) loaded.file_order.push_back(t);
  }
  loaded.graph = KnowledgeGraph(std::move(raw));
  return loaded;
}

KnowledgeGraph load_abstract_triplets(std::istream& in) {
  std::vector<Triplet> raw;
  for_each_record(in, [&](std::size_t line_no, std::string_view h, std::string_view r, std::string_view t) {
    auto head = parse_entity_id(h);
    auto rel = parse_relation_id(r);
    auto tail = parse_entity_id(t);
    if (!head || !rel || !tail) malformed(line_no, "fields are not abstract e<i>/r<j> IDs");
    raw.push_back({*head, *rel, *tail});
  });
  if (raw.empty()) throw Error(ErrorKind::kEmptyGraph, "no triplets in input");
  return KnowledgeGraph(std::move(raw));
}

void write_abstract_triplets(std::ostream& out, std::span<const Triplet> triplets) {
  for (const auto& t : triplets) {
    out << to_string(t.head) << '\t' << to_string(t.relation) << '\t' << to_string(t.tail) << '\n';
  }
}

}  // namespace lark
