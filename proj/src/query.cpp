#include "lark/query.hpp"

#include <algorithm>

#include "lark/error.hpp"
#include "lark/kg_store.hpp"

namespace lark {

namespace {

struct TypeInfo {
  QueryType type;
  std::string_view tag;
  SlotCounts slots;
  int depth;
  bool negation;
};

constexpr std::array<TypeInfo, 14> kTypeTable = {{
    {QueryType::k1p, "1p", {1, 1}, 1, false},
    {QueryType::k2p, "2p", {1, 2}, 2, false},
    {QueryType::k3p, "3p", {1, 3}, 3, false},
    {QueryType::k2i, "2i", {2, 2}, 1, false},
    {QueryType::k3i, "3i", {3, 3}, 1, false},
    {QueryType::kIp, "ip", {2, 3}, 2, false},
    {QueryType::kPi, "pi", {2, 3}, 2, false},
    {QueryType::k2u, "2u", {2, 2}, 1, false},
    {QueryType::kUp, "up", {2, 3}, 2, false},
    {QueryType::k2in, "2in", {2, 2}, 1, true},
    {QueryType::k3in, "3in", {3, 3}, 1, true},
    {QueryType::kInp, "inp", {2, 3}, 2, true},
    {QueryType::kPin, "pin", {2, 3}, 2, true},
    {QueryType::kPni, "pni", {2, 3}, 2, true},
}};

const TypeInfo& info(QueryType type) { return kTypeTable[static_cast<std::size_t>(type)]; }

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorKind::kParse, what); }

std::vector<std::string> string_list(const nlohmann::json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_array()) parse_error(std::string("query record needs a list field '") + field + "'");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) parse_error(std::string("non-string entry in '") + field + "'");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::string_view to_string(QueryType type) { return info(type).tag; }

std::optional<QueryType> parse_query_type(std::string_view tag) {
  for (const auto& row : kTypeTable) {
    if (row.tag == tag) return row.type;
  }
  return std::nullopt;
}

SlotCounts slot_counts(QueryType type) { return info(type).slots; }
bool has_negation(QueryType type) { return info(type).negation; }
int traversal_depth(QueryType type) { return info(type).depth; }

QueryDag parse_query(const nlohmann::json& record) {
  if (!record.is_object()) parse_error("query record is not an object");
  QueryDag q;

  auto id = record.find("id");
  if (id == record.end() || !id->is_string()) parse_error("query record needs a string 'id'");
  q.id = id->get<std::string>();

  auto type = record.find("type");
  if (type == record.end() || !type->is_string()) parse_error("query " + q.id + " needs a string 'type'");
  auto parsed_type = parse_query_type(type->get<std::string>());
  if (!parsed_type) throw Error(ErrorKind::kUnknownType, "query " + q.id + ": unknown type '" + type->get<std::string>() + "'");
  q.type = *parsed_type;

  for (const auto& a : string_list(record, "anchors")) {
    auto e = parse_entity_id(a);
    if (!e) parse_error("query " + q.id + ": bad entity id '" + a + "'");
    q.anchors.push_back(*e);
  }
  for (const auto& r : string_list(record, "relations")) {
    auto rel = parse_relation_id(r);
    if (!rel) parse_error("query " + q.id + ": bad relation id '" + r + "'");
    q.relations.push_back(*rel);
  }

  const SlotCounts want = slot_counts(q.type);
  if (q.anchors.size() != want.anchors) {
    throw Error(ErrorKind::kSlotMismatch, "query " + q.id + " (" + std::string(to_string(q.type)) + "): expected " +
                                              std::to_string(want.anchors) + " anchors, got " +
                                              std::to_string(q.anchors.size()));
  }
  if (q.relations.size() != want.relations) {
    throw Error(ErrorKind::kSlotMismatch, "query " + q.id + " (" + std::string(to_string(q.type)) + "): expected " +
                                              std::to_string(want.relations) + " relations, got " +
                                              std::to_string(q.relations.size()));
  }
  return q;
}

nlohmann::json to_json(const QueryDag& q) {
  nlohmann::json anchors = nlohmann::json::array();
  for (auto e : q.anchors) anchors.push_back(to_string(e));
  nlohmann::json relations = nlohmann::json::array();
  for (auto r : q.relations) relations.push_back(to_string(r));
  return {{"id", q.id}, {"type", to_string(q.type)}, {"anchors", anchors}, {"relations", relations}};
}

void validate_against(const QueryDag& q, const KnowledgeGraph& kg) {
  for (auto e : q.anchors) {
    if (!kg.contains(e)) throw Error(ErrorKind::kUnknownId, "query " + q.id + ": unknown entity " + to_string(e));
  }
  for (auto r : q.relations) {
    if (!kg.contains(r)) throw Error(ErrorKind::kUnknownId, "query " + q.id + ": unknown relation " + to_string(r));
  }
}

std::pair<std::vector<EntityId>, std::vector<RelationId>> entities_and_relations(const QueryDag& q) {
  std::vector<EntityId> es = q.anchors;
  std::vector<RelationId> rs = q.relations;
  std::sort(es.begin(), es.end());
  es.erase(std::unique(es.begin(), es.end()), es.end());
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  return {std::move(es), std::move(rs)};
}

std::vector<QueryDag> read_queries(std::istream& in) {
  std::vector<QueryDag> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      parse_error("query file line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(parse_query(record));
  }
  return out;
}

void write_queries(std::ostream& out, const std::vector<QueryDag>& queries) {
  for (const auto& q : queries) out << to_json(q).dump() << '\n';
}

}  // namespace lark
