#include "lark/ground_truth.hpp"

#include <algorithm>
#include <iterator>

#include <nlohmann/json.hpp>

#include "lark/error.hpp"

namespace lark {

namespace {

using Set = std::vector<EntityId>;  // sorted, unique

Set normalize(Set s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

Set both(const Set& a, const Set& b) {
  Set out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Set either(const Set& a, const Set& b) {
  Set out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

class Evaluator {
 public:
  Evaluator(const KnowledgeGraph& kg, NegationSemantics semantics) : kg_(kg), semantics_(semantics) {}

  Set atom(EntityId e, RelationId r) const { return kg_.successors(e, r); }

  Set negated_atom(EntityId e, RelationId r) const {
    if (semantics_ == NegationSemantics::kTemplateOtherRelation) return kg_.successors_excluding(e, r);
    return complement(kg_.successors(e, r));
  }

  Set hop(const Set& from, RelationId r) const {
    Set out;
    for (EntityId e : from) {
      auto next = kg_.successors(e, r);
      out.insert(out.end(), next.begin(), next.end());
    }
    return normalize(std::move(out));
  }

  Set negated_hop(const Set& from, RelationId r) const {
    if (semantics_ == NegationSemantics::kFolComplement) return complement(hop(from, r));
    Set out;
    for (EntityId e : from) {
      auto next = kg_.successors_excluding(e, r);
      out.insert(out.end(), next.begin(), next.end());
    }
    return normalize(std::move(out));
  }

 private:
  Set complement(const Set& s) const {
    Set out;
    std::set_difference(kg_.entities().begin(), kg_.entities().end(), s.begin(), s.end(), std::back_inserter(out));
    return out;
  }

  const KnowledgeGraph& kg_;
  NegationSemantics semantics_;
};

}  // namespace

std::string_view to_string(NegationSemantics s) {
  return s == NegationSemantics::kTemplateOtherRelation ? "template_other_relation" : "fol_complement";
}

std::optional<NegationSemantics> parse_negation_semantics(std::string_view text) {
  if (text == "template_other_relation") return NegationSemantics::kTemplateOtherRelation;
  if (text == "fol_complement") return NegationSemantics::kFolComplement;
  return std::nullopt;
}

GoldAnswers ground_truth(const KnowledgeGraph& kg, const QueryDag& q, NegationSemantics semantics) {
  validate_against(q, kg);
  const Evaluator ev(kg, semantics);
  const auto& e = q.anchors;
  const auto& r = q.relations;

  Set answers;
  switch (q.type) {
    case QueryType::k1p: answers = ev.atom(e[0], r[0]); break;
    case QueryType::k2p: answers = ev.hop(ev.atom(e[0], r[0]), r[1]); break;
    case QueryType::k3p: answers = ev.hop(ev.hop(ev.atom(e[0], r[0]), r[1]), r[2]); break;
    case QueryType::k2i: answers = both(ev.atom(e[0], r[0]), ev.atom(e[1], r[1])); break;
    case QueryType::k3i: answers = both(both(ev.atom(e[0], r[0]), ev.atom(e[1], r[1])), ev.atom(e[2], r[2])); break;
    case QueryType::kIp: answers = ev.hop(both(ev.atom(e[0], r[0]), ev.atom(e[1], r[1])), r[2]); break;
    case QueryType::kPi: answers = both(ev.hop(ev.atom(e[0], r[0]), r[1]), ev.atom(e[1], r[2])); break;
    case QueryType::k2u: answers = either(ev.atom(e[0], r[0]), ev.atom(e[1], r[1])); break;
    case QueryType::kUp: answers = ev.hop(either(ev.atom(e[0], r[0]), ev.atom(e[1], r[1])), r[2]); break;
    case QueryType::k2in: answers = both(ev.atom(e[0], r[0]), ev.negated_atom(e[1], r[1])); break;
    case QueryType::k3in:
      answers = both(both(ev.atom(e[0], r[0]), ev.atom(e[1], r[1])), ev.negated_atom(e[2], r[2]));
      break;
    case QueryType::kInp: answers = ev.hop(both(ev.atom(e[0], r[0]), ev.negated_atom(e[1], r[1])), r[2]); break;
    case QueryType::kPin: answers = both(ev.hop(ev.atom(e[0], r[0]), r[1]), ev.negated_atom(e[1], r[2])); break;
    case QueryType::kPni: answers = both(ev.negated_hop(ev.atom(e[0], r[0]), r[1]), ev.atom(e[1], r[2])); break;
  }
  return {q.id, std::move(answers), semantics};
}

void write_gold(std::ostream& out, std::span<const GoldAnswers> gold, NegationSemantics semantics) {
  out << nlohmann::json{{"semantics", to_string(semantics)}}.dump() << '\n';
  for (const auto& g : gold) {
    nlohmann::json answers = nlohmann::json::array();
    for (auto e : g.answers) answers.push_back(to_string(e));
    out << nlohmann::json{{"id", g.query_id}, {"answers", answers}}.dump() << '\n';
  }
}

GoldFile read_gold(std::istream& in) {
  GoldFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (!j.contains("id")) {
        if (j.contains("semantics")) {
          file.semantics = parse_negation_semantics(j.at("semantics").get<std::string>());
          continue;
        }
        throw Error(ErrorKind::kParse, "gold line " + std::to_string(line_no) + ": record without 'id'");
      }
      std::vector<EntityId> answers;
      for (const auto& v : j.at("answers")) {
        auto id = parse_entity_id(v.get<std::string>());
        if (!id) throw Error(ErrorKind::kParse, "gold line " + std::to_string(line_no) + ": bad entity id");
        answers.push_back(*id);
      }
      file.answers[j.at("id").get<std::string>()] = normalize(std::move(answers));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, "gold line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return file;
}

}  // namespace lark
