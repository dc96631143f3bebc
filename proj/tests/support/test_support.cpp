#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iterator>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace lark::testing {

EntityId E(std::uint32_t v) { return EntityId{v}; }
RelationId R(std::uint32_t v) { return RelationId{v}; }

std::vector<EntityId> Es(std::initializer_list<std::uint32_t> vs) {
  std::vector<EntityId> out;
  for (auto v : vs) out.push_back(E(v));
  return out;
}

KnowledgeGraph g0() {
  return KnowledgeGraph({{E(1), R(1), E(2)},
                         {E(1), R(1), E(3)},
                         {E(2), R(2), E(4)},
                         {E(3), R(2), E(4)},
                         {E(3), R(3), E(5)},
                         {E(4), R(3), E(5)}});
}

QueryDag make_query(QueryType type, std::vector<std::uint32_t> anchors, std::vector<std::uint32_t> relations,
                    std::string id) {
  QueryDag q;
  q.id = std::move(id);
  q.type = type;
  for (auto a : anchors) q.anchors.push_back(E(a));
  for (auto r : relations) q.relations.push_back(R(r));
  return q;
}

KnowledgeGraph random_graph(std::mt19937_64& rng, const GraphShape& shape) {
  std::vector<double> weights(shape.entities);
  for (std::uint32_t i = 0; i < shape.entities; ++i) weights[i] = 1.0 / std::pow(static_cast<double>(i + 1), shape.skew);
  std::discrete_distribution<std::uint32_t> pick_entity(weights.begin(), weights.end());
  std::uniform_int_distribution<std::uint32_t> pick_relation(0, shape.relations - 1);
  std::uniform_int_distribution<std::uint32_t> uniform_entity(0, shape.entities - 1);
  std::vector<Triplet> triplets;
  triplets.reserve(shape.triplets);
  for (std::size_t i = 0; i < shape.triplets; ++i) {
    // Heads follow the skewed distribution, tails are uniform, so in-degree
    // stays moderate while a few hubs collect most outgoing edges.
    triplets.push_back({E(pick_entity(rng)), R(pick_relation(rng)), E(uniform_entity(rng))});
  }
  return KnowledgeGraph(std::move(triplets));
}

GraphShape random_shape(std::mt19937_64& rng, std::uint32_t max_entities, std::uint32_t max_relations) {
  GraphShape s;
  s.entities = std::uniform_int_distribution<std::uint32_t>(5, max_entities)(rng);
  s.relations = std::uniform_int_distribution<std::uint32_t>(1, max_relations)(rng);
  const std::size_t lo = s.entities;
  s.triplets = std::uniform_int_distribution<std::size_t>(lo, lo * 4)(rng);
  s.skew = std::uniform_real_distribution<double>(0.0, 1.2)(rng);
  return s;
}

namespace {

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::vector<Triplet> incoming(const KnowledgeGraph& kg, EntityId t) {
  std::vector<Triplet> out;
  for (const auto& tr : kg.incident(t)) {
    if (tr.tail == t) out.push_back(tr);
  }
  return out;
}

// Walks `hops` edges backwards from `target`; relations come out in forward order.
std::optional<std::pair<EntityId, std::vector<RelationId>>> chain_to(std::mt19937_64& rng, const KnowledgeGraph& kg,
                                                                     EntityId target, int hops) {
  std::vector<RelationId> rels;
  EntityId cur = target;
  for (int i = 0; i < hops; ++i) {
    auto in = incoming(kg, cur);
    if (in.empty()) return std::nullopt;
    const auto& t = pick(rng, in);
    rels.insert(rels.begin(), t.relation);
    cur = t.head;
  }
  return std::make_pair(cur, rels);
}

QueryDag random_ids(std::mt19937_64& rng, const KnowledgeGraph& kg, QueryType type, std::string id) {
  std::vector<EntityId> ents(kg.entities().begin(), kg.entities().end());
  std::vector<RelationId> rels(kg.relations().begin(), kg.relations().end());
  QueryDag q;
  q.id = std::move(id);
  q.type = type;
  const auto slots = slot_counts(type);
  for (std::size_t i = 0; i < slots.anchors; ++i) q.anchors.push_back(pick(rng, ents));
  for (std::size_t i = 0; i < slots.relations; ++i) q.relations.push_back(pick(rng, rels));
  return q;
}

std::optional<QueryDag> try_sample(std::mt19937_64& rng, const KnowledgeGraph& kg, QueryType type) {
  std::vector<Triplet> all(kg.triplets().begin(), kg.triplets().end());
  std::vector<RelationId> rels(kg.relations().begin(), kg.relations().end());
  const EntityId x = pick(rng, all).tail;
  QueryDag q;
  q.type = type;
  auto in_x = incoming(kg, x);
  switch (type) {
    case QueryType::k1p:
    case QueryType::k2p:
    case QueryType::k3p: {
      auto c = chain_to(rng, kg, x, traversal_depth(type));
      if (!c) return std::nullopt;
      q.anchors = {c->first};
      q.relations = c->second;
      return q;
    }
    case QueryType::k2i:
    case QueryType::k3i:
    case QueryType::k2in:
    case QueryType::k3in: {
      const std::size_t k = slot_counts(type).anchors;
      for (std::size_t i = 0; i < k; ++i) {
        const auto& t = pick(rng, in_x);
        q.anchors.push_back(t.head);
        // The negated atom gets a random relation so that it sometimes holds.
        q.relations.push_back(has_negation(type) && i + 1 == k ? pick(rng, rels) : t.relation);
      }
      return q;
    }
    case QueryType::k2u: {
      const auto& a = pick(rng, in_x);
      const auto& b = pick(rng, all);
      q.anchors = {a.head, b.head};
      q.relations = {a.relation, b.relation};
      return q;
    }
    case QueryType::kIp:
    case QueryType::kInp:
    case QueryType::kUp: {
      const auto& last = pick(rng, in_x);
      auto in_m = incoming(kg, last.head);
      if (in_m.empty()) return std::nullopt;
      const auto& a = pick(rng, in_m);
      const auto& b = type == QueryType::kUp ? pick(rng, all) : pick(rng, in_m);
      q.anchors = {a.head, b.head};
      q.relations = {a.relation, type == QueryType::kInp ? pick(rng, rels) : b.relation, last.relation};
      return q;
    }
    case QueryType::kPi:
    case QueryType::kPin:
    case QueryType::kPni: {
      const auto& hop = pick(rng, in_x);
      auto in_m = incoming(kg, hop.head);
      if (in_m.empty()) return std::nullopt;
      const auto& first = pick(rng, in_m);
      const auto& side = pick(rng, in_x);
      q.anchors = {first.head, side.head};
      q.relations = {first.relation, type == QueryType::kPni ? pick(rng, rels) : hop.relation,
                     type == QueryType::kPin ? pick(rng, rels) : side.relation};
      return q;
    }
  }
  return std::nullopt;
}

// Triplet membership over a plain hash set, independent of the graph indexes.
class Facts {
 public:
  explicit Facts(const KnowledgeGraph& kg)
      : set_(kg.triplets().begin(), kg.triplets().end()),
        entities_(kg.entities().begin(), kg.entities().end()),
        relations_(kg.relations().begin(), kg.relations().end()) {}

  bool has(EntityId h, RelationId r, EntityId t) const { return set_.contains({h, r, t}); }

  bool neg(EntityId a, RelationId r, EntityId x, NegationSemantics s) const {
    if (s == NegationSemantics::kFolComplement) return !has(a, r, x);
    for (auto other : relations_) {
      if (other != r && has(a, other, x)) return true;
    }
    return false;
  }

  const std::vector<EntityId>& entities() const { return entities_; }

 private:
  std::unordered_set<Triplet> set_;
  std::vector<EntityId> entities_;
  std::vector<RelationId> relations_;
};

}  // namespace

QueryDag sample_query(std::mt19937_64& rng, const KnowledgeGraph& kg, QueryType type, std::string id) {
  for (int attempt = 0; attempt < 20; ++attempt) {
    if (auto q = try_sample(rng, kg, type)) {
      q->id = std::move(id);
      return *q;
    }
  }
  return random_ids(rng, kg, type, std::move(id));
}

std::vector<EntityId> reference_answers(const KnowledgeGraph& kg, const QueryDag& q, NegationSemantics semantics) {
  const Facts f(kg);
  const auto& E_ = f.entities();
  const auto& a = q.anchors;
  const auto& r = q.relations;
  auto exists = [&](auto&& pred) { return std::any_of(E_.begin(), E_.end(), pred); };
  auto neg = [&](EntityId src, RelationId rel, EntityId x) { return f.neg(src, rel, x, semantics); };

  std::vector<EntityId> out;
  for (EntityId x : E_) {
    bool ok = false;
    switch (q.type) {
      case QueryType::k1p:
        ok = f.has(a[0], r[0], x);
        break;
      case QueryType::k2p:
        ok = exists([&](EntityId y) { return f.has(a[0], r[0], y) && f.has(y, r[1], x); });
        break;
      case QueryType::k3p:
        ok = exists([&](EntityId y) {
          return f.has(a[0], r[0], y) && exists([&](EntityId z) { return f.has(y, r[1], z) && f.has(z, r[2], x); });
        });
        break;
      case QueryType::k2i:
        ok = f.has(a[0], r[0], x) && f.has(a[1], r[1], x);
        break;
      case QueryType::k3i:
        ok = f.has(a[0], r[0], x) && f.has(a[1], r[1], x) && f.has(a[2], r[2], x);
        break;
      case QueryType::kIp:
        ok = exists([&](EntityId y) { return f.has(a[0], r[0], y) && f.has(a[1], r[1], y) && f.has(y, r[2], x); });
        break;
      case QueryType::kPi:
        ok = f.has(a[1], r[2], x) && exists([&](EntityId y) { return f.has(a[0], r[0], y) && f.has(y, r[1], x); });
        break;
      case QueryType::k2u:
        ok = f.has(a[0], r[0], x) || f.has(a[1], r[1], x);
        break;
      case QueryType::kUp:
        ok = exists([&](EntityId y) { return (f.has(a[0], r[0], y) || f.has(a[1], r[1], y)) && f.has(y, r[2], x); });
        break;
      case QueryType::k2in:
        ok = f.has(a[0], r[0], x) && neg(a[1], r[1], x);
        break;
      case QueryType::k3in:
        ok = f.has(a[0], r[0], x) && f.has(a[1], r[1], x) && neg(a[2], r[2], x);
        break;
      case QueryType::kInp:
        ok = exists([&](EntityId y) { return f.has(a[0], r[0], y) && neg(a[1], r[1], y) && f.has(y, r[2], x); });
        break;
      case QueryType::kPin:
        ok = neg(a[1], r[2], x) && exists([&](EntityId y) { return f.has(a[0], r[0], y) && f.has(y, r[1], x); });
        break;
      case QueryType::kPni:
        if (semantics == NegationSemantics::kFolComplement) {
          // The complement applies to the whole projected set.
          ok = f.has(a[1], r[2], x) && !exists([&](EntityId y) { return f.has(a[0], r[0], y) && f.has(y, r[1], x); });
        } else {
          ok = f.has(a[1], r[2], x) && exists([&](EntityId y) { return f.has(a[0], r[0], y) && neg(y, r[1], x); });
        }
        break;
    }
    if (ok) out.push_back(x);
  }
  return out;
}

std::set<Triplet> touched_triplets(const KnowledgeGraph& kg, const QueryDag& q) {
  std::set<Triplet> touched;
  // One hop: records every (x, rel, *) triplet and returns the reached tails.
  auto hop = [&](const std::set<EntityId>& from, RelationId rel) {
    std::set<EntityId> to;
    for (const auto& t : kg.triplets()) {
      if (t.relation == rel && from.contains(t.head)) {
        touched.insert(t);
        to.insert(t.tail);
      }
    }
    return to;
  };
  auto meet = [](const std::set<EntityId>& x, const std::set<EntityId>& y) {
    std::set<EntityId> out;
    std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::inserter(out, out.end()));
    return out;
  };
  const auto& a = q.anchors;
  const auto& r = q.relations;
  switch (q.type) {
    case QueryType::k1p:
    case QueryType::k2p:
    case QueryType::k3p: {
      std::set<EntityId> cur = {a[0]};
      for (auto rel : r) cur = hop(cur, rel);
      break;
    }
    case QueryType::k2i:
    case QueryType::k3i:
    case QueryType::k2u:
      for (std::size_t i = 0; i < a.size(); ++i) hop({a[i]}, r[i]);
      break;
    case QueryType::kIp:
      hop(meet(hop({a[0]}, r[0]), hop({a[1]}, r[1])), r[2]);
      break;
    case QueryType::kUp: {
      auto s = hop({a[0]}, r[0]);
      s.merge(hop({a[1]}, r[1]));
      hop(s, r[2]);
      break;
    }
    case QueryType::kPi:
      hop(hop({a[0]}, r[0]), r[1]);
      hop({a[1]}, r[2]);
      break;
    default:
      break;  // negation types are not covered by the sufficiency property
  }
  return touched;
}

double reference_rr(const std::vector<EntityId>& predicted, const std::set<EntityId>& gold) {
  double best = 0.0;
  for (std::size_t rank = predicted.size(); rank >= 1; --rank) {
    if (gold.count(predicted[rank - 1])) best = 1.0 / static_cast<double>(rank);
  }
  return best;
}

double reference_hits(const std::vector<EntityId>& predicted, const std::set<EntityId>& gold, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size() && i < k; ++i) hits += gold.count(predicted[i]);
  return hits > 0 ? 1.0 : 0.0;
}

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "lark-test-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path);
}

MockChatServer::MockChatServer(Handler handler)
    : handler_(std::move(handler)), server_(std::make_unique<httplib::Server>()) {
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    {
      std::lock_guard lock(mutex_);
      last_authorization_ = req.get_header_value("Authorization");
      last_body_ = req.body;
    }
    const auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages")) {
      res.status = 400;
      return;
    }
    auto reply = handler_(body["messages"][0]["content"].get<std::string>());
    if (!reply) {
      res.status = 500;
      res.set_content("{\"error\":\"scripted failure\"}", "application/json");
      return;
    }
    nlohmann::json out = {{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", *reply}}}}}}};
    res.set_content(out.dump(), "application/json");
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockChatServer::~MockChatServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockChatServer::url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

std::string MockChatServer::last_authorization() const {
  std::lock_guard lock(mutex_);
  return last_authorization_;
}

std::string MockChatServer::last_body() const {
  std::lock_guard lock(mutex_);
  return last_body_;
}

std::string scripted_reply(const std::string& prompt) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : prompt) h = (h ^ c) * 1099511628211ull;
  std::mt19937_64 rng(h);

  static const std::regex id_pattern(R"(\be\d+\b)");
  std::vector<std::string> ids;
  for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), id_pattern); it != std::sregex_iterator(); ++it) {
    if (std::find(ids.begin(), ids.end(), it->str()) == ids.end()) ids.push_back(it->str());
  }
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::string> chosen;
  for (const auto& id : ids) {
    if (rng() % 10 < 6) chosen.push_back(id);
  }
  const auto style = rng() % 10;
  if (style == 0) return "I am not able to determine this from the given triplets.";
  if (chosen.empty() || style == 1) return "none";
  std::string list;
  for (std::size_t i = 0; i < chosen.size(); ++i) list += (i ? ", " : "") + chosen[i];
  if (style < 6) return list;
  return "Based on the triplets, the answer entities are " + list + ".";
}

}  // namespace lark::testing
