#include "lark/retrieval.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "lark/error.hpp"

namespace lark {

namespace {

constexpr std::string_view kPreamble =
    "Given the following (h,r,t) triplets where entity h is related to entity t by relation r;";

// Anchor slots whose question is phrased as "any relation other than".
std::vector<std::size_t> negated_anchor_slots(QueryType type, bool negate_every_branch) {
  switch (type) {
    case QueryType::k2in: return negate_every_branch ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{1};
    case QueryType::k3in:
      return negate_every_branch ? std::vector<std::size_t>{0, 1, 2} : std::vector<std::size_t>{2};
    case QueryType::kInp: return {1};
    case QueryType::kPin: return {1};
    default: return {};
  }
}

class NeighborhoodBuilder {
 public:
  NeighborhoodBuilder(const KnowledgeGraph& kg, const QueryDag& q, const RetrievalConfig& cfg,
                      const Tokenizer& tokenizer)
      : kg_(kg), q_(q), cfg_(cfg), tokenizer_(tokenizer) {
    depth_ = std::min(traversal_depth(q.type), cfg.depth_limit);
    if (cfg.relation_constrained_first_level) {
      relation_filter_ = entities_and_relations(q).second;
      filtered_ = true;
    }
    if (cfg.negation_relaxation && has_negation(q.type)) {
      for (std::size_t slot : negated_anchor_slots(q.type, cfg.negate_every_branch)) {
        relaxed_anchors_.insert(q.anchors[slot]);
      }
      relax_second_level_ = q.type == QueryType::kPni;
    }
  }

  Neighborhood run() {
    const std::string empty_context = serialize_context({});
    body_tokens_ = 0;
    if (bounded()) {
      // Tokens of the body (preamble plus tuples); the closing " ." or "."
      // is accounted for separately.
      const std::size_t empty_count = tokenizer_.count(empty_context);
      if (empty_count > cfg_.token_limit) {
        nb_.truncated = true;
        nb_.token_count = empty_count;
        return std::move(nb_);
      }
      if (tokenizer_.additive()) {
        body_tokens_ = tokenizer_.count(kPreamble);
        terminal_tokens_ = empty_count - body_tokens_;
      }
    }

    std::vector<EntityId> anchors = entities_and_relations(q_).first;
    for (EntityId a : anchors) {
      visit(a, 1);
      if (stopped_) break;
    }
    nb_.token_count = tokenizer_.count(serialize_context(nb_.triplets));
    return std::move(nb_);
  }

 private:
  bool bounded() const { return cfg_.token_limit != kUnboundedTokens; }

  bool relaxed(EntityId v, int level) const {
    if (level == 1) return relaxed_anchors_.contains(v);
    return level == 2 && relax_second_level_;
  }

  bool admits(const Triplet& t, bool relaxed_here) const {
    if (!filtered_ || relaxed_here) return true;
    return std::binary_search(relation_filter_.begin(), relation_filter_.end(), t.relation);
  }

  void visit(EntityId v, int level) {
    const bool wide = relaxed(v, level);
    // A previous expansion at a level <= this one covers this one when its
    // filter was at least as wide.
    auto& seen = expanded_[v];
    if (seen.wide <= level || (!wide && seen.narrow <= level)) return;
    (wide ? seen.wide : seen.narrow) = level;

    for (const Triplet& t : kg_.incident(v)) {
      if (!admits(t, wide)) continue;
      if (!emitted_.contains(t)) {
        if (!append(t, level)) {
          stopped_ = true;
          return;
        }
      }
      if (level < depth_) {
        EntityId other = t.head == v ? t.tail : t.head;
        visit(other, level + 1);
        if (stopped_) return;
      }
    }
  }

  bool append(const Triplet& t, int level) {
    if (bounded()) {
      std::string piece = (nb_.triplets.empty() ? " " : ", ") + to_string(t);
      std::size_t total = 0;
      std::size_t piece_tokens = 0;
      if (tokenizer_.additive()) {
        piece_tokens = tokenizer_.count(piece);
        total = body_tokens_ + piece_tokens + terminal_tokens_;
      } else {
        std::vector<Triplet> candidate = nb_.triplets;
        candidate.push_back(t);
        total = tokenizer_.count(serialize_context(candidate));
      }
      if (total > cfg_.token_limit) {
        nb_.truncated = true;
        return false;
      }
      body_tokens_ += piece_tokens;
    }
    emitted_.insert(t);
    nb_.triplets.push_back(t);
    nb_.levels.push_back(level);
    return true;
  }

  struct Expanded {
    int narrow = std::numeric_limits<int>::max();
    int wide = std::numeric_limits<int>::max();
  };

  const KnowledgeGraph& kg_;
  const QueryDag& q_;
  const RetrievalConfig& cfg_;
  const Tokenizer& tokenizer_;
  int depth_ = 1;
  bool filtered_ = false;
  std::vector<RelationId> relation_filter_;
  std::unordered_set<EntityId> relaxed_anchors_;
  bool relax_second_level_ = false;
  std::unordered_map<EntityId, Expanded> expanded_;
  std::unordered_set<Triplet> emitted_;
  std::size_t body_tokens_ = 0;
  std::size_t terminal_tokens_ = 0;
  bool stopped_ = false;
  Neighborhood nb_;
};

}  // namespace

void validate(const RetrievalConfig& cfg) {
  if (cfg.token_limit < 1) throw Error(ErrorKind::kInvalidConfig, "token_limit must be >= 1");
  if (cfg.depth_limit < 1 || cfg.depth_limit > 3) throw Error(ErrorKind::kInvalidConfig, "depth_limit must be in 1..3");
}

std::string_view context_preamble() { return kPreamble; }

std::string serialize_context(std::span<const Triplet> triplets) {
  std::string out(kPreamble);
  out += ' ';
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (i > 0) out += ", ";
    out += to_string(triplets[i]);
  }
  out += '.';
  return out;
}

Neighborhood retrieve_neighborhood(const KnowledgeGraph& kg, const QueryDag& q, const RetrievalConfig& cfg,
                                   const Tokenizer& tokenizer) {
  validate(cfg);
  validate_against(q, kg);
  return NeighborhoodBuilder(kg, q, cfg, tokenizer).run();
}

}  // namespace lark
