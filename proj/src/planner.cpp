#include "lark/planner.hpp"

#include <algorithm>

#include "lark/error.hpp"

namespace lark {

namespace {

class PlanBuilder {
 public:
  explicit PlanBuilder(QueryType type) { plan_.type = type; }

  int project(EntityId e, RelationId r) { return add(step(StepOp::kProject, e, r, {})); }
  int project_negated(EntityId e, RelationId r) {
    return add(step(StepOp::kProjectNegated, e, r, {}));
  }
  int follow(int input, RelationId r, Wording w = Wording::kStandard) {
    return add(step(StepOp::kProjectFromPlaceholder, std::nullopt, r, {input}, w));
  }
  int follow_negated(int input, RelationId r) {
    return add(step(StepOp::kProjectNegatedFromPlaceholder, std::nullopt, r, {input}));
  }
  int intersect(std::vector<int> inputs, Wording w = Wording::kStandard) {
    return add(step(StepOp::kIntersect, std::nullopt, std::nullopt, std::move(inputs), w));
  }
  int unite(std::vector<int> inputs) { return add(step(StepOp::kUnion, std::nullopt, std::nullopt, std::move(inputs))); }

  static ElementaryStep step(StepOp op, std::optional<EntityId> anchor, std::optional<RelationId> relation,
                             std::vector<int> inputs, Wording w = Wording::kStandard) {
    ElementaryStep s;
    s.op = op;
    s.anchor = anchor;
    s.relation = relation;
    s.inputs = std::move(inputs);
    s.wording = w;
    return s;
  }

  DecompositionPlan finish() {
    plan_.final_slot = static_cast<int>(plan_.steps.size());
    plan_.phases = schedule(plan_);
    return std::move(plan_);
  }

 private:
  int add(ElementaryStep step) {
    step.index = static_cast<int>(plan_.steps.size()) + 1;
    plan_.steps.push_back(std::move(step));
    return plan_.steps.back().index;
  }

  DecompositionPlan plan_;
};

}  // namespace

std::string_view to_string(StepOp op) {
  switch (op) {
    case StepOp::kProject: return "project";
    case StepOp::kProjectNegated: return "project_negated";
    case StepOp::kIntersect: return "intersect";
    case StepOp::kUnion: return "union";
    case StepOp::kProjectFromPlaceholder: return "project_from_placeholder";
    case StepOp::kProjectNegatedFromPlaceholder: return "project_negated_from_placeholder";
  }
  return "unknown";
}

bool is_set_op(StepOp op) { return op == StepOp::kIntersect || op == StepOp::kUnion; }

std::string placeholder_name(int index) { return "[PP" + std::to_string(index) + "]"; }

DecompositionPlan decompose(const QueryDag& q, const PlannerOptions& options) {
  const auto& e = q.anchors;
  const auto& r = q.relations;
  PlanBuilder b(q.type);
  const bool all_neg = options.negate_every_branch;

  switch (q.type) {
    case QueryType::k1p:
      b.project(e[0], r[0]);
      break;
    case QueryType::k2p:
      b.follow(b.project(e[0], r[0]), r[1]);
      break;
    case QueryType::k3p:
      b.follow(b.follow(b.project(e[0], r[0]), r[1]), r[2]);
      break;
    case QueryType::k2i: {
      int a = b.project(e[0], r[0]);
      int c = b.project(e[1], r[1]);
      b.intersect({a, c});
      break;
    }
    case QueryType::k3i: {
      int a = b.project(e[0], r[0]);
      int c = b.project(e[1], r[1]);
      int d = b.project(e[2], r[2]);
      b.intersect({a, c, d});
      break;
    }
    case QueryType::kIp: {
      int a = b.project(e[0], r[0]);
      int c = b.project(e[1], r[1]);
      b.follow(b.intersect({a, c}), r[2], Wording::kWhatAre);
      break;
    }
    case QueryType::kPi: {
      int a = b.project(e[0], r[0]);
      int chain = b.follow(a, r[1], Wording::kBare);
      int branch = b.project(e[1], r[2]);
      b.intersect({chain, branch});
      break;
    }
    case QueryType::k2u: {
      int a = b.project(e[0], r[0]);
      int c = b.project(e[1], r[1]);
      b.unite({a, c});
      break;
    }
    case QueryType::kUp: {
      int a = b.project(e[0], r[0]);
      int c = b.project(e[1], r[1]);
      b.follow(b.unite({a, c}), r[2]);
      break;
    }
    case QueryType::k2in: {
      int a = all_neg ? b.project_negated(e[0], r[0]) : b.project(e[0], r[0]);
      int c = b.project_negated(e[1], r[1]);
      b.intersect({a, c});
      break;
    }
    case QueryType::k3in: {
      int a = all_neg ? b.project_negated(e[0], r[0]) : b.project(e[0], r[0]);
      int c = all_neg ? b.project_negated(e[1], r[1]) : b.project(e[1], r[1]);
      int d = b.project_negated(e[2], r[2]);
      b.intersect({a, c, d});
      break;
    }
    case QueryType::kInp: {
      int a = b.project(e[0], r[0]);
      int c = b.project_negated(e[1], r[1]);
      b.follow(b.intersect({a, c}, Wording::kSerialComma), r[2], Wording::kWhatAre);
      break;
    }
    case QueryType::kPin: {
      int a = b.project(e[0], r[0]);
      int chain = b.follow(a, r[1], Wording::kEntitySet);
      int branch = b.project_negated(e[1], r[2]);
      b.intersect({chain, branch});
      break;
    }
    case QueryType::kPni: {
      int a = b.project(e[0], r[0]);
      int chain = b.follow_negated(a, r[1]);
      int branch = b.project(e[1], r[2]);
      b.intersect({chain, branch});
      break;
    }
  }
  return b.finish();
}

std::vector<std::vector<int>> schedule(const DecompositionPlan& plan) {
  const int n = static_cast<int>(plan.steps.size());
  std::vector<int> phase(static_cast<std::size_t>(n) + 1, 0);
  // Relaxation to a fixed point; more than n rounds means a cycle.
  bool changed = true;
  int rounds = 0;
  while (changed) {
    changed = false;
    if (++rounds > n + 1) throw Error(ErrorKind::kCyclicDependency, "step dependencies contain a cycle");
    for (const auto& step : plan.steps) {
      int p = 1;
      for (int in : step.inputs) {
        if (in < 1 || in > n || in == step.index) {
          throw Error(ErrorKind::kCyclicDependency,
                      "step " + std::to_string(step.index) + " reads unresolvable " + placeholder_name(in));
        }
        p = std::max(p, phase[static_cast<std::size_t>(in)] + 1);
      }
      if (phase[static_cast<std::size_t>(step.index)] != p) {
        phase[static_cast<std::size_t>(step.index)] = p;
        changed = true;
      }
    }
  }
  const int phases = n == 0 ? 0 : *std::max_element(phase.begin(), phase.end());
  std::vector<std::vector<int>> out(static_cast<std::size_t>(phases));
  for (const auto& step : plan.steps) out[static_cast<std::size_t>(phase[static_cast<std::size_t>(step.index)] - 1)].push_back(step.index);
  return out;
}

std::vector<nlohmann::json> plan_records(const DecompositionPlan& plan) {
  std::vector<nlohmann::json> out;
  for (const auto& s : plan.steps) {
    nlohmann::json inputs = nlohmann::json::array();
    for (int in : s.inputs) inputs.push_back(placeholder_name(in));
    out.push_back({
        {"step", s.index},
        {"op", to_string(s.op)},
        {"anchor", s.anchor ? nlohmann::json(to_string(*s.anchor)) : nlohmann::json(nullptr)},
        {"relation", s.relation ? nlohmann::json(to_string(*s.relation)) : nlohmann::json(nullptr)},
        {"inputs", inputs},
        {"output", placeholder_name(s.index)},
    });
  }
  return out;
}

}  // namespace lark
