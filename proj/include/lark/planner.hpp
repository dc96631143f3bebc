#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lark/ids.hpp"
#include "lark/query.hpp"

namespace lark {

enum class StepOp {
  kProject,
  kProjectNegated,
  kIntersect,
  kUnion,
  kProjectFromPlaceholder,
  kProjectNegatedFromPlaceholder,
};

std::string_view to_string(StepOp op);
bool is_set_op(StepOp op);

// Sentence variants used by the step questions of particular query types.
// kStandard covers most steps; the others reproduce the exact phrasing some
// query types use for the same operation.
enum class Wording {
  kStandard,     // "Which entities are connected to any entity in [PP1] ..."
  kBare,         // "Which entities are connected to [PP1] ..."             (pi)
  kEntitySet,    // "Which entities are connected to entity set in [PP1] ..." (pin)
  kWhatAre,      // "What are the entities connected to any entity in ..."  (ip, inp)
  kSerialComma,  // "... entity sets [PP1], and [PP2]?"                      (inp)
};

struct ElementaryStep {
  int index = 1;  // 1-based; the step writes placeholder [PP<index>]
  StepOp op = StepOp::kProject;
  std::optional<EntityId> anchor;
  std::optional<RelationId> relation;
  std::vector<int> inputs;  // indices of the steps whose output is consumed
  Wording wording = Wording::kStandard;

  bool operator==(const ElementaryStep&) const = default;
};

// "[PP<index>]"
std::string placeholder_name(int index);

struct DecompositionPlan {
  QueryType type = QueryType::k1p;
  std::vector<ElementaryStep> steps;
  std::vector<std::vector<int>> phases;  // step indices per phase
  int final_slot = 1;

  const ElementaryStep& step(int index) const { return steps.at(static_cast<std::size_t>(index - 1)); }
};

struct PlannerOptions {
  // Phrase every intersection branch of 2in/3in as negated instead of only
  // the branch the logical form negates.
  bool negate_every_branch = false;
};

/// Lowers a query into single-operation steps and schedules them.
DecompositionPlan decompose(const QueryDag& q, const PlannerOptions& options = {});

/// Greedy levelling: phase(step) = 1 + max phase of its producers.
/// Throws CyclicDependency for inputs that are unknown or never resolve.
std::vector<std::vector<int>> schedule(const DecompositionPlan& plan);

/// `{step, op, anchor, relation, inputs, output}` records, one per step.
std::vector<nlohmann::json> plan_records(const DecompositionPlan& plan);

}  // namespace lark
