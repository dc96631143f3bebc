#include "lark/prompts.hpp"

#include <algorithm>

#include "lark/error.hpp"

namespace lark {

namespace {

// Full-question templates, one per query type in enumerator order. Slots are
// {e1}..{e3} and {r1}..{r3}. The set-letter wording is kept exactly as the
// templates were published, including the places where the closing clause
// names different sets than the preceding sentence.
constexpr std::array<std::string_view, 14> kFullTemplates = {
    // 1p
    "Which entities are connected to {e1} by relation {r1}?",
    // 2p
    "Let us assume that the set of entities E is connected to entity {e1} by relation {r1}. "
    "Then, what are the entities connected to E by relation {r2}?",
    // 3p
    "Let us assume that the set of entities E is connected to entity {e1} by relation {r1} and "
    "the set of entities F is connected to entities in E by relation {r2}. Then, what are the entities "
    "connected to F by relation {r3}?",
    // 2i
    "Let us assume that the set of entities E is connected to entity {e1} by relation {r1} and "
    "the set of entities F is connected to entity {e2} by relation {r2}. Then, what are the entities "
    "in the intersection of set E and F, i.e., entities present in both F and G?",
    // 3i
    "Let us assume that the set of entities E is connected to entity {e1} by relation {r1}, the set of entities F "
    "is connected to entity {e2} by relation {r2} and the "
    "set of entities G is connected to entity {e3} by relation {r3}. "
    "Then, what are the entities in the intersection of set E, F and G, i.e., "
    "entities present in all E, F and G?",
    // ip
    "Let us assume that the set of entities E is connected to "
    "entity {e1} by relation {r1}, F is the set of entities "
    "connected to entity {e2} by relation {r2}, and G is the "
    "set of entities in the intersection of E and F. "
    "Then, what are the entities connected to entities in set G by relation {r3}?",
    // pi
    "Let us assume that the set of entities E is connected to "
    "entity {e1} by relation {r1}, F is the set of entities "
    "connected to entities in E by relation {r2}, and G is the set of entities "
    "connected to entity {e2} by relation {r3}. "
    "Then, what are the entities in the intersection of set F and G, i.e., "
    "entities present in both F and G?",
    // 2u
    "Let us assume that the set of entities E is connected to "
    "entity {e1} by relation {r1} and F is the set of entities "
    "connected to entity {e2} by relation {r2}. "
    "Then, what are the entities in the union of set F and G, i.e., "
    "entities present in either F or G?",
    // up
    "Let us assume that the set of entities E is connected to "
    "entity {e1} by relation {r1} and F is the set of entities "
    "connected to entity {e2} by relation {r2}. G is the "
    "set of entities in the union of E and F. "
    "Then, what are the entities connected to entities in G by relation {r3}?",
    // 2in
    "Let us assume that the set of entities E is connected to "
    "entity {e1} by relation {r1} and F is the set of entities "
    "connected to entity {e2} by any relation other than relation {r2}. "
    "Then, what are the entities in the intersection of set E and F, i.e., "
    "entities present in both F and G?",
    // 3in
    "Let us assume that the set of entities E is connected to "
    "entity {e1} by relation {r1}, F is the set of entities "
    "connected to entity {e2} by relation {r2}, and F is the "
    "set of entities connected to entity {e3} by any relation other "
    "than relation {r3}. "
    "Then, what are the entities in the intersection of set E and F, i.e., "
    "entities present in both F and G?",
    // inp
    "Let us assume that the set of entities E is connected to "
    "entity {e1} by relation {r1}, and F is the set of entities "
    "connected to entity {e2} by any relation other than relation {r2}. "
    "Then, what are the entities that are connected to the entities in the intersection of set E and F by relation "
    "{r3}?",
    // pin
    "Let us assume that the set of entities E is connected to "
    "entity {e1} by relation {r1}, F is the set of entities "
    "connected to entities in E by relation {r2}, and G is the "
    "set of entities connected to entity {e2} by any relation other "
    "than relation {r3}. "
    "Then, what are the entities in the intersection of set F and G, i.e., "
    "entities present in both F and G?",
    // pni
    "Let us assume that the set of entities E is connected to "
    "entity {e1} by relation {r1}, F is the set of entities "
    "connected to entities in E by any relation other than {r2}, "
    "and G is the set of entities connected to entity {e2} by relation {r3}. "
    "Then, what are the entities in the intersection of set F and G, i.e., "
    "entities present in both F and G?",
};

std::string fill_slots(std::string_view tmpl, const QueryDag& q) {
  std::string out;
  out.reserve(tmpl.size() + 16);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && i + 3 < tmpl.size() && tmpl[i + 3] == '}') {
      const char kind = tmpl[i + 1];
      const auto slot = static_cast<std::size_t>(tmpl[i + 2] - '1');
      if (kind == 'e') {
        out += to_string(q.anchors.at(slot));
      } else {
        out += to_string(q.relations.at(slot));
      }
      i += 3;
      continue;
    }
    out += tmpl[i];
  }
  return out;
}

std::string join_sets(const std::vector<int>& inputs, const std::function<std::string(int)>& placeholder,
                      Wording wording) {
  std::string out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (i > 0) {
      if (i + 1 < inputs.size()) {
        out += ", ";
      } else {
        out += wording == Wording::kSerialComma ? ", and " : " and ";
      }
    }
    out += placeholder(inputs[i]);
  }
  return out;
}

std::string with_context(std::string_view context, const std::string& question) {
  std::string out(context);
  out += "\n\n";
  out += question;
  return out;
}

}  // namespace

void AnswerCache::write(int slot, std::vector<EntityId> answers) {
  auto [it, inserted] = slots_.try_emplace(slot, std::move(answers));
  if (!inserted) throw Error(ErrorKind::kMissingPlaceholder, placeholder_name(slot) + " written twice");
}

const std::vector<EntityId>& AnswerCache::read(int slot) const {
  auto it = slots_.find(slot);
  if (it == slots_.end()) throw Error(ErrorKind::kMissingPlaceholder, placeholder_name(slot) + " has not been written");
  return it->second;
}

std::string format_entity_list(std::span<const EntityId> ids) {
  if (ids.empty()) return "none";
  std::vector<EntityId> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0) out += ", ";
    out += to_string(sorted[i]);
  }
  return out;
}

std::string full_question(const QueryDag& q) {
  return fill_slots(kFullTemplates[static_cast<std::size_t>(q.type)], q);
}

std::string step_question(const ElementaryStep& step, const std::function<std::string(int)>& placeholder) {
  auto rel = [&] { return to_string(step.relation.value()); };
  auto anchor = [&] { return to_string(step.anchor.value()); };
  switch (step.op) {
    case StepOp::kProject:
      return "Which entities are connected to " + anchor() + " by relation " + rel() + "?";
    case StepOp::kProjectNegated:
      return "Which entities are connected to " + anchor() + " by any relation other than " + rel() + "?";
    case StepOp::kProjectFromPlaceholder: {
      const std::string in = placeholder(step.inputs.at(0));
      switch (step.wording) {
        case Wording::kBare: return "Which entities are connected to " + in + " by relation " + rel() + "?";
        case Wording::kEntitySet:
          return "Which entities are connected to entity set in " + in + " by relation " + rel() + "?";
        case Wording::kWhatAre:
          return "What are the entities connected to any entity in " + in + " by relation " + rel() + "?";
        default: return "Which entities are connected to any entity in " + in + " by relation " + rel() + "?";
      }
    }
    case StepOp::kProjectNegatedFromPlaceholder:
      return "Which entities are connected to any entity in " + placeholder(step.inputs.at(0)) +
             " by any relation other than " + rel() + "?";
    case StepOp::kIntersect:
      return "What are the entities in the intersection of entity sets " +
             join_sets(step.inputs, placeholder, step.wording) + "?";
    case StepOp::kUnion:
      return "What are the entities in the union of entity sets " + join_sets(step.inputs, placeholder, step.wording) +
             "?";
  }
  return {};
}

PromptText render_full_prompt(const QueryDag& q, std::string_view context, const Tokenizer& tokenizer) {
  PromptText p;
  p.text = with_context(context, full_question(q));
  p.token_count = tokenizer.count(p.text);
  p.kind = PromptKind::kFull;
  p.query_id = q.id;
  return p;
}

PromptText render_step_prompt(const ElementaryStep& step, std::string_view context, const AnswerCache& cache,
                              std::string_view query_id, const Tokenizer& tokenizer) {
  std::string question =
      step_question(step, [&](int slot) { return format_entity_list(cache.read(slot)); });
  PromptText p;
  p.text = is_set_op(step.op) ? std::move(question) : with_context(context, question);
  p.token_count = tokenizer.count(p.text);
  p.kind = PromptKind::kStep;
  p.query_id = std::string(query_id);
  p.step_index = step.index;
  return p;
}

std::string render_step_template(const ElementaryStep& step, std::string_view context) {
  std::string question = step_question(step, placeholder_name);
  return is_set_op(step.op) ? question : with_context(context, question);
}

}  // namespace lark
