#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lark/ids.hpp"
#include "lark/planner.hpp"
#include "lark/query.hpp"
#include "lark/tokenizer.hpp"

namespace lark {

enum class PromptKind { kFull, kStep };

struct PromptText {
  std::string text;
  std::size_t token_count = 0;
  PromptKind kind = PromptKind::kFull;
  std::string query_id;
  std::optional<int> step_index;
};

/// Per-query answer cache: placeholder slot -> entity list. Each slot is
/// written once; reading an unwritten slot throws MissingPlaceholder.
class AnswerCache {
 public:
  void write(int slot, std::vector<EntityId> answers);
  bool has(int slot) const { return slots_.contains(slot); }
  const std::vector<EntityId>& read(int slot) const;
  std::size_t size() const { return slots_.size(); }

 private:
  std::map<int, std::vector<EntityId>> slots_;
};

/// Ascending IDs joined by ", "; an empty list renders as "none".
std::string format_entity_list(std::span<const EntityId> ids);

/// Question text of the full (single-prompt) form of a query.
std::string full_question(const QueryDag& q);

/// Question text of one step; `placeholder` renders each consumed slot.
std::string step_question(const ElementaryStep& step, const std::function<std::string(int)>& placeholder);

/// Context, a blank line, then the full question.
PromptText render_full_prompt(const QueryDag& q, std::string_view context,
                              const Tokenizer& tokenizer = default_tokenizer());

/// Step question with each [PPi] replaced by the cached answers. Projection
/// steps are prefixed by the context and a blank line; intersection and
/// union steps carry only the question.
PromptText render_step_prompt(const ElementaryStep& step, std::string_view context, const AnswerCache& cache,
                              std::string_view query_id = {}, const Tokenizer& tokenizer = default_tokenizer());

/// Step prompt with the placeholders left as literal [PPi] markers.
std::string render_step_template(const ElementaryStep& step, std::string_view context);

}  // namespace lark
