#include "lark/backend.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "lark/error.hpp"
#include "lark/prompts.hpp"

namespace lark {

namespace {

void sort_unique(std::vector<EntityId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Tails of context triplets leaving `sources` (sorted), with relation == r
// when `negated` is false and != r otherwise.
std::vector<EntityId> project(std::span<const EntityId> sources, RelationId r, bool negated,
                              std::span<const Triplet> context) {
  std::vector<EntityId> out;
  for (const auto& t : context) {
    if ((t.relation == r) == negated) continue;
    if (std::binary_search(sources.begin(), sources.end(), t.head)) out.push_back(t.tail);
  }
  sort_unique(out);
  return out;
}

std::vector<EntityId> sorted_copy(const std::vector<EntityId>& v) {
  std::vector<EntityId> out = v;
  sort_unique(out);
  return out;
}

}  // namespace

std::vector<EntityId> symbolic_answer(const ElementaryStep& step, std::span<const std::vector<EntityId>> inputs,
                                      std::span<const Triplet> context) {
  switch (step.op) {
    case StepOp::kProject:
    case StepOp::kProjectNegated: {
      const EntityId source[] = {step.anchor.value()};
      return project(source, step.relation.value(), step.op == StepOp::kProjectNegated, context);
    }
    case StepOp::kProjectFromPlaceholder:
    case StepOp::kProjectNegatedFromPlaceholder: {
      auto sources = sorted_copy(inputs[0]);
      return project(sources, step.relation.value(), step.op == StepOp::kProjectNegatedFromPlaceholder, context);
    }
    case StepOp::kIntersect: {
      auto acc = sorted_copy(inputs[0]);
      for (std::size_t i = 1; i < inputs.size(); ++i) {
        auto next = sorted_copy(inputs[i]);
        std::vector<EntityId> both;
        std::set_intersection(acc.begin(), acc.end(), next.begin(), next.end(), std::back_inserter(both));
        acc = std::move(both);
      }
      return acc;
    }
    case StepOp::kUnion: {
      std::vector<EntityId> acc;
      for (const auto& in : inputs) acc.insert(acc.end(), in.begin(), in.end());
      sort_unique(acc);
      return acc;
    }
  }
  return {};
}

std::vector<EntityId> symbolic_full_answer(const QueryDag& q, std::span<const Triplet> context) {
  const DecompositionPlan plan = decompose(q);
  AnswerCache cache;
  for (const auto& phase : plan.phases) {
    for (int index : phase) {
      const auto& step = plan.step(index);
      std::vector<std::vector<EntityId>> inputs;
      for (int in : step.inputs) inputs.push_back(cache.read(in));
      cache.write(index, symbolic_answer(step, inputs, context));
    }
  }
  return cache.read(plan.final_slot);
}

std::vector<EntityId> parse_answer(std::string_view text) {
  std::vector<EntityId> out;
  auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != 'e' || (i > 0 && word(text[i - 1]))) continue;
    std::size_t j = i + 1;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i + 1 || (j < text.size() && word(text[j]))) continue;
    // Free text is read leniently: "e07" names e7.
    std::uint32_t v = 0;
    const auto [end, ec] = std::from_chars(text.data() + i + 1, text.data() + j, v);
    if (ec == std::errc{} && end == text.data() + j) {
      const EntityId id{v};
      if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    i = j - 1;
  }
  return out;
}

bool is_unreadable_answer(std::string_view text) {
  if (!parse_answer(text).empty()) return false;
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower.find("none") == std::string::npos;
}

std::vector<BackendReply> SymbolicBackend::answer(std::span<const BackendRequest> requests) {
  std::vector<BackendReply> replies(requests.size());
  const auto n = static_cast<std::ptrdiff_t>(requests.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads_) if (threads_ > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& req = requests[static_cast<std::size_t>(i)];
    std::vector<EntityId> ids;
    if (const auto* step = std::get_if<StepTask>(&req.task)) {
      ids = symbolic_answer(step->step, step->inputs, req.context);
    } else {
      ids = symbolic_full_answer(std::get<FullTask>(req.task).query, req.context);
    }
    replies[static_cast<std::size_t>(i)].text = format_entity_list(ids);
  }
  return replies;
}

std::string content_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<TraceEntry> read_trace(std::istream& in) {
  std::vector<TraceEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("hash").get<std::string>(), j.at("prompt").get<std::string>(),
                     j.at("response").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, "trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (out.back().hash != content_hash(out.back().prompt)) {
      throw Error(ErrorKind::kParse, "trace line " + std::to_string(line_no) + ": hash does not match prompt");
    }
  }
  return out;
}

void write_trace(std::ostream& out, std::span<const TraceEntry> entries) {
  for (const auto& e : entries) {
    out << nlohmann::json{{"hash", e.hash}, {"prompt", e.prompt}, {"response", e.response}}.dump() << '\n';
  }
}

ReplayBackend::ReplayBackend(std::span<const TraceEntry> entries) {
  for (const auto& e : entries) entries_.insert_or_assign(e.hash, e);
}

std::vector<BackendReply> ReplayBackend::answer(std::span<const BackendRequest> requests) {
  std::vector<BackendReply> replies;
  replies.reserve(requests.size());
  for (const auto& req : requests) {
    const std::string hash = content_hash(req.prompt);
    auto it = entries_.find(hash);
    if (it == entries_.end() || it->second.prompt != req.prompt) {
      throw Error(ErrorKind::kMissingTrace, "no trace entry for prompt hash " + hash + " (query " + req.query_id + ")");
    }
    replies.push_back({it->second.response, false, {}});
  }
  return replies;
}

std::vector<BackendReply> RecordingBackend::answer(std::span<const BackendRequest> requests) {
  auto replies = inner_.answer(requests);
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (replies[i].failed) continue;
    std::string hash = content_hash(requests[i].prompt);
    entries_.insert_or_assign(hash, TraceEntry{hash, requests[i].prompt, replies[i].text});
  }
  return replies;
}

std::vector<TraceEntry> RecordingBackend::entries() const {
  std::lock_guard lock(mutex_);
  std::vector<TraceEntry> out;
  for (const auto& [hash, e] : entries_) out.push_back(e);
  return out;
}

}  // namespace lark
