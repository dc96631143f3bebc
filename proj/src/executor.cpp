#include "lark/executor.hpp"

#include <algorithm>
#include <chrono>

#include "lark/error.hpp"
#include "lark/prompts.hpp"

namespace lark {

namespace {

using Clock = std::chrono::steady_clock;

struct PendingStep {
  std::size_t job;
  int step;
};

struct Job {
  const QueryDag* query;
  const Neighborhood* neighborhood;
  DecompositionPlan plan;
  std::string context;
  AnswerCache cache;
  RunRecord record;
};

void check_lengths(std::span<const QueryDag> queries, std::span<const Neighborhood> neighborhoods) {
  if (queries.size() != neighborhoods.size()) {
    throw Error(ErrorKind::kInvalidConfig, "executor needs one neighborhood per query");
  }
}

RunRecord start_record(const QueryDag& q, const Neighborhood& nb, ExecutionMode mode) {
  RunRecord r;
  r.query_id = q.id;
  r.type = q.type;
  r.mode = mode;
  r.truncated = nb.truncated;
  r.context_tokens = nb.token_count;
  return r;
}

// Sends requests in backend-sized chunks and returns replies in order.
std::vector<BackendReply> submit(Backend& backend, std::span<const BackendRequest> requests, std::size_t limit) {
  const std::size_t width = std::max<std::size_t>(1, limit == 0 ? backend.max_batch() : std::min(limit, backend.max_batch()));
  std::vector<BackendReply> replies;
  replies.reserve(requests.size());
  for (std::size_t start = 0; start < requests.size(); start += width) {
    auto chunk = requests.subspan(start, std::min(width, requests.size() - start));
    auto got = backend.answer(chunk);
    if (got.size() != chunk.size()) {
      throw Error(ErrorKind::kBackendFailure, "backend returned " + std::to_string(got.size()) + " replies for " +
                                                  std::to_string(chunk.size()) + " requests");
    }
    std::move(got.begin(), got.end(), std::back_inserter(replies));
  }
  return replies;
}

// Parses a reply into the record; returns the entities to cache.
std::vector<EntityId> absorb(RunRecord& record, int step, std::string prompt, const BackendReply& reply) {
  record.steps.push_back(step);
  record.prompts.push_back(std::move(prompt));
  record.raw_responses.push_back(reply.text);
  std::vector<EntityId> ids;
  if (reply.failed) {
    record.degraded = true;
    record.failures.push_back("step " + std::to_string(step) + ": " + reply.error);
  } else {
    ids = parse_answer(reply.text);
    if (is_unreadable_answer(reply.text)) {
      record.degraded = true;
      record.failures.push_back("step " + std::to_string(step) + ": no entity IDs in response");
    }
  }
  record.parsed.push_back(ids);
  return ids;
}

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<RunRecord> run_jobs(std::vector<Job>& jobs, Backend& backend, const ExecutorConfig& cfg,
                                const Tokenizer& tokenizer) {
  std::size_t phase_count = 0;
  for (const auto& job : jobs) phase_count = std::max(phase_count, job.plan.phases.size());

  for (std::size_t phase = 0; phase < phase_count; ++phase) {
    const auto started = Clock::now();
    std::vector<PendingStep> pending;
    std::vector<BackendRequest> requests;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      auto& job = jobs[j];
      if (phase >= job.plan.phases.size()) continue;
      for (int index : job.plan.phases[phase]) {
        const ElementaryStep& step = job.plan.step(index);
        PromptText prompt = render_step_prompt(step, job.context, job.cache, job.query->id, tokenizer);
        StepTask task{step, {}};
        for (int in : step.inputs) task.inputs.push_back(job.cache.read(in));
        requests.push_back({job.query->id, std::move(prompt.text), job.neighborhood->triplets, std::move(task)});
        pending.push_back({j, index});
      }
    }
    auto replies = submit(backend, requests, cfg.batch_limit);
    // Cache writes happen only after the whole phase has been answered.
    for (std::size_t i = 0; i < pending.size(); ++i) {
      auto& job = jobs[pending[i].job];
      auto ids = absorb(job.record, pending[i].step, std::move(requests[i].prompt), replies[i]);
      job.cache.write(pending[i].step, std::move(ids));
    }
    const double ms = elapsed_ms(started);
    for (auto& job : jobs) {
      if (phase < job.plan.phases.size()) job.record.phase_ms.push_back(ms);
    }
  }

  std::vector<RunRecord> out;
  out.reserve(jobs.size());
  for (auto& job : jobs) {
    job.record.final_answers = job.cache.read(job.plan.final_slot);
    out.push_back(std::move(job.record));
  }
  return out;
}

}  // namespace

std::string_view to_string(ExecutionMode mode) { return mode == ExecutionMode::kFull ? "full" : "decomposed"; }

std::vector<RunRecord> execute_decomposed_batch(std::span<const QueryDag> queries,
                                                std::span<const Neighborhood> neighborhoods, Backend& backend,
                                                const ExecutorConfig& cfg, const Tokenizer& tokenizer) {
  check_lengths(queries, neighborhoods);
  std::vector<Job> jobs;
  jobs.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    jobs.push_back({&queries[i], &neighborhoods[i], decompose(queries[i], cfg.planner),
                    serialize_context(neighborhoods[i].triplets), {},
                    start_record(queries[i], neighborhoods[i], ExecutionMode::kDecomposed)});
  }
  return run_jobs(jobs, backend, cfg, tokenizer);
}

RunRecord execute_decomposed(const QueryDag& q, const DecompositionPlan& plan, const Neighborhood& nb,
                             Backend& backend, const ExecutorConfig& cfg, const Tokenizer& tokenizer) {
  std::vector<Job> jobs;
  jobs.push_back({&q, &nb, plan, serialize_context(nb.triplets), {}, start_record(q, nb, ExecutionMode::kDecomposed)});
  return std::move(run_jobs(jobs, backend, cfg, tokenizer).front());
}

std::vector<RunRecord> execute_full_batch(std::span<const QueryDag> queries,
                                          std::span<const Neighborhood> neighborhoods, Backend& backend,
                                          const ExecutorConfig& cfg, const Tokenizer& tokenizer) {
  check_lengths(queries, neighborhoods);
  const auto started = Clock::now();
  std::vector<BackendRequest> requests;
  requests.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    PromptText prompt = render_full_prompt(queries[i], serialize_context(neighborhoods[i].triplets), tokenizer);
    requests.push_back({queries[i].id, std::move(prompt.text), neighborhoods[i].triplets, FullTask{queries[i]}});
  }
  auto replies = submit(backend, requests, cfg.batch_limit);
  const double ms = elapsed_ms(started);

  std::vector<RunRecord> out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    RunRecord r = start_record(queries[i], neighborhoods[i], ExecutionMode::kFull);
    r.final_answers = absorb(r, 0, std::move(requests[i].prompt), replies[i]);
    r.phase_ms.push_back(ms);
    out.push_back(std::move(r));
  }
  return out;
}

RunRecord execute_full(const QueryDag& q, const Neighborhood& nb, Backend& backend, const ExecutorConfig& cfg,
                       const Tokenizer& tokenizer) {
  return std::move(execute_full_batch(std::span(&q, 1), std::span(&nb, 1), backend, cfg, tokenizer).front());
}

namespace {

nlohmann::json id_list(const std::vector<EntityId>& ids) {
  nlohmann::json out = nlohmann::json::array();
  for (auto e : ids) out.push_back(to_string(e));
  return out;
}

std::vector<EntityId> parse_id_list(const nlohmann::json& j) {
  std::vector<EntityId> out;
  for (const auto& v : j) {
    auto id = parse_entity_id(v.get<std::string>());
    if (!id) throw Error(ErrorKind::kParse, "bad entity id '" + v.get<std::string>() + "' in results");
    out.push_back(*id);
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const RunRecord& r, bool include_timing) {
  nlohmann::json parsed = nlohmann::json::array();
  for (const auto& p : r.parsed) parsed.push_back(id_list(p));
  nlohmann::json j = {
      {"id", r.query_id},
      {"type", to_string(r.type)},
      {"mode", to_string(r.mode)},
      {"steps", r.steps},
      {"prompts", r.prompts},
      {"raw_responses", r.raw_responses},
      {"parsed", parsed},
      {"final_answers", id_list(r.final_answers)},
      {"truncated", r.truncated},
      {"degraded", r.degraded},
      {"failures", r.failures},
      {"context_tokens", r.context_tokens},
  };
  if (include_timing) j["phase_ms"] = r.phase_ms;
  return j;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
  try {
    RunRecord r;
    r.query_id = j.at("id").get<std::string>();
    auto type = parse_query_type(j.at("type").get<std::string>());
    if (!type) throw Error(ErrorKind::kUnknownType, "results record " + r.query_id + ": unknown type");
    r.type = *type;
    r.mode = j.at("mode").get<std::string>() == "full" ? ExecutionMode::kFull : ExecutionMode::kDecomposed;
    r.steps = j.value("steps", std::vector<int>{});
    r.prompts = j.value("prompts", std::vector<std::string>{});
    r.raw_responses = j.value("raw_responses", std::vector<std::string>{});
    if (j.contains("parsed")) {
      for (const auto& p : j.at("parsed")) r.parsed.push_back(parse_id_list(p));
    }
    r.final_answers = parse_id_list(j.at("final_answers"));
    r.truncated = j.value("truncated", false);
    r.degraded = j.value("degraded", false);
    r.failures = j.value("failures", std::vector<std::string>{});
    r.context_tokens = j.value("context_tokens", std::size_t{0});
    r.phase_ms = j.value("phase_ms", std::vector<double>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("results record: ") + e.what());
  }
}

}  // namespace lark
