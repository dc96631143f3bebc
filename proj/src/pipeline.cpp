#include "lark/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "lark/batch.hpp"
#include "lark/error.hpp"

namespace lark {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  return in;
}

std::vector<EntityId> sorted_copy(std::vector<EntityId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kSymbolic:
      return "symbolic";
    case BackendKind::kRemote:
      return "remote";
    case BackendKind::kReplay:
      return "replay";
  }
  return "?";
}

void validate(const RunConfig& cfg) {
  validate(cfg.retrieval);
  if (cfg.kg_path.empty()) throw Error(ErrorKind::kInvalidConfig, "kg path is required");
  if (cfg.queries_path.empty()) throw Error(ErrorKind::kInvalidConfig, "queries path is required");
  if (cfg.parallelism < 1) throw Error(ErrorKind::kInvalidConfig, "parallelism must be >= 1");
  const bool remote_fields = !cfg.remote.endpoint.empty() || !cfg.remote.model.empty();
  if (cfg.backend == BackendKind::kRemote) {
    if (cfg.remote.endpoint.empty() || cfg.remote.model.empty())
      throw Error(ErrorKind::kInvalidConfig, "backend=remote requires endpoint and model");
    if (cfg.remote.max_tokens < 1) throw Error(ErrorKind::kInvalidConfig, "max_tokens must be >= 1");
    if (cfg.remote.attempts < 1) throw Error(ErrorKind::kInvalidConfig, "attempts must be >= 1");
  } else if (remote_fields) {
    throw Error(ErrorKind::kInvalidConfig, "endpoint/model are only valid with backend=remote");
  }
  if (cfg.backend == BackendKind::kReplay && cfg.trace_path.empty())
    throw Error(ErrorKind::kInvalidConfig, "backend=replay requires a trace path");
}

KnowledgeGraph load_graph(const std::string& path, KgFormat format) {
  auto in = open_input(path);
  if (format == KgFormat::kAbstract) return load_abstract_triplets(in);
  return std::move(load_triplets(in).graph);
}

std::vector<QueryDag> load_queries(const std::string& path) {
  auto in = open_input(path);
  return read_queries(in);
}

std::unique_ptr<Backend> make_backend(const RunConfig& cfg) {
  switch (cfg.backend) {
    case BackendKind::kSymbolic:
      return std::make_unique<SymbolicBackend>(cfg.parallelism);
    case BackendKind::kRemote: {
      RemoteConfig remote = cfg.remote;
      remote.parallelism = cfg.parallelism;
      if (remote.api_key.empty()) remote.api_key = api_key_from_env();
      return std::make_unique<RemoteBackend>(std::move(remote));
    }
    case BackendKind::kReplay: {
      auto in = open_input(cfg.trace_path);
      auto entries = read_trace(in);
      return std::make_unique<ReplayBackend>(entries);
    }
  }
  throw Error(ErrorKind::kInvalidConfig, "unknown backend");
}

RunOutput run_pipeline(const KnowledgeGraph& kg, std::span<const QueryDag> queries, const RunConfig& cfg,
                       Backend& backend, const Tokenizer& tokenizer,
                       const std::map<std::string, std::vector<EntityId>>* gold, bool record) {
  for (const auto& q : queries) validate_against(q, kg);

  RetrievalConfig rcfg = cfg.retrieval;
  const auto neighborhoods = retrieve_batch(kg, queries, rcfg, tokenizer, Execution::kParallel, cfg.parallelism);

  ExecutorConfig ecfg;
  ecfg.planner.negate_every_branch = cfg.retrieval.negate_every_branch;
  ecfg.batch_limit = cfg.batch_limit;

  RunOutput out;
  std::optional<RecordingBackend> recorder;
  Backend* active = &backend;
  if (record) active = &recorder.emplace(backend);

  out.records = cfg.mode == ExecutionMode::kFull
                    ? execute_full_batch(queries, neighborhoods, *active, ecfg, tokenizer)
                    : execute_decomposed_batch(queries, neighborhoods, *active, ecfg, tokenizer);
  if (recorder) out.trace = recorder->entries();

  std::vector<GoldAnswers> computed;
  if (gold == nullptr)
    computed = ground_truth_batch(kg, queries, cfg.semantics, Execution::kParallel, cfg.parallelism);

  auto& s = out.summary;
  s.queries = out.records.size();
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const auto& r = out.records[i];
    if (r.degraded) ++s.degraded;
    const std::vector<EntityId>* expected = nullptr;
    if (gold != nullptr) {
      auto it = gold->find(r.query_id);
      if (it == gold->end()) throw Error(ErrorKind::kMissingGold, "no gold answers for " + r.query_id);
      expected = &it->second;
    } else {
      expected = &computed[i].answers;
    }
    if (sorted_copy(r.final_answers) == sorted_copy(*expected)) ++s.oracle_matches;
  }
  s.oracle_match_percent =
      s.queries == 0 ? 100.0 : 100.0 * static_cast<double>(s.oracle_matches) / static_cast<double>(s.queries);
  return out;
}

void write_results(std::ostream& out, std::span<const RunRecord> records, bool include_timing) {
  for (const auto& r : records) out << to_json(r, include_timing).dump() << '\n';
}

std::vector<RunRecord> read_results(std::istream& in) {
  std::vector<RunRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, "results line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(run_record_from_json(j));
  }
  return out;
}

std::string format_summary(const RunSummary& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "queries %zu  degraded %zu  oracle-match %zu/%zu (%.1f%%)", s.queries, s.degraded,
                s.oracle_matches, s.queries, s.oracle_match_percent);
  return buf;
}

}  // namespace lark
