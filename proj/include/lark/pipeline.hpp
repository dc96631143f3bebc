#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lark/backend.hpp"
#include "lark/executor.hpp"
#include "lark/ground_truth.hpp"
#include "lark/kg_store.hpp"
#include "lark/query.hpp"
#include "lark/retrieval.hpp"

namespace lark {

enum class KgFormat { kLabels, kAbstract };
enum class BackendKind { kSymbolic, kRemote, kReplay };

std::string_view to_string(BackendKind kind);

struct RunConfig {
  std::string kg_path;
  KgFormat kg_format = KgFormat::kAbstract;
  std::string queries_path;
  std::string gold_path;  // optional; gold is computed from the graph when empty
  BackendKind backend = BackendKind::kSymbolic;
  ExecutionMode mode = ExecutionMode::kDecomposed;
  RetrievalConfig retrieval;
  int parallelism = 1;
  std::size_t batch_limit = 0;
  RemoteConfig remote;
  std::string trace_path;         // input of the replay backend
  std::string record_trace_path;  // when set, every backend exchange is written here
  NegationSemantics semantics = NegationSemantics::kTemplateOtherRelation;
  std::string results_path;
  std::string metrics_path;
  std::uint64_t seed = 0;  // recorded in the summary; no stage draws random numbers
  bool timing = false;
};

/// Throws InvalidConfig for out-of-range limits, missing inputs, or remote
/// fields that are absent with backend=remote (or present without it).
void validate(const RunConfig& cfg);

/// Loads a triplet file in either format; labels are abstracted on load.
KnowledgeGraph load_graph(const std::string& path, KgFormat format);
std::vector<QueryDag> load_queries(const std::string& path);

std::unique_ptr<Backend> make_backend(const RunConfig& cfg);

struct RunSummary {
  std::size_t queries = 0;
  std::size_t degraded = 0;
  std::size_t oracle_matches = 0;  // final answers equal to gold as sets
  double oracle_match_percent = 0;
};

struct RunOutput {
  std::vector<RunRecord> records;
  RunSummary summary;
  std::vector<TraceEntry> trace;  // filled when the run recorded one
};

/// Retrieval, execution and oracle comparison for a query list. Queries are
/// validated against the graph first; gold comes from `gold` when given.
RunOutput run_pipeline(const KnowledgeGraph& kg, std::span<const QueryDag> queries, const RunConfig& cfg,
                       Backend& backend, const Tokenizer& tokenizer = default_tokenizer(),
                       const std::map<std::string, std::vector<EntityId>>* gold = nullptr, bool record = false);

void write_results(std::ostream& out, std::span<const RunRecord> records, bool include_timing);
std::vector<RunRecord> read_results(std::istream& in);

std::string format_summary(const RunSummary& s);

}  // namespace lark
