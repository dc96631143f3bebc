#include "lark/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "lark/batch.hpp"
#include "lark/metrics.hpp"
#include "lark/pipeline.hpp"
#include "lark/prompts.hpp"

namespace lark {

namespace {

namespace fs = std::filesystem;

// Writes to a file, or to the command's stdout for "-" or an empty path.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
      return;
    }
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw Error(ErrorKind::kIo, "cannot write " + path);
    stream_ = &file_;
  }
  std::ostream& operator*() { return *stream_; }
  void close(const std::string& path) {
    stream_->flush();
    if (!*stream_) throw Error(ErrorKind::kIo, "write failed for " + (path.empty() ? std::string("stdout") : path));
  }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

void write_file(const std::string& path, const std::function<void(std::ostream&)>& fill) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  fill(out);
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path);
}

// Option values shared by the subcommands; each subcommand binds the subset
// it understands.
struct Options {
  std::string kg_format = "abstract";
  std::string backend = "symbolic";
  std::string mode = "decomposed";
  std::string semantics = "template_other_relation";
  std::string rank_order = "emission";
  std::string out;
  std::string input;
  std::string type;
  std::string kind = "step";
  std::string results;
  bool unbounded = false;
  bool no_relation_filter = false;
  bool no_negation_relaxation = false;
  bool dump_context = false;
  std::string tokenizer_cmd;
  RunConfig run;
};

KgFormat parse_kg_format(const std::string& s) {
  if (s == "abstract") return KgFormat::kAbstract;
  if (s == "labels") return KgFormat::kLabels;
  throw Error(ErrorKind::kInvalidConfig, "kg-format must be abstract or labels, got " + s);
}

BackendKind parse_backend(const std::string& s) {
  if (s == "symbolic") return BackendKind::kSymbolic;
  if (s == "remote") return BackendKind::kRemote;
  if (s == "replay") return BackendKind::kReplay;
  throw Error(ErrorKind::kInvalidConfig, "backend must be symbolic, remote or replay, got " + s);
}

ExecutionMode parse_mode(const std::string& s) {
  if (s == "full") return ExecutionMode::kFull;
  if (s == "decomposed") return ExecutionMode::kDecomposed;
  throw Error(ErrorKind::kInvalidConfig, "mode must be full or decomposed, got " + s);
}

NegationSemantics parse_semantics(const std::string& s) {
  auto v = parse_negation_semantics(s);
  if (!v) throw Error(ErrorKind::kInvalidConfig, "unknown negation semantics " + s);
  return *v;
}

// Copies the string-typed choices into the typed run configuration.
void finalize(Options& o) {
  o.run.kg_format = parse_kg_format(o.kg_format);
  o.run.backend = parse_backend(o.backend);
  o.run.mode = parse_mode(o.mode);
  o.run.semantics = parse_semantics(o.semantics);
  if (o.unbounded) o.run.retrieval.token_limit = kUnboundedTokens;
  o.run.retrieval.relation_constrained_first_level = !o.no_relation_filter;
  o.run.retrieval.negation_relaxation = !o.no_negation_relaxation;
  validate(o.run.retrieval);
}

void add_graph(CLI::App* sub, Options& o) {
  sub->add_option("--kg", o.run.kg_path, "Triplet TSV file")->required();
  sub->add_option("--kg-format", o.kg_format, "abstract (e<i>/r<j> IDs) or labels")->capture_default_str();
}

void add_queries(CLI::App* sub, Options& o, bool required = true) {
  auto* opt = sub->add_option("--queries", o.run.queries_path, "Query JSONL file");
  if (required) opt->required();
}

void add_retrieval(CLI::App* sub, Options& o) {
  sub->add_option("--token-limit", o.run.retrieval.token_limit, "Context token budget")->capture_default_str();
  sub->add_flag("--unbounded", o.unbounded, "Ignore the token budget");
  sub->add_option("--depth-limit", o.run.retrieval.depth_limit, "Maximum hop depth (1-3)")->capture_default_str();
  sub->add_flag("--no-relation-filter", o.no_relation_filter, "Admit triplets of any relation while expanding");
  sub->add_flag("--no-negation-relaxation", o.no_negation_relaxation,
                "Keep the relation filter on negated atoms as well");
  sub->add_flag("--negate-every-branch", o.run.retrieval.negate_every_branch,
                "Negate every intersection branch of 2in/3in");
}

const Tokenizer& pick_tokenizer(const Options& o, std::unique_ptr<Tokenizer>& holder) {
  if (o.tokenizer_cmd.empty()) return default_tokenizer();
  holder = std::make_unique<CommandTokenizer>(o.tokenizer_cmd);
  return *holder;
}

// Query with canonical slots e1.., r1.. for template inspection.
QueryDag canonical_query(const std::string& tag) {
  auto type = parse_query_type(tag);
  if (!type) throw Error(ErrorKind::kUnknownType, "unknown query type " + tag);
  QueryDag q;
  q.id = tag;
  q.type = *type;
  const auto slots = slot_counts(*type);
  for (std::size_t i = 0; i < slots.anchors; ++i) q.anchors.push_back(EntityId{static_cast<std::uint32_t>(i + 1)});
  for (std::size_t i = 0; i < slots.relations; ++i)
    q.relations.push_back(RelationId{static_cast<std::uint32_t>(i + 1)});
  return q;
}

std::vector<QueryDag> queries_for(const Options& o) {
  if (!o.type.empty() && !o.run.queries_path.empty())
    throw Error(ErrorKind::kInvalidConfig, "give either --type or --queries, not both");
  if (!o.type.empty()) return {canonical_query(o.type)};
  if (o.run.queries_path.empty()) throw Error(ErrorKind::kInvalidConfig, "one of --type or --queries is required");
  return load_queries(o.run.queries_path);
}

std::map<std::string, std::vector<EntityId>> gold_map(std::span<const GoldAnswers> gold) {
  std::map<std::string, std::vector<EntityId>> out;
  for (const auto& g : gold) out[g.query_id] = g.answers;
  return out;
}

std::map<std::string, std::vector<EntityId>> load_gold_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  return read_gold(in).answers;
}

// ---- commands --------------------------------------------------------------

void cmd_abstract(const Options& o, std::ostream& out) {
  std::ifstream in(o.input, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + o.input);
  const auto loaded = load_triplets(in);
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + o.out + ": " + ec.message());
  const fs::path dir(o.out);
  write_file((dir / "graph.tsv").string(), [&](std::ostream& s) { write_abstract_triplets(s, loaded.file_order); });
  write_file((dir / "entities.tsv").string(), [&](std::ostream& s) { loaded.ids.write_entities(s); });
  write_file((dir / "relations.tsv").string(), [&](std::ostream& s) { loaded.ids.write_relations(s); });
  out << "triplets " << loaded.file_order.size() << "  entities " << loaded.ids.entity_count() << "  relations "
      << loaded.ids.relation_count() << '\n';
}

void cmd_gold(const Options& o, std::ostream& out) {
  const auto kg = load_graph(o.run.kg_path, o.run.kg_format);
  const auto queries = load_queries(o.run.queries_path);
  for (const auto& q : queries) validate_against(q, kg);
  const auto gold = ground_truth_batch(kg, queries, o.run.semantics, Execution::kParallel, o.run.parallelism);
  Output file(o.out, out);
  write_gold(*file, gold, o.run.semantics);
  file.close(o.out);
}

void cmd_retrieve(const Options& o, std::ostream& out) {
  std::unique_ptr<Tokenizer> holder;
  const auto& tokenizer = pick_tokenizer(o, holder);
  const auto kg = load_graph(o.run.kg_path, o.run.kg_format);
  const auto queries = load_queries(o.run.queries_path);
  for (const auto& q : queries) validate_against(q, kg);
  const auto nbs = retrieve_batch(kg, queries, o.run.retrieval, tokenizer, Execution::kParallel, o.run.parallelism);
  Output file(o.out, out);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    nlohmann::json rec = {{"id", queries[i].id},
                          {"token_count", nbs[i].token_count},
                          {"truncated", nbs[i].truncated},
                          {"triplet_count", nbs[i].triplets.size()}};
    if (o.dump_context) rec["context"] = serialize_context(nbs[i].triplets);
    *file << rec.dump() << '\n';
  }
  file.close(o.out);
}

void cmd_decompose(const Options& o, std::ostream& out) {
  const auto queries = queries_for(o);
  PlannerOptions popts{.negate_every_branch = o.run.retrieval.negate_every_branch};
  Output file(o.out, out);
  for (const auto& q : queries) {
    const auto records = plan_records(decompose(q, popts));
    if (!o.type.empty()) {
      for (const auto& r : records) *file << r.dump() << '\n';
    } else {
      *file << nlohmann::json{{"id", q.id}, {"type", to_string(q.type)}, {"steps", records}}.dump() << '\n';
    }
  }
  file.close(o.out);
}

// Context used when rendering canonical templates.
std::string canonical_context() {
  const std::vector<Triplet> t = {{EntityId{1}, RelationId{1}, EntityId{2}}, {EntityId{1}, RelationId{1}, EntityId{3}}};
  return serialize_context(t);
}

std::vector<std::string> rendered(const QueryDag& q, const std::string& context, const Options& o) {
  if (o.kind == "full") return {render_full_prompt(q, context).text};
  PlannerOptions popts{.negate_every_branch = o.run.retrieval.negate_every_branch};
  std::vector<std::string> out;
  for (const auto& step : decompose(q, popts).steps) out.push_back(render_step_template(step, context));
  return out;
}

void cmd_render(const Options& o, std::ostream& out) {
  if (o.kind != "full" && o.kind != "step")
    throw Error(ErrorKind::kInvalidConfig, "kind must be full or step, got " + o.kind);
  Output file(o.out, out);
  if (!o.type.empty()) {
    if (!o.run.queries_path.empty()) throw Error(ErrorKind::kInvalidConfig, "give either --type or --queries, not both");
    const auto prompts = rendered(canonical_query(o.type), canonical_context(), o);
    for (std::size_t i = 0; i < prompts.size(); ++i) *file << (i ? "\n---\n" : "") << prompts[i];
    *file << '\n';
  } else {
    if (o.run.queries_path.empty() || o.run.kg_path.empty())
      throw Error(ErrorKind::kInvalidConfig, "render needs --type, or --kg with --queries");
    std::unique_ptr<Tokenizer> holder;
    const auto& tokenizer = pick_tokenizer(o, holder);
    const auto kg = load_graph(o.run.kg_path, o.run.kg_format);
    const auto queries = load_queries(o.run.queries_path);
    for (const auto& q : queries) validate_against(q, kg);
    const auto nbs = retrieve_batch(kg, queries, o.run.retrieval, tokenizer, Execution::kParallel, o.run.parallelism);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto context = serialize_context(nbs[i].triplets);
      *file << nlohmann::json{{"id", queries[i].id}, {"kind", o.kind}, {"prompts", rendered(queries[i], context, o)}}.dump()
            << '\n';
    }
  }
  file.close(o.out);
}

void cmd_run(Options& o, std::ostream& out) {
  auto& cfg = o.run;
  if (cfg.results_path.empty()) throw Error(ErrorKind::kInvalidConfig, "--results is required");
  validate(cfg);
  std::unique_ptr<Tokenizer> holder;
  const auto& tokenizer = pick_tokenizer(o, holder);
  const auto kg = load_graph(cfg.kg_path, cfg.kg_format);
  const auto queries = load_queries(cfg.queries_path);
  for (const auto& q : queries) validate_against(q, kg);

  std::optional<std::map<std::string, std::vector<EntityId>>> gold;
  if (!cfg.gold_path.empty()) {
    gold = load_gold_map(cfg.gold_path);
  } else {
    gold = gold_map(ground_truth_batch(kg, queries, cfg.semantics, Execution::kParallel, cfg.parallelism));
  }

  auto backend = make_backend(cfg);
  const auto result = run_pipeline(kg, queries, cfg, *backend, tokenizer, &*gold, !cfg.record_trace_path.empty());

  write_file(cfg.results_path, [&](std::ostream& s) { write_results(s, result.records, cfg.timing); });
  if (!cfg.record_trace_path.empty())
    write_file(cfg.record_trace_path, [&](std::ostream& s) { write_trace(s, result.trace); });
  if (!cfg.metrics_path.empty()) {
    const auto report = evaluate(result.records, *gold);
    write_file(cfg.metrics_path, [&](std::ostream& s) { s << to_json(report).dump(2) << '\n'; });
  }
  out << format_summary(result.summary) << '\n';
}

void cmd_eval(const Options& o, std::ostream& out) {
  std::ifstream in(o.results, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + o.results);
  const auto records = read_results(in);
  if (o.run.gold_path.empty()) throw Error(ErrorKind::kInvalidConfig, "--gold is required");
  const auto gold = load_gold_map(o.run.gold_path);
  RankOrder order;
  if (o.rank_order == "emission") {
    order = RankOrder::kEmission;
  } else if (o.rank_order == "sorted") {
    order = RankOrder::kSortedId;
  } else {
    throw Error(ErrorKind::kInvalidConfig, "rank-order must be emission or sorted, got " + o.rank_order);
  }
  const auto report = evaluate(records, gold, order);
  out << format_report(report);
  if (!o.out.empty()) write_file(o.out, [&](std::ostream& s) { s << to_json(report).dump(2) << '\n'; });
}

void cmd_stats(const Options& o, std::ostream& out) {
  std::unique_ptr<Tokenizer> holder;
  const auto& tokenizer = pick_tokenizer(o, holder);
  const auto kg = load_graph(o.run.kg_path, o.run.kg_format);
  const auto queries = load_queries(o.run.queries_path);
  for (const auto& q : queries) validate_against(q, kg);
  // The limit only scores coverage; lengths are measured on whole neighborhoods.
  auto retrieval = o.run.retrieval;
  retrieval.token_limit = kUnboundedTokens;
  const auto nbs = retrieve_batch(kg, queries, retrieval, tokenizer, Execution::kParallel, o.run.parallelism);
  const auto counts = prompt_token_counts(queries, nbs, tokenizer, Execution::kParallel, o.run.parallelism);

  std::map<QueryType, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < queries.size(); ++i) buckets[queries[i].type].push_back(counts[i]);
  if (buckets.empty()) throw Error(ErrorKind::kEmptyBucket, "no queries to summarise");
  std::map<QueryType, TokenStats> stats;
  for (const auto& [type, c] : buckets) stats[type] = token_stats(c, o.run.retrieval.token_limit);
  out << format_token_report(stats);
  if (!o.out.empty()) write_file(o.out, [&](std::ostream& s) { s << to_json(stats).dump(2) << '\n'; });
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedLine:
    case ErrorKind::kEmptyGraph:
    case ErrorKind::kUnknownId:
    case ErrorKind::kUnknownType:
    case ErrorKind::kSlotMismatch:
    case ErrorKind::kInvalidConfig:
    case ErrorKind::kParse:
    case ErrorKind::kMissingGold:
      return 1;
    case ErrorKind::kIo:
    case ErrorKind::kBackendFailure:
    case ErrorKind::kMissingTrace:
    case ErrorKind::kMissingPlaceholder:
    case ErrorKind::kCyclicDependency:
    case ErrorKind::kEmptyBucket:
      return 2;
  }
  return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-graph logical query pipeline", "lark"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file; command-line flags take precedence");
  Options o;
  app.add_option("--tokenizer-cmd", o.tokenizer_cmd,
                 "Command that counts tokens (one JSON string per input line, one count per output line)");
  app.add_option("--threads", o.run.parallelism, "Worker threads and concurrent backend requests")
      ->capture_default_str();

  auto* abstract = app.add_subcommand("abstract", "Replace labels with e<i>/r<j> IDs");
  abstract->add_option("input", o.input, "Labelled triplet TSV")->required();
  abstract->add_option("--out", o.out, "Output directory")->required();

  auto* gold = app.add_subcommand("gold", "Exact answers over the whole graph");
  add_graph(gold, o);
  add_queries(gold, o);
  gold->add_option("--semantics", o.semantics, "template_other_relation or fol_complement")->capture_default_str();
  gold->add_option("--out", o.out, "Gold JSONL (stdout when omitted)");

  auto* retrieve = app.add_subcommand("retrieve", "Budgeted neighborhood of each query");
  add_graph(retrieve, o);
  add_queries(retrieve, o);
  add_retrieval(retrieve, o);
  retrieve->add_flag("--dump-context", o.dump_context, "Include the serialized context");
  retrieve->add_option("--out", o.out, "Output JSONL (stdout when omitted)");

  auto* decompose_cmd = app.add_subcommand("decompose", "Elementary-step plan of a query type or query file");
  decompose_cmd->add_option("--type", o.type, "Query type tag with canonical slots e1.., r1..");
  add_queries(decompose_cmd, o, false);
  decompose_cmd->add_flag("--negate-every-branch", o.run.retrieval.negate_every_branch,
                          "Negate every intersection branch of 2in/3in");
  decompose_cmd->add_option("--out", o.out, "Output JSONL (stdout when omitted)");

  auto* render = app.add_subcommand("render", "Print prompts");
  render->add_option("--type", o.type, "Query type tag with canonical slots and context");
  render->add_option("--kind", o.kind, "full or step")->capture_default_str();
  render->add_option("--kg", o.run.kg_path, "Triplet TSV file");
  render->add_option("--kg-format", o.kg_format, "abstract or labels")->capture_default_str();
  add_queries(render, o, false);
  add_retrieval(render, o);
  render->add_option("--out", o.out, "Output file (stdout when omitted)");

  auto* run = app.add_subcommand("run", "Retrieve, execute and check every query");
  add_graph(run, o);
  add_queries(run, o);
  add_retrieval(run, o);
  run->add_option("--gold", o.run.gold_path, "Gold JSONL; computed from the graph when omitted");
  run->add_option("--backend", o.backend, "symbolic, remote or replay")->capture_default_str();
  run->add_option("--mode", o.mode, "full or decomposed")->capture_default_str();
  run->add_option("--semantics", o.semantics, "Negation semantics of computed gold")->capture_default_str();
  run->add_option("--batch-limit", o.run.batch_limit, "Requests per backend call (0: backend limit)");
  run->add_option("--endpoint", o.run.remote.endpoint, "Chat-completions URL (remote)");
  run->add_option("--model", o.run.remote.model, "Model name (remote)");
  run->add_option("--temperature", o.run.remote.temperature, "Sampling temperature (remote)")->capture_default_str();
  run->add_option("--max-tokens", o.run.remote.max_tokens, "Reply token cap (remote)")->capture_default_str();
  run->add_option("--trace", o.run.trace_path, "Trace JSONL to answer from (replay)");
  run->add_option("--record-trace", o.run.record_trace_path, "Write every backend exchange here");
  run->add_option("--results", o.run.results_path, "Results JSONL")->required();
  run->add_option("--metrics-out", o.run.metrics_path, "Metrics JSON");
  run->add_option("--seed", o.run.seed, "Run seed")->capture_default_str();
  run->add_flag("--timing", o.run.timing, "Record per-phase wall time in results");

  auto* eval = app.add_subcommand("eval", "MRR and HITS@1/3/10 per query type");
  eval->add_option("--results", o.results, "Results JSONL")->required();
  eval->add_option("--gold", o.run.gold_path, "Gold JSONL")->required();
  eval->add_option("--rank-order", o.rank_order, "emission or sorted")->capture_default_str();
  eval->add_option("--out", o.out, "Metrics JSON");

  auto* stats = app.add_subcommand("stats", "Prompt token distribution per query type");
  add_graph(stats, o);
  add_queries(stats, o);
  add_retrieval(stats, o);
  stats->add_option("--out", o.out, "Statistics JSON");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("lark");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    finalize(o);
    if (*abstract) cmd_abstract(o, out);
    if (*gold) cmd_gold(o, out);
    if (*retrieve) cmd_retrieve(o, out);
    if (*decompose_cmd) cmd_decompose(o, out);
    if (*render) cmd_render(o, out);
    if (*run) cmd_run(o, out);
    if (*eval) cmd_eval(o, out);
    if (*stats) cmd_stats(o, out);
  } catch (const Error& e) {
    err << "lark: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "lark: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace lark
