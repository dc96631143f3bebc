#include "lark/batch.hpp"

#include <exception>
#include <omp.h>

#include "lark/prompts.hpp"

namespace lark {

namespace {

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

// Runs fn(i) for i in [0, n). Exceptions inside the parallel region are
// captured and the first one (lowest index) is rethrown after the loop.
template <typename Fn>
void for_each_index(std::size_t n, Execution exec, int threads, Fn&& fn) {
  if (exec == Execution::kSerial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8) num_threads(resolve_threads(threads))
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<GoldAnswers> ground_truth_batch(const KnowledgeGraph& kg, std::span<const QueryDag> queries,
                                            NegationSemantics semantics, Execution exec, int threads) {
  std::vector<GoldAnswers> out(queries.size());
  for_each_index(queries.size(), exec, threads, [&](std::size_t i) { out[i] = ground_truth(kg, queries[i], semantics); });
  return out;
}

std::vector<Neighborhood> retrieve_batch(const KnowledgeGraph& kg, std::span<const QueryDag> queries,
                                         const RetrievalConfig& cfg, const Tokenizer& tokenizer, Execution exec,
                                         int threads) {
  validate(cfg);
  // An out-of-process tokenizer serialises every call anyway.
  if (!tokenizer.additive()) exec = Execution::kSerial;
  std::vector<Neighborhood> out(queries.size());
  for_each_index(queries.size(), exec, threads,
                 [&](std::size_t i) { out[i] = retrieve_neighborhood(kg, queries[i], cfg, tokenizer); });
  return out;
}

std::vector<std::size_t> prompt_token_counts(std::span<const QueryDag> queries,
                                             std::span<const Neighborhood> neighborhoods,
                                             const Tokenizer& tokenizer, Execution exec, int threads) {
  if (!tokenizer.additive()) exec = Execution::kSerial;
  std::vector<std::size_t> out(queries.size());
  for_each_index(queries.size(), exec, threads, [&](std::size_t i) {
    const auto context = serialize_context(neighborhoods[i].triplets);
    out[i] = render_full_prompt(queries[i], context, tokenizer).token_count;
  });
  return out;
}

}  // namespace lark
