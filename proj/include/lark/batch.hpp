#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lark/ground_truth.hpp"
#include "lark/kg_store.hpp"
#include "lark/query.hpp"
#include "lark/retrieval.hpp"
#include "lark/tokenizer.hpp"

namespace lark {

// Serial paths are the reference the parallel paths are tested against;
// both return results in query order.
enum class Execution { kSerial, kParallel };

std::vector<GoldAnswers> ground_truth_batch(const KnowledgeGraph& kg, std::span<const QueryDag> queries,
                                            NegationSemantics semantics, Execution exec = Execution::kParallel,
                                            int threads = 0);

std::vector<Neighborhood> retrieve_batch(const KnowledgeGraph& kg, std::span<const QueryDag> queries,
                                         const RetrievalConfig& cfg, const Tokenizer& tokenizer,
                                         Execution exec = Execution::kParallel, int threads = 0);

// Token count of each query's full prompt over its retrieved context.
std::vector<std::size_t> prompt_token_counts(std::span<const QueryDag> queries,
                                             std::span<const Neighborhood> neighborhoods,
                                             const Tokenizer& tokenizer, Execution exec = Execution::kParallel,
                                             int threads = 0);

}  // namespace lark
