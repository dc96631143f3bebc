#include "lark/metrics.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "lark/error.hpp"

namespace lark {

namespace {

constexpr std::array<QueryType, 9> kStandardColumns = {QueryType::k1p, QueryType::k2p, QueryType::k3p,
                                                       QueryType::k2i, QueryType::k3i, QueryType::kIp,
                                                       QueryType::kPi, QueryType::k2u, QueryType::kUp};
constexpr std::array<QueryType, 5> kNegationColumns = {QueryType::k2in, QueryType::k3in, QueryType::kInp,
                                                       QueryType::kPin, QueryType::kPni};

bool in_gold(std::span<const EntityId> gold, EntityId e) { return std::binary_search(gold.begin(), gold.end(), e); }

std::string cell(double v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%*.1f", width, v * 100.0);
  return buf;
}

template <std::size_t N>
void write_block(std::ostringstream& out, const MetricsReport& report, const std::array<QueryType, N>& columns) {
  bool any = false;
  for (auto t : columns) any = any || report.per_type.contains(t);
  if (!any) return;
  char buf[32];
  out << "metric  ";
  for (auto t : columns) {
    std::snprintf(buf, sizeof buf, "%7s", std::string(to_string(t)).c_str());
    out << buf;
  }
  out << '\n';
  auto row = [&](const char* name, double TypeMetrics::*field) {
    std::snprintf(buf, sizeof buf, "%-8s", name);
    out << buf;
    for (auto t : columns) {
      auto it = report.per_type.find(t);
      out << (it == report.per_type.end() ? std::string("      -") : cell(it->second.*field, 7));
    }
    out << '\n';
  };
  row("MRR", &TypeMetrics::mrr);
  row("HITS@1", &TypeMetrics::hits1);
  row("HITS@3", &TypeMetrics::hits3);
  row("HITS@10", &TypeMetrics::hits10);
  out << "n       ";
  for (auto t : columns) {
    auto it = report.per_type.find(t);
    std::snprintf(buf, sizeof buf, "%7zu", it == report.per_type.end() ? std::size_t{0} : it->second.n_queries);
    out << buf;
  }
  out << "\n\n";
}

nlohmann::json metrics_json(const TypeMetrics& m) {
  return {{"mrr", m.mrr}, {"hits1", m.hits1}, {"hits3", m.hits3}, {"hits10", m.hits10}, {"n_queries", m.n_queries}};
}

}  // namespace

double reciprocal_rank(std::span<const EntityId> predicted, std::span<const EntityId> gold) {
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (in_gold(gold, predicted[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double hits_at_k(std::span<const EntityId> predicted, std::span<const EntityId> gold, std::size_t k) {
  const std::size_t n = std::min(k, predicted.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (in_gold(gold, predicted[i])) return 1.0;
  }
  return 0.0;
}

TokenStats token_stats(std::span<const std::size_t> counts, std::size_t limit) {
  if (counts.empty()) throw Error(ErrorKind::kEmptyBucket, "token statistics over an empty bucket");
  std::vector<std::size_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  TokenStats s;
  s.n = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  long double sum = 0;
  for (auto c : sorted) sum += c;
  s.mean = static_cast<double>(sum / sorted.size());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? static_cast<double>(sorted[mid])
                                    : (static_cast<double>(sorted[mid - 1]) + static_cast<double>(sorted[mid])) / 2.0;
  const auto below = static_cast<std::size_t>(std::count_if(sorted.begin(), sorted.end(), [&](auto c) { return c < limit; }));
  s.coverage_percent = 100.0 * static_cast<double>(below) / static_cast<double>(sorted.size());
  return s;
}

MetricsReport evaluate(std::span<const RunRecord> records, const std::map<std::string, std::vector<EntityId>>& gold,
                       RankOrder order) {
  std::vector<std::string> missing;
  for (const auto& r : records) {
    if (!gold.contains(r.query_id)) missing.push_back(r.query_id);
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " result ids have no gold answers:";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, missing.size()); ++i) msg += " " + missing[i];
    throw Error(ErrorKind::kMissingGold, msg);
  }

  MetricsReport report;
  std::map<QueryType, TypeMetrics> sums;
  TypeMetrics total;
  for (const auto& r : records) {
    std::vector<EntityId> ranked = r.final_answers;
    if (order == RankOrder::kSortedId) std::sort(ranked.begin(), ranked.end());
    const auto& g = gold.at(r.query_id);
    auto& s = sums[r.type];
    const double rr = reciprocal_rank(ranked, g);
    const double h1 = hits_at_k(ranked, g, 1);
    const double h3 = hits_at_k(ranked, g, 3);
    const double h10 = hits_at_k(ranked, g, 10);
    for (TypeMetrics* m : {&s, &total}) {
      m->mrr += rr;
      m->hits1 += h1;
      m->hits3 += h3;
      m->hits10 += h10;
      ++m->n_queries;
    }
    if (r.degraded) ++report.degraded;
  }
  auto mean = [](TypeMetrics m) {
    if (m.n_queries == 0) return m;
    const auto n = static_cast<double>(m.n_queries);
    m.mrr /= n;
    m.hits1 /= n;
    m.hits3 /= n;
    m.hits10 /= n;
    return m;
  };
  for (const auto& [type, s] : sums) report.per_type[type] = mean(s);
  report.aggregate = mean(total);
  return report;
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream out;
  write_block(out, report, kStandardColumns);
  write_block(out, report, kNegationColumns);
  char buf[160];
  std::snprintf(buf, sizeof buf, "all     MRR %.1f  HITS@1 %.1f  HITS@3 %.1f  HITS@10 %.1f  n %zu  degraded %zu\n",
                report.aggregate.mrr * 100, report.aggregate.hits1 * 100, report.aggregate.hits3 * 100,
                report.aggregate.hits10 * 100, report.aggregate.n_queries, report.degraded);
  out << buf;
  return out.str();
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json per_type = nlohmann::json::object();
  for (const auto& [type, m] : report.per_type) per_type[std::string(to_string(type))] = metrics_json(m);
  return {{"per_type", per_type}, {"aggregate", metrics_json(report.aggregate)}, {"degraded", report.degraded}};
}

std::string format_token_report(const std::map<QueryType, TokenStats>& stats) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-5s %10s %8s %7s %8s %7s %7s\n", "type", "mean", "median", "min", "max", "cov", "n");
  out << buf;
  for (auto t : kAllQueryTypes) {
    auto it = stats.find(t);
    if (it == stats.end()) continue;
    const auto& s = it->second;
    std::snprintf(buf, sizeof buf, "%-5s %10.1f %8.1f %7zu %8zu %7.1f %7zu\n", std::string(to_string(t)).c_str(),
                  s.mean, s.median, s.min, s.max, s.coverage_percent, s.n);
    out << buf;
  }
  return out.str();
}

nlohmann::json to_json(const std::map<QueryType, TokenStats>& stats) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [type, s] : stats) {
    out[std::string(to_string(type))] = {{"mean", s.mean},         {"median", s.median}, {"min", s.min},
                                         {"max", s.max},           {"coverage", s.coverage_percent},
                                         {"n", s.n}};
  }
  return out;
}

}  // namespace lark
