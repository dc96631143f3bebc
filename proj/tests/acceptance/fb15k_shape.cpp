// Exact token statistics on FB15k with the reference tokenizer.
//
// Needs LARK_FB15K_DIR (graph.tsv in abstract form plus queries.jsonl) and
// LARK_TOKENIZER_CMD (a counting command, see `lark --tokenizer-cmd`).
// Exits 77, which ctest reports as skipped, when either is unset.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lark/cli.hpp"
#include "test_support.hpp"

int main() {
  const char* dir = std::getenv("LARK_FB15K_DIR");
  const char* cmd = std::getenv("LARK_TOKENIZER_CMD");
  if (!dir || !cmd) {
    std::cout << "SKIP 7 exact FB15k token statistics: LARK_FB15K_DIR and LARK_TOKENIZER_CMD not set\n";
    return 77;
  }
  lark::testing::TempDir tmp;
  std::ostringstream out, err;
  const int code = lark::run_cli({"--tokenizer-cmd", cmd, "stats", "--kg", std::string(dir) + "/graph.tsv", "--queries",
                                  std::string(dir) + "/queries.jsonl", "--out", tmp.file("stats.json")},
                                 out, err);
  if (code != 0) {
    std::cout << "FAIL 7 exact FB15k token statistics: stats exited " << code << ": " << err.str();
    return 1;
  }
  std::cout << out.str();
  const auto s = nlohmann::json::parse(lark::testing::read_file(tmp.file("stats.json")));
  const auto min = s.at("1p").at("min").get<std::size_t>();
  const auto median = s.at("1p").at("median").get<double>();
  const bool ok = min == 58 && median == 61.0;
  std::cout << (ok ? "PASS" : "FAIL") << " 7 exact FB15k token statistics: 1p min " << min << " median " << median
            << " (want 58 / 61)\n";
  return ok ? 0 : 1;
}
