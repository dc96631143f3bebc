#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

namespace lark {

/// Token counter used for the context budget and token statistics.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::size_t count(std::string_view text) const = 0;
  virtual std::string name() const = 0;

  // True when count(a + b) == count(a) + count(b) whenever the join point is
  // not between two word characters. Retrieval uses this to grow the context
  // count incrementally instead of re-tokenising the whole prefix.
  virtual bool additive() const { return false; }
};

/// Default approximation: every maximal run of word characters (ASCII
/// alphanumerics, '_', and any byte >= 0x80) is one token, every other
/// non-whitespace byte is one token of its own.
class ApproxTokenizer final : public Tokenizer {
 public:
  std::size_t count(std::string_view text) const override;
  std::string name() const override { return "approx"; }
  bool additive() const override { return true; }
};

/// Delegates counting to a long-lived child process (for instance a script
/// wrapping a model-specific tokenizer). Each request is one JSON string
/// literal on a line of the child's stdin; the child answers with one
/// decimal count per line on stdout. Calls are serialised.
class CommandTokenizer final : public Tokenizer {
 public:
  explicit CommandTokenizer(std::string command);
  ~CommandTokenizer() override;

  CommandTokenizer(const CommandTokenizer&) = delete;
  CommandTokenizer& operator=(const CommandTokenizer&) = delete;

  std::size_t count(std::string_view text) const override;
  std::string name() const override { return "command:" + command_; }

 private:
  std::string command_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::string pending_;
  mutable std::mutex mutex_;
};

const Tokenizer& default_tokenizer();

// Shorthand for default_tokenizer().count(text).
std::size_t count_tokens(std::string_view text);

}  // namespace lark
