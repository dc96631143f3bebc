#include "lark/tokenizer.hpp"

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>

#include <nlohmann/json.hpp>

#include "lark/error.hpp"

namespace lark {

namespace {

bool is_word_byte(unsigned char c) {
  return c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::kIo, "tokenizer process: write failed");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

std::size_t ApproxTokenizer::count(std::string_view text) const {
  std::size_t tokens = 0;
  bool in_word = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      if (!in_word) ++tokens;
      in_word = true;
    } else {
      in_word = false;
      if (!is_space_byte(c)) ++tokens;
    }
  }
  return tokens;
}

CommandTokenizer::CommandTokenizer(std::string command) : command_(std::move(command)) {
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw Error(ErrorKind::kIo, "tokenizer process: pipe failed");
  pid_ = ::fork();
  if (pid_ < 0) throw Error(ErrorKind::kIo, "tokenizer process: fork failed");
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  std::signal(SIGPIPE, SIG_IGN);
}

CommandTokenizer::~CommandTokenizer() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

std::size_t CommandTokenizer::count(std::string_view text) const {
  std::lock_guard lock(mutex_);
  write_all(to_child_, nlohmann::json(std::string(text)).dump() + "\n");
  while (true) {
    auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      try {
        return static_cast<std::size_t>(std::stoull(line));
      } catch (const std::exception&) {
        throw Error(ErrorKind::kIo, "tokenizer process returned '" + line + "'");
      }
    }
    char buf[256];
    ssize_t n = ::read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(ErrorKind::kIo, "tokenizer process '" + command_ + "' closed its output");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

const Tokenizer& default_tokenizer() {
  static const ApproxTokenizer tokenizer;
  return tokenizer;
}

std::size_t count_tokens(std::string_view text) { return default_tokenizer().count(text); }

}  // namespace lark
