#pragma once

// Optional plug-in scorer for learned text-similarity metrics the harness
// does not implement natively. Protocol: one JSON object per line on stdin
// ({"candidate": ..., "reference": ...}), one JSON object per line on stdout
// ({"score": <number>} or {"error": <text>}).

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "dsim/error.hpp"

namespace dsim {

class ExternalScorer {
 public:
  virtual ~ExternalScorer() = default;
  virtual double score(const std::string& candidate, const std::string& reference) = 0;
  virtual std::string describe() const = 0;
};

// In-process scorer for tests and custom embeddings.
class FunctionScorer : public ExternalScorer {
 public:
  explicit FunctionScorer(std::function<double(const std::string&, const std::string&)> fn)
      : fn_(std::move(fn)) {}
  double score(const std::string& candidate, const std::string& reference) override {
    return fn_(candidate, reference);
  }
  std::string describe() const override { return "function"; }

 private:
  std::function<double(const std::string&, const std::string&)> fn_;
};

// Keeps one child process alive for the whole run and exchanges one
// request/response line pair per call.
class SubprocessScorer : public ExternalScorer {
 public:
  explicit SubprocessScorer(std::string command) : command_(std::move(command)) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw TransportError("failed to create scorer pipes", 1);
    pid_ = fork();
    if (pid_ < 0) throw TransportError("failed to fork scorer process", 1);
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    to_child_ = fdopen(to_child[1], "w");
    from_child_ = fdopen(from_child[0], "r");
    if (!to_child_ || !from_child_)
      throw TransportError("failed to open scorer streams", 1);
  }

  ~SubprocessScorer() override {
    if (to_child_) fclose(to_child_);
    if (from_child_) fclose(from_child_);
    if (pid_ > 0) waitpid(pid_, nullptr, 0);
  }

  SubprocessScorer(const SubprocessScorer&) = delete;
  SubprocessScorer& operator=(const SubprocessScorer&) = delete;

  double score(const std::string& candidate, const std::string& reference) override {
    std::lock_guard lock(mu_);
    nlohmann::json request = {{"candidate", candidate}, {"reference", reference}};
    std::string line = request.dump();
    if (std::fputs(line.c_str(), to_child_) == EOF ||
        std::fputc('\n', to_child_) == EOF || std::fflush(to_child_) != 0)
      throw TransportError("scorer process not accepting input", 1);

    std::string response;
    int c;
    while ((c = std::fgetc(from_child_)) != EOF && c != '\n')
      response.push_back(static_cast<char>(c));
    if (response.empty() && c == EOF)
      throw TransportError("scorer process closed its output", 1);

    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(response);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed scorer response: ") + e.what());
    }
    if (doc.contains("error"))
      throw ProviderError("scorer reported an error", 0,
                          doc["error"].is_string() ? doc["error"].get<std::string>()
                                                   : doc["error"].dump());
    if (!doc.contains("score") || !doc["score"].is_number())
      throw ParseError("scorer response lacks a numeric score");
    return doc["score"].get<double>();
  }

  std::string describe() const override { return "subprocess:" + command_; }

 private:
  std::string command_;
  pid_t pid_ = -1;
  FILE* to_child_ = nullptr;
  FILE* from_child_ = nullptr;
  std::mutex mu_;
};

}  // namespace dsim
