#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "masklab/decode.hpp"
#include "masklab/error.hpp"
#include "masklab/instance.hpp"
#include "masklab/vocab.hpp"

namespace masklab::testutil {

// Scratch directory deleted on scope exit. Unique per construction so suites
// running in one process never collide.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("masklab_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path operator/(const std::string& leaf) const { return dir_ / leaf; }

 private:
  std::filesystem::path dir_;
};

// Probability source that already knows every answer: probability mass `peak`
// on the true token, the remainder spread over the rest. Sequences are
// recognized by their prompt prefix (prompts are never masked), so the source
// works unchanged under batching, chunking, and reordering. Lets decode-order
// tests isolate the policy machinery from model quality.
class OneHotSource : public LogitSource {
 public:
  OneHotSource(const std::vector<ReasoningInstance>& insts, int vocab_size, double peak = 0.99)
      : vocab_(vocab_size), peak_(peak) {
    check(!insts.empty(), "OneHotSource: no instances");
    prompt_len_ = static_cast<int>(insts.front().prompt.size());
    for (const auto& inst : insts) {
      check(static_cast<int>(inst.prompt.size()) == prompt_len_,
            "OneHotSource: mixed prompt lengths");
      std::vector<int> t = inst.prompt;
      t.insert(t.end(), inst.answer.begin(), inst.answer.end());
      auto [it, fresh] = truth_.emplace(inst.prompt, std::move(t));
      check(fresh || it->second.size() == inst.prompt.size() + inst.answer.size(),
            "OneHotSource: duplicate prompt with conflicting answer");
    }
  }

  OneHotSource(const ReasoningInstance& inst, int vocab_size, double peak = 0.99)
      : OneHotSource(std::vector<ReasoningInstance>{inst}, vocab_size, peak) {}

  int vocab() const override { return vocab_; }

  void predict(const std::vector<int>& tokens, int batch, int len, ProbMatrix& probs) override {
    check(len >= prompt_len_, "OneHotSource: sequence shorter than prompt");
    const double rest = (1.0 - peak_) / static_cast<double>(vocab_ - 1);
    probs.resize(static_cast<Eigen::Index>(batch) * len, vocab_);
    probs.setConstant(rest);
    for (int b = 0; b < batch; ++b) {
      const auto row = tokens.begin() + static_cast<std::ptrdiff_t>(b) * len;
      const std::vector<int> key(row, row + prompt_len_);
      auto it = truth_.find(key);
      check(it != truth_.end(), "OneHotSource: unknown prompt");
      for (int p = 0; p < len; ++p) {
        probs(static_cast<Eigen::Index>(b) * len + p,
              it->second[static_cast<std::size_t>(p)]) = peak_;
      }
    }
  }

 private:
  std::map<std::vector<int>, std::vector<int>> truth_;
  int vocab_;
  int prompt_len_ = 0;
  double peak_;
};

}  // namespace masklab::testutil
