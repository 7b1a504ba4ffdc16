#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "masklab/error.hpp"

namespace masklab {

enum class Task { addition, maze, listops, countdown, sudoku };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::addition: return "addition";
    case Task::maze: return "maze";
    case Task::listops: return "listops";
    case Task::countdown: return "countdown";
    case Task::sudoku: return "sudoku";
  }
  fail("task_name: bad enum value");
}

inline Task parse_task(const std::string& s) {
  if (s == "addition") return Task::addition;
  if (s == "maze") return Task::maze;
  if (s == "listops") return Task::listops;
  if (s == "countdown") return Task::countdown;
  if (s == "sudoku") return Task::sudoku;
  fail("unknown task: " + s);
}

// One generated problem. `prompt` is always visible to the model; `answer` is
// the region that gets masked and decoded. Difficulty annotations live in
// `strata` keyed by name (e.g. "max_chain"); values that are whole numbers are
// serialized as integers so files stay byte-stable.
struct ReasoningInstance {
  Task task = Task::addition;
  std::vector<int> prompt;
  std::vector<int> answer;
  std::map<std::string, double> strata;
  std::uint64_t seed = 0;

  int seq_len() const { return static_cast<int>(prompt.size() + answer.size()); }
  int answer_offset() const { return static_cast<int>(prompt.size()); }
  double stratum(const std::string& key) const {
    auto it = strata.find(key);
    check(it != strata.end(), std::string("instance lacks stratum ") + key);
    return it->second;
  }
};

}  // namespace masklab
