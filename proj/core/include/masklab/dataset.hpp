#pragma once

#include <filesystem>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/vocab.hpp"

namespace masklab {

// JSONL with one instance per line:
//   {"task":"addition","prompt":["4","+",...],"answer":[...],
//    "strata":{"max_chain":3},"seed":123}
// Token fields hold vocabulary strings, not ids. Writes are atomic
// (temp file + rename) and byte-stable for a fixed input.
void dataset_emit(const std::vector<ReasoningInstance>& data, const Vocabulary& vocab,
                  const std::filesystem::path& file);

// Errors mention the offending line number.
std::vector<ReasoningInstance> dataset_load(const std::filesystem::path& file,
                                            const Vocabulary& vocab);

}  // namespace masklab
