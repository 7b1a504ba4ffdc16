#pragma once

#include <optional>
#include <vector>

#include "masklab/vocab.hpp"

namespace masklab {

// Cyclic multi-token padding for variable-length regions. The pad token at
// region-relative position p is always pads[p % cycle], independent of the
// content length, so each padded position has a single correct token and the
// (content, max_len) -> padded mapping is a bijection for a fixed cycle.
std::vector<int> rainbow_pad(const std::vector<int>& content, int max_len,
                             const Vocabulary& vocab, int cycle);

// Strict inverse: returns the content prefix, or nullopt when the input is not
// a well-formed padded region (pad token inside content, wrong pad token for a
// position, or content resuming after padding started).
std::optional<std::vector<int>> rainbow_strip(const std::vector<int>& padded,
                                              const Vocabulary& vocab, int cycle);

}  // namespace masklab
