#pragma once

#include <vector>

#include "masklab/error.hpp"
#include "masklab/instance.hpp"
#include "masklab/rng.hpp"

namespace masklab {

// Mask pattern over one sequence. Prompt positions are never masked; tokens
// holds the mask sentinel exactly at the positions listed in masked.
struct MaskState {
  std::vector<int> tokens;
  std::vector<int> masked;  // absolute positions, ascending
  double lambda = 1.0;      // masking probability (uniform-random scheme only)

  bool is_masked(int pos) const {
    for (int m : masked) {
      if (m == pos) return true;
      if (m > pos) break;
    }
    return false;
  }
};

// Every answer position masked; lambda pinned to 1.
inline MaskState full_mask(const ReasoningInstance& inst, int mask_id) {
  MaskState s;
  s.tokens = inst.prompt;
  s.tokens.insert(s.tokens.end(), inst.answer.begin(), inst.answer.end());
  const int off = inst.answer_offset();
  for (std::size_t i = 0; i < inst.answer.size(); ++i) {
    s.tokens[off + i] = mask_id;
    s.masked.push_back(off + static_cast<int>(i));
  }
  s.lambda = 1.0;
  return s;
}

// lambda ~ Unif(0,1), then each answer position is masked i.i.d. with
// probability lambda. An all-visible pattern is resampled (the loss is
// undefined on an empty masked set); lambda itself is kept.
inline MaskState sample_random_mask(const ReasoningInstance& inst, int mask_id, Rng& rng) {
  check(!inst.answer.empty(), "mask: instance has empty answer region");
  MaskState s;
  s.lambda = 1.0 - rng.real();  // (0,1]: a strictly positive probability terminates the resample loop
  const int off = inst.answer_offset();
  while (s.masked.empty()) {
    for (std::size_t i = 0; i < inst.answer.size(); ++i) {
      if (rng.bernoulli(s.lambda)) s.masked.push_back(off + static_cast<int>(i));
    }
  }
  s.tokens = inst.prompt;
  s.tokens.insert(s.tokens.end(), inst.answer.begin(), inst.answer.end());
  for (int pos : s.masked) s.tokens[pos] = mask_id;
  return s;
}

}  // namespace masklab
