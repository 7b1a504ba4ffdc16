#pragma once

#include "masklab/decode.hpp"
#include "masklab/instance.hpp"
#include "masklab/rng.hpp"
#include "masklab/vocab.hpp"

namespace masklab {

// Builds the per-instance reveal plan. Solver-derived orders (dead-end fill,
// layered post-order, step-sequential, the two sudoku orders) are recomputed
// from the prompt, so plans never depend on generation-time side channels.
// rng feeds the scaffold pre-reveal draw; policies that need no randomness
// leave it untouched.
PolicyPlan build_policy_plan(const PolicySpec& spec, const ReasoningInstance& inst,
                             const Vocabulary& vocab, Rng& rng);

}  // namespace masklab
