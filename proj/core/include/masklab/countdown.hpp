#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/vocab.hpp"

namespace masklab {

// Three-step arithmetic chains over a pool of four inputs. Each step consumes
// two pool members and appends the result ("x+y=z"); after three steps the
// pool holds only the target. Legality: all values are positive integers,
// subtraction requires a > b, division requires b != 0 and b | a.
//
// Chains count as distinct iff their ordered step lists differ after writing
// commutative operands in sorted order (x <= y for + and *). The generated
// answer keeps operands in draw order; canonicalization applies only to the
// multiplicity count.
struct CountdownStep {
  int x = 0, y = 0, z = 0;
  char op = 0;  // '+', '-', '*', '/'
};

struct CountdownChain {
  std::array<int, 4> inputs{};
  int target = 0;
  std::array<CountdownStep, 3> steps{};
  std::string text() const;  // "86+28=114,31-13=18,114-18=96"
};

// Exhaustive pool-model enumeration; multiplicity is the number of distinct
// canonical chains reaching the target.
int countdown_multiplicity(const std::array<int, 4>& inputs, int target);

struct CountdownGenConfig {
  int input_lo = 1, input_hi = 99;
  int target_lo = 10, target_hi = 999;
  int answer_len = 40;  // chains whose text exceeds this are resampled
  int prompt_len = 16;
  int pad_cycle = 4;
};

// Draws inputs, builds a random legal chain, and retries until the target and
// chain text fit the config bounds.
CountdownChain gen_countdown_chain(const CountdownGenConfig& cfg, std::uint64_t seed);

// Sequence layout: prompt = "i1,i2,i3,i4,target=" rainbow-padded to
// prompt_len; answer = chain text rainbow-padded to answer_len.
// Strata: {"m": multiplicity}.
ReasoningInstance countdown_instance(const CountdownChain& chain, std::uint64_t seed,
                                     const Vocabulary& vocab, const CountdownGenConfig& cfg);

// Parse "a,b,c,d,target" back out of an instance prompt.
struct CountdownPrompt {
  std::array<int, 4> inputs{};
  int target = 0;
};
CountdownPrompt countdown_from_prompt(const std::vector<int>& prompt, const Vocabulary& vocab);

}  // namespace masklab
