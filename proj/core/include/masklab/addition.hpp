#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/vocab.hpp"

namespace masklab {

// Column roles for a + b, LSB-indexed. With s_i = a_i + b_i:
//   'k' (s <= 8): kills any incoming carry, outgoing carry is 0
//   'g' (s >= 10): generates a carry regardless of input
//   'p' (s == 9): propagates the incoming carry unchanged
// A carry chain is a maximal run of 'p' columns; its MSB-side neighbor is the
// first cell whose digit depends on the carry produced below the run.
struct CarryProfile {
  std::string roles;                             // length n, LSB-indexed
  int max_chain = 0;                             // longest 'p' run (0 if none)
  std::vector<std::pair<int, int>> chain_spans;  // inclusive [lo,hi], LSB-indexed
};

CarryProfile carry_profile(const std::vector<int>& a_digits, const std::vector<int>& b_digits);

// Digit-wise sum via the carry recurrence: r_0 = 0, c_i = (a_i+b_i+r_i) mod 10,
// r_{i+1} = [a_i+b_i+r_i >= 10], c_n = r_n. Returns n+1 digits, LSB-first.
std::vector<int> ripple_add(const std::vector<int>& a_digits, const std::vector<int>& b_digits);

// Uniform instance: a and b drawn as n independent uniform digits each.
// Sequence layout: prompt "a+b=" (MSB-first, zero padded, 2n+2 tokens),
// answer = n+1 sum digits MSB-first (carry-out digit first).
ReasoningInstance gen_addition(int n_digits, std::uint64_t seed, const Vocabulary& vocab);

// Stratified instance: a contiguous run of min_chain propagate columns
// (a_i + b_i = 9) is planted at a uniform offset, all other columns uniform,
// then the profile is recomputed to verify max_chain >= min_chain.
// min_chain = 0 degenerates to unstratified sampling.
ReasoningInstance gen_addition_stratum(int n_digits, int min_chain, std::uint64_t seed,
                                       const Vocabulary& vocab);

// Recover operand digits (LSB-first) from an instance prompt.
struct AdditionOperands {
  std::vector<int> a, b;  // LSB-first
};
AdditionOperands parse_addition_prompt(const std::vector<int>& prompt, const Vocabulary& vocab);

// Answer-string index j <-> digit index. The answer is written MSB-first, so
// string position 0 holds digit n (the carry-out) and position n holds digit 0.
inline int addition_digit_of_pos(int n_digits, int answer_pos) { return n_digits - answer_pos; }

}  // namespace masklab
