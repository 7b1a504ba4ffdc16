#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/vocab.hpp"

namespace masklab {

// Prefix-bracketed list operations over digits 0-9:
//   X = max, N = min, D = median (lower median for even arity), S = sum mod 10.
// Example: "[X3[N25]7]" evaluates to 7; its post-order trace is "27" (one digit
// per operator node, innermost first).
struct ListopsNode {
  char op = 0;               // 'X','N','D','S' for operators, 0 for leaves
  int leaf = -1;             // digit value for leaves
  std::vector<ListopsNode> kids;

  bool is_leaf() const { return op == 0; }
};

struct ListopsTree {
  ListopsNode root;
  int depth = 0;        // operator levels on the longest root-to-leaf path
  int operators = 0;    // trace length
  std::string text;     // serialized expression, no whitespace
};

struct ListopsGenLimits {
  int max_operators = 20;   // trace must fit the answer region
  int max_text = 59;        // expression length cap; prompt adds '='
};

// Draws a tree whose depth is exactly target_depth, resampling until the
// operator count and text length fit the limits. Child counts are drawn from
// {2,3,4,5} with weights {0.35,0.35,0.20,0.10}; one child carries the
// remaining depth, the rest draw a uniform shallower target.
ListopsTree gen_listops_tree(int target_depth, const ListopsGenLimits& limits, std::uint64_t seed);

int listops_eval(const ListopsNode& node);

// Post-order trace: operator-node values, children before parents.
std::vector<int> listops_trace(const ListopsNode& root);

// Height of each operator node in trace order (a node over leaves only has
// height 1). Drives bottom-up decode orders.
std::vector<int> listops_trace_heights(const ListopsNode& root);

ListopsNode listops_parse(const std::string& text);

// Sequence layout: prompt = expression + '=' then rainbow padding to
// prompt_len; answer = trace digits rainbow-padded to answer_len.
ReasoningInstance listops_instance(const ListopsTree& tree, std::uint64_t seed,
                                   const Vocabulary& vocab, int prompt_len, int answer_len,
                                   int pad_cycle);

// Recover the expression text from an instance prompt (strips '=' and pads).
std::string listops_text_from_prompt(const std::vector<int>& prompt, const Vocabulary& vocab);

}  // namespace masklab
