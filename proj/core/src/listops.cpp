#include "masklab/listops.hpp"

#include <algorithm>

#include "masklab/error.hpp"
#include "masklab/rainbow.hpp"
#include "masklab/rng.hpp"

namespace masklab {

namespace {

const char kOps[4] = {'X', 'N', 'D', 'S'};

char draw_op(Rng& rng) { return kOps[rng.below(4)]; }

int draw_child_count(Rng& rng) {
  const double u = rng.real();
  if (u < 0.35) return 2;
  if (u < 0.70) return 3;
  if (u < 0.90) return 4;
  return 5;
}

ListopsNode gen_node(int target_depth, Rng& rng) {
  if (target_depth == 0) {
    ListopsNode leaf;
    leaf.leaf = rng.range(0, 9);
    return leaf;
  }
  ListopsNode node;
  node.op = draw_op(rng);
  const int kids = draw_child_count(rng);
  const int deep_slot = static_cast<int>(rng.below(kids));
  for (int k = 0; k < kids; ++k) {
    const int child_depth = k == deep_slot ? target_depth - 1 : rng.range(0, target_depth - 1);
    node.kids.push_back(gen_node(child_depth, rng));
  }
  return node;
}

void serialize(const ListopsNode& n, std::string& out) {
  if (n.is_leaf()) {
    out += char('0' + n.leaf);
    return;
  }
  out += '[';
  out += n.op;
  for (const ListopsNode& k : n.kids) serialize(k, out);
  out += ']';
}

int count_operators(const ListopsNode& n) {
  if (n.is_leaf()) return 0;
  int c = 1;
  for (const ListopsNode& k : n.kids) c += count_operators(k);
  return c;
}

int node_depth(const ListopsNode& n) {
  if (n.is_leaf()) return 0;
  int d = 0;
  for (const ListopsNode& k : n.kids) d = std::max(d, node_depth(k));
  return d + 1;
}

void trace_walk(const ListopsNode& n, std::vector<int>& values, std::vector<int>& heights,
                int* height_out) {
  if (n.is_leaf()) {
    if (height_out) *height_out = 0;
    return;
  }
  std::vector<int> vals;
  int max_kid_height = 0;
  for (const ListopsNode& k : n.kids) {
    int h = 0;
    trace_walk(k, values, heights, &h);
    max_kid_height = std::max(max_kid_height, h);
    vals.push_back(listops_eval(k));
  }
  int value;
  std::sort(vals.begin(), vals.end());
  switch (n.op) {
    case 'X': value = vals.back(); break;
    case 'N': value = vals.front(); break;
    case 'D': value = vals[(vals.size() - 1) / 2]; break;
    case 'S': {
      int s = 0;
      for (int v : vals) s += v;
      value = s % 10;
      break;
    }
    default: fail("listops: bad operator");
  }
  values.push_back(value);
  heights.push_back(max_kid_height + 1);
  if (height_out) *height_out = max_kid_height + 1;
}

ListopsNode parse_at(const std::string& text, std::size_t& pos) {
  check(pos < text.size(), "listops_parse: truncated expression");
  const char c = text[pos];
  if (c >= '0' && c <= '9') {
    ++pos;
    ListopsNode leaf;
    leaf.leaf = c - '0';
    return leaf;
  }
  check(c == '[', "listops_parse: expected '[' or digit");
  ++pos;
  check(pos < text.size(), "listops_parse: truncated expression");
  ListopsNode node;
  node.op = text[pos];
  check(node.op == 'X' || node.op == 'N' || node.op == 'D' || node.op == 'S',
        "listops_parse: bad operator");
  ++pos;
  while (pos < text.size() && text[pos] != ']') node.kids.push_back(parse_at(text, pos));
  check(pos < text.size(), "listops_parse: missing ']'");
  ++pos;
  check(node.kids.size() >= 2, "listops_parse: operator needs at least two children");
  return node;
}

}  // namespace

ListopsTree gen_listops_tree(int target_depth, const ListopsGenLimits& limits,
                             std::uint64_t seed) {
  check(target_depth >= 1, "gen_listops_tree: depth must be >= 1");
  Rng rng(seed);
  for (;;) {
    ListopsTree t;
    t.root = gen_node(target_depth, rng);
    t.operators = count_operators(t.root);
    if (t.operators > limits.max_operators) continue;
    serialize(t.root, t.text);
    if (static_cast<int>(t.text.size()) > limits.max_text) continue;
    t.depth = node_depth(t.root);
    check(t.depth == target_depth, "gen_listops_tree: depth drifted");
    return t;
  }
}

int listops_eval(const ListopsNode& node) {
  if (node.is_leaf()) return node.leaf;
  std::vector<int> vals;
  for (const ListopsNode& k : node.kids) vals.push_back(listops_eval(k));
  std::sort(vals.begin(), vals.end());
  switch (node.op) {
    case 'X': return vals.back();
    case 'N': return vals.front();
    case 'D': return vals[(vals.size() - 1) / 2];
    case 'S': {
      int s = 0;
      for (int v : vals) s += v;
      return s % 10;
    }
  }
  fail("listops_eval: bad operator");
}

std::vector<int> listops_trace(const ListopsNode& root) {
  std::vector<int> values, heights;
  trace_walk(root, values, heights, nullptr);
  return values;
}

std::vector<int> listops_trace_heights(const ListopsNode& root) {
  std::vector<int> values, heights;
  trace_walk(root, values, heights, nullptr);
  return heights;
}

ListopsNode listops_parse(const std::string& text) {
  std::size_t pos = 0;
  ListopsNode n = parse_at(text, pos);
  check(pos == text.size(), "listops_parse: trailing characters");
  check(!n.is_leaf(), "listops_parse: expression must have an operator");
  return n;
}

ReasoningInstance listops_instance(const ListopsTree& tree, std::uint64_t seed,
                                   const Vocabulary& vocab, int prompt_len, int answer_len,
                                   int pad_cycle) {
  ReasoningInstance inst;
  inst.task = Task::listops;
  inst.seed = seed;
  std::vector<int> prompt;
  for (char c : tree.text) prompt.push_back(vocab.id(std::string(1, c)));
  prompt.push_back(vocab.id("="));
  inst.prompt = rainbow_pad(prompt, prompt_len, vocab, pad_cycle);
  std::vector<int> answer;
  for (int v : listops_trace(tree.root)) answer.push_back(vocab.id(std::string(1, char('0' + v))));
  inst.answer = rainbow_pad(answer, answer_len, vocab, pad_cycle);
  inst.strata["depth"] = tree.depth;
  inst.strata["operators"] = tree.operators;
  return inst;
}

std::string listops_text_from_prompt(const std::vector<int>& prompt, const Vocabulary& vocab) {
  std::string text;
  for (int id : prompt) {
    const std::string& t = vocab.str(id);
    if (t == "=") return text;
    check(!vocab.is_pad(id), "listops prompt: pad before '='");
    check(t.size() == 1, "listops prompt: unexpected token");
    text += t;
  }
  fail("listops prompt: missing '='");
}

}  // namespace masklab
