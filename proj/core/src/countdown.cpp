#include "masklab/countdown.hpp"

#include <algorithm>
#include <set>

#include "masklab/error.hpp"
#include "masklab/rainbow.hpp"
#include "masklab/rng.hpp"

namespace masklab {

namespace {

// Result of applying op to (x, y), or -1 when illegal under chain rules.
long apply_op(char op, long x, long y) {
  switch (op) {
    case '+': return x + y;
    case '*': return x * y;
    case '-': return x > y ? x - y : -1;
    case '/': return y != 0 && x % y == 0 ? x / y : -1;
  }
  fail("countdown: bad operator");
}

std::string step_text(int x, char op, int y, int z) {
  return std::to_string(x) + op + std::to_string(y) + "=" + std::to_string(z);
}

void enumerate(std::vector<long>& pool, int depth, std::array<std::string, 3>& canon,
               int target, std::set<std::array<std::string, 3>>& seen) {
  if (depth == 3) {
    if (pool.size() == 1 && pool[0] == target) seen.insert(canon);
    return;
  }
  const int n = static_cast<int>(pool.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (char op : {'+', '-', '*', '/'}) {
        if ((op == '+' || op == '*') && i > j) continue;  // commutative pairs once
        const long z = apply_op(op, pool[i], pool[j]);
        if (z <= 0) continue;
        long a = pool[i], b = pool[j];
        if ((op == '+' || op == '*') && a > b) std::swap(a, b);
        canon[depth] = step_text(static_cast<int>(a), op, static_cast<int>(b), static_cast<int>(z));
        std::vector<long> next;
        next.reserve(n - 1);
        for (int k = 0; k < n; ++k) {
          if (k != i && k != j) next.push_back(pool[k]);
        }
        next.push_back(z);
        enumerate(next, depth + 1, canon, target, seen);
      }
    }
  }
}

}  // namespace

std::string CountdownChain::text() const {
  std::string out;
  for (int s = 0; s < 3; ++s) {
    if (s) out += ',';
    out += step_text(steps[s].x, steps[s].op, steps[s].y, steps[s].z);
  }
  return out;
}

int countdown_multiplicity(const std::array<int, 4>& inputs, int target) {
  for (int v : inputs) check(v >= 1, "countdown_multiplicity: inputs must be positive");
  check(target >= 1, "countdown_multiplicity: target must be positive");
  std::vector<long> pool(inputs.begin(), inputs.end());
  std::array<std::string, 3> canon;
  std::set<std::array<std::string, 3>> seen;
  enumerate(pool, 0, canon, target, seen);
  return static_cast<int>(seen.size());
}

CountdownChain gen_countdown_chain(const CountdownGenConfig& cfg, std::uint64_t seed) {
  check(cfg.input_lo >= 1 && cfg.input_hi >= cfg.input_lo, "gen_countdown_chain: bad input range");
  Rng rng(seed);
  for (;;) {
    CountdownChain chain;
    for (int& v : chain.inputs) v = rng.range(cfg.input_lo, cfg.input_hi);
    std::vector<long> pool(chain.inputs.begin(), chain.inputs.end());
    bool ok = true;
    for (int s = 0; s < 3 && ok; ++s) {
      // Collect legal (i, j, op) moves and draw one uniformly.
      struct Move {
        int i, j;
        char op;
        long z;
      };
      std::vector<Move> moves;
      const int n = static_cast<int>(pool.size());
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          for (char op : {'+', '-', '*', '/'}) {
            if ((op == '+' || op == '*') && i > j) continue;
            const long z = apply_op(op, pool[i], pool[j]);
            if (z > 0) moves.push_back({i, j, op, z});
          }
        }
      }
      if (moves.empty()) {
        ok = false;
        break;
      }
      const Move m = moves[rng.below(moves.size())];
      chain.steps[s] = {static_cast<int>(pool[m.i]), static_cast<int>(pool[m.j]),
                        static_cast<int>(m.z), m.op};
      std::vector<long> next;
      for (int k = 0; k < n; ++k) {
        if (k != m.i && k != m.j) next.push_back(pool[k]);
      }
      next.push_back(m.z);
      pool = std::move(next);
    }
    if (!ok) continue;
    chain.target = static_cast<int>(pool[0]);
    if (chain.target < cfg.target_lo || chain.target > cfg.target_hi) continue;
    if (static_cast<int>(chain.text().size()) > cfg.answer_len) continue;
    return chain;
  }
}

ReasoningInstance countdown_instance(const CountdownChain& chain, std::uint64_t seed,
                                     const Vocabulary& vocab, const CountdownGenConfig& cfg) {
  ReasoningInstance inst;
  inst.task = Task::countdown;
  inst.seed = seed;
  std::string prompt_text;
  for (int v : chain.inputs) prompt_text += std::to_string(v) + ",";
  prompt_text += std::to_string(chain.target) + "=";
  std::vector<int> prompt;
  for (char c : prompt_text) prompt.push_back(vocab.id(std::string(1, c)));
  inst.prompt = rainbow_pad(prompt, cfg.prompt_len, vocab, cfg.pad_cycle);
  std::vector<int> answer;
  for (char c : chain.text()) answer.push_back(vocab.id(std::string(1, c)));
  inst.answer = rainbow_pad(answer, cfg.answer_len, vocab, cfg.pad_cycle);
  inst.strata["m"] = countdown_multiplicity(chain.inputs, chain.target);
  return inst;
}

CountdownPrompt countdown_from_prompt(const std::vector<int>& prompt, const Vocabulary& vocab) {
  std::string text;
  bool closed = false;
  for (int id : prompt) {
    const std::string& t = vocab.str(id);
    if (t == "=") {
      closed = true;
      break;
    }
    check(!vocab.is_pad(id), "countdown prompt: pad before '='");
    text += t;
  }
  check(closed, "countdown prompt: missing '='");
  CountdownPrompt out;
  std::vector<int> vals;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string part = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                         : comma - pos);
    check(!part.empty() && part.find_first_not_of("0123456789") == std::string::npos,
          "countdown prompt: bad number: " + part);
    vals.push_back(std::stoi(part));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  check(vals.size() == 5, "countdown prompt: expected 4 inputs and a target");
  for (int i = 0; i < 4; ++i) out.inputs[i] = vals[i];
  out.target = vals[4];
  return out;
}

}  // namespace masklab
