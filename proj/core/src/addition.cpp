#include "masklab/addition.hpp"

#include "masklab/error.hpp"
#include "masklab/rng.hpp"

namespace masklab {

namespace {

void check_digits(const std::vector<int>& d, const char* who) {
  check(!d.empty(), std::string(who) + ": empty digit vector");
  for (int x : d) check(x >= 0 && x <= 9, std::string(who) + ": digit out of range");
}

// Builds the instance from LSB-first operand digits.
ReasoningInstance make_instance(const std::vector<int>& a, const std::vector<int>& b,
                                std::uint64_t seed, const Vocabulary& vocab) {
  const int n = static_cast<int>(a.size());
  const std::vector<int> sum = ripple_add(a, b);
  const CarryProfile prof = carry_profile(a, b);

  ReasoningInstance inst;
  inst.task = Task::addition;
  inst.seed = seed;
  inst.prompt.reserve(2 * n + 2);
  for (int i = n - 1; i >= 0; --i) inst.prompt.push_back(vocab.id(std::string(1, char('0' + a[i]))));
  inst.prompt.push_back(vocab.id("+"));
  for (int i = n - 1; i >= 0; --i) inst.prompt.push_back(vocab.id(std::string(1, char('0' + b[i]))));
  inst.prompt.push_back(vocab.id("="));
  inst.answer.reserve(n + 1);
  for (int i = n; i >= 0; --i) inst.answer.push_back(vocab.id(std::string(1, char('0' + sum[i]))));
  inst.strata["max_chain"] = prof.max_chain;
  return inst;
}

}  // namespace

CarryProfile carry_profile(const std::vector<int>& a_digits, const std::vector<int>& b_digits) {
  check(a_digits.size() == b_digits.size(), "carry_profile: operand length mismatch");
  check_digits(a_digits, "carry_profile");
  check_digits(b_digits, "carry_profile");
  const int n = static_cast<int>(a_digits.size());

  CarryProfile prof;
  prof.roles.resize(n);
  for (int i = 0; i < n; ++i) {
    const int s = a_digits[i] + b_digits[i];
    prof.roles[i] = s <= 8 ? 'k' : (s == 9 ? 'p' : 'g');
  }
  int i = 0;
  while (i < n) {
    if (prof.roles[i] != 'p') {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && prof.roles[j + 1] == 'p') ++j;
    prof.chain_spans.emplace_back(i, j);
    prof.max_chain = std::max(prof.max_chain, j - i + 1);
    i = j + 1;
  }
  return prof;
}

std::vector<int> ripple_add(const std::vector<int>& a_digits, const std::vector<int>& b_digits) {
  check(a_digits.size() == b_digits.size(), "ripple_add: operand length mismatch");
  check_digits(a_digits, "ripple_add");
  check_digits(b_digits, "ripple_add");
  const int n = static_cast<int>(a_digits.size());
  std::vector<int> c(n + 1);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    const int t = a_digits[i] + b_digits[i] + r;
    c[i] = t % 10;
    r = t >= 10 ? 1 : 0;
  }
  c[n] = r;
  return c;
}

ReasoningInstance gen_addition(int n_digits, std::uint64_t seed, const Vocabulary& vocab) {
  check(n_digits >= 1, "gen_addition: n_digits must be positive");
  Rng rng(seed);
  std::vector<int> a(n_digits), b(n_digits);
  for (int i = 0; i < n_digits; ++i) a[i] = rng.range(0, 9);
  for (int i = 0; i < n_digits; ++i) b[i] = rng.range(0, 9);
  return make_instance(a, b, seed, vocab);
}

ReasoningInstance gen_addition_stratum(int n_digits, int min_chain, std::uint64_t seed,
                                       const Vocabulary& vocab) {
  check(n_digits >= 1, "gen_addition_stratum: n_digits must be positive");
  check(min_chain >= 0 && min_chain <= n_digits - 1,
        "gen_addition_stratum: min_chain must be in [0, n_digits-1]");
  Rng rng(seed);
  std::vector<int> a(n_digits), b(n_digits);
  for (int i = 0; i < n_digits; ++i) a[i] = rng.range(0, 9);
  for (int i = 0; i < n_digits; ++i) b[i] = rng.range(0, 9);
  if (min_chain > 0) {
    const int offset = rng.range(0, n_digits - min_chain);
    for (int i = offset; i < offset + min_chain; ++i) {
      a[i] = rng.range(0, 9);
      b[i] = 9 - a[i];
    }
  }
  ReasoningInstance inst = make_instance(a, b, seed, vocab);
  check(inst.stratum("max_chain") >= min_chain, "gen_addition_stratum: planted chain missing");
  return inst;
}

AdditionOperands parse_addition_prompt(const std::vector<int>& prompt, const Vocabulary& vocab) {
  check(prompt.size() >= 4 && prompt.size() % 2 == 0, "parse_addition_prompt: bad length");
  const int n = (static_cast<int>(prompt.size()) - 2) / 2;
  check(prompt[n] == vocab.id("+") && prompt[2 * n + 1] == vocab.id("="),
        "parse_addition_prompt: separators not where expected");
  AdditionOperands ops;
  ops.a.resize(n);
  ops.b.resize(n);
  auto digit_at = [&](int pos) {
    const std::string& s = vocab.str(prompt[pos]);
    check(s.size() == 1 && s[0] >= '0' && s[0] <= '9', "parse_addition_prompt: non-digit operand");
    return s[0] - '0';
  };
  for (int i = 0; i < n; ++i) {
    ops.a[n - 1 - i] = digit_at(i);          // prompt is MSB-first
    ops.b[n - 1 - i] = digit_at(n + 1 + i);
  }
  return ops;
}

}  // namespace masklab
