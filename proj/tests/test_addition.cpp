#include <doctest.h>

#include <string>
#include <vector>

#include "masklab/addition.hpp"
#include "masklab/rng.hpp"
#include "masklab/vocab.hpp"

using namespace masklab;

namespace {

// Independent ground truth: operands as wide integers, sum rendered back to
// LSB-first digits. Covers every operand width the suite uses (<= 37 digits).
unsigned __int128 digits_to_int(const std::vector<int>& lsb_first) {
  unsigned __int128 v = 0;
  for (std::size_t i = lsb_first.size(); i > 0; --i) v = v * 10 + static_cast<unsigned>(lsb_first[i - 1]);
  return v;
}

std::vector<int> int_to_digits(unsigned __int128 v, std::size_t len) {
  std::vector<int> out(len, 0);
  for (std::size_t i = 0; i < len; ++i) {
    out[i] = static_cast<int>(v % 10);
    v /= 10;
  }
  REQUIRE(v == 0);
  return out;
}

std::vector<int> random_digits(int n, Rng& rng) {
  std::vector<int> d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = rng.range(0, 9);
  return d;
}

// Role semantics checked against the true sum: derive the carry sequence from
// the integer result and confirm each column's class predicts its behavior.
void check_profile_against_truth(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  const CarryProfile prof = carry_profile(a, b);
  REQUIRE(prof.roles.size() == n);

  const unsigned __int128 sum = digits_to_int(a) + digits_to_int(b);
  const std::vector<int> truth = int_to_digits(sum, n + 1);
  CHECK(ripple_add(a, b) == truth);

  int carry = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int s = a[i] + b[i];
    switch (prof.roles[i]) {
      case 'k': CHECK(s <= 8); break;
      case 'g': CHECK(s >= 10); break;
      case 'p': CHECK(s == 9); break;
      default: FAIL("unknown role");
    }
    // The column digit and outgoing carry the true sum implies.
    CHECK(truth[i] == (s + carry) % 10);
    const int carry_out = (s + carry >= 10) ? 1 : 0;
    // Role semantics: k kills (out 0), g generates (out 1), p propagates.
    if (prof.roles[i] == 'k') CHECK(carry_out == 0);
    if (prof.roles[i] == 'g') CHECK(carry_out == 1);
    if (prof.roles[i] == 'p') CHECK(carry_out == carry);
    carry = carry_out;
  }
  CHECK(truth[n] == carry);

  // Chain spans are exactly the maximal 'p' runs; max_chain is the longest.
  std::vector<std::pair<int, int>> runs;
  int longest = 0;
  for (std::size_t i = 0; i < n;) {
    if (prof.roles[i] != 'p') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && prof.roles[j] == 'p') ++j;
    runs.emplace_back(static_cast<int>(i), static_cast<int>(j - 1));
    longest = std::max(longest, static_cast<int>(j - i));
    i = j;
  }
  CHECK(prof.chain_spans == runs);
  CHECK(prof.max_chain == longest);
}

}  // namespace

TEST_SUITE_BEGIN("addition");

TEST_CASE("carry profile fixtures") {
  // 19 + 1 = 20: column 0 generates, column 1 kills.
  const CarryProfile p1 = carry_profile({9, 1}, {1, 0});
  CHECK(p1.roles == "gk");
  CHECK(p1.max_chain == 0);
  CHECK(p1.chain_spans.empty());

  // 199 + 1: column 0 generates, column 1 propagates (9+0), column 2 kills.
  const CarryProfile p2 = carry_profile({9, 9, 1}, {1, 0, 0});
  CHECK(p2.roles == "gpk");
  CHECK(p2.max_chain == 1);
  REQUIRE(p2.chain_spans.size() == 1);
  CHECK(p2.chain_spans[0] == std::pair<int, int>(1, 1));

  // 1999 + 1: columns 1-2 both sum to 9, a propagate run of two.
  const CarryProfile p2b = carry_profile({9, 9, 9, 1}, {1, 0, 0, 0});
  CHECK(p2b.roles == "gppk");
  CHECK(p2b.max_chain == 2);
  REQUIRE(p2b.chain_spans.size() == 1);
  CHECK(p2b.chain_spans[0] == std::pair<int, int>(1, 2));

  // All-zero operands: every column kills.
  const CarryProfile p3 = carry_profile({0, 0, 0}, {0, 0, 0});
  CHECK(p3.roles == "kkk");
  CHECK(p3.max_chain == 0);
}

TEST_CASE("profile and ripple sum agree with wide-integer truth") {
  Rng rng(2024);
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = rng.range(1, 20);
    check_profile_against_truth(random_digits(n, rng), random_digits(n, rng));
  }
}

TEST_CASE("generated instances lay out prompt and answer as documented") {
  const Vocabulary vocab = Vocabulary::for_task(Task::addition);
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.range(1, 12);
    const auto inst = gen_addition(n, derive_seed(7, static_cast<std::uint64_t>(trial)), vocab);
    REQUIRE(static_cast<int>(inst.prompt.size()) == 2 * n + 2);
    REQUIRE(static_cast<int>(inst.answer.size()) == n + 1);

    const AdditionOperands ops = parse_addition_prompt(inst.prompt, vocab);
    REQUIRE(static_cast<int>(ops.a.size()) == n);
    REQUIRE(static_cast<int>(ops.b.size()) == n);

    // Prompt renders both operands MSB-first around '+' and trailing '='.
    std::string expect;
    for (int i = n - 1; i >= 0; --i) expect += static_cast<char>('0' + ops.a[static_cast<std::size_t>(i)]);
    expect += '+';
    for (int i = n - 1; i >= 0; --i) expect += static_cast<char>('0' + ops.b[static_cast<std::size_t>(i)]);
    expect += '=';
    CHECK(vocab.decode(inst.prompt) == expect);

    // Answer is the true sum MSB-first with the carry digit in front.
    const std::vector<int> truth = int_to_digits(digits_to_int(ops.a) + digits_to_int(ops.b),
                                                 static_cast<std::size_t>(n) + 1);
    for (int pos = 0; pos <= n; ++pos) {
      const int d = addition_digit_of_pos(n, pos);
      CHECK(vocab.str(inst.answer[static_cast<std::size_t>(pos)]) ==
            std::string(1, static_cast<char>('0' + truth[static_cast<std::size_t>(d)])));
    }

    CHECK(inst.stratum("max_chain") == carry_profile(ops.a, ops.b).max_chain);
  }
}

TEST_CASE("stratified generation plants the requested chain") {
  const Vocabulary vocab = Vocabulary::for_task(Task::addition);
  for (int min_chain = 1; min_chain <= 7; ++min_chain) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto inst = gen_addition_stratum(
          8, min_chain, derive_seed(90, static_cast<std::uint64_t>(min_chain * 100 + trial)), vocab);
      const AdditionOperands ops = parse_addition_prompt(inst.prompt, vocab);
      const CarryProfile prof = carry_profile(ops.a, ops.b);
      CHECK(prof.max_chain >= min_chain);
      CHECK(inst.stratum("max_chain") == prof.max_chain);
      check_profile_against_truth(ops.a, ops.b);
    }
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const Vocabulary vocab = Vocabulary::for_task(Task::addition);
  const auto a = gen_addition(8, 424242, vocab);
  const auto b = gen_addition(8, 424242, vocab);
  CHECK(a.prompt == b.prompt);
  CHECK(a.answer == b.answer);
  CHECK(a.strata == b.strata);
  const auto c = gen_addition(8, 424243, vocab);
  CHECK(a.prompt != c.prompt);
}

TEST_CASE("digit indexing flips between string position and place value") {
  CHECK(addition_digit_of_pos(8, 0) == 8);   // leading carry digit
  CHECK(addition_digit_of_pos(8, 8) == 0);   // units digit, last in the string
  CHECK(addition_digit_of_pos(8, 3) == 5);
}

TEST_SUITE_END();
