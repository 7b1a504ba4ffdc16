#include "masklab/puma.hpp"

#include <algorithm>
#include <cmath>

#include "masklab/error.hpp"

namespace masklab {

int KSchedule::at(std::int64_t iter) const {
  check(k_start >= 1 && k_end >= 1 && total_iters >= 1, "k-schedule: bad parameters");
  const double ramp_end = static_cast<double>(total_iters) / 3.0;
  const double frac = std::min(1.0, static_cast<double>(iter) / ramp_end);
  return k_start + static_cast<int>(std::llround((k_end - k_start) * frac));
}

int stage_size(int answer_len, int k, int remaining, int stages_left, Rng& rng) {
  check(k >= 1 && k <= answer_len, "stage_size: need 1 <= K <= answer length");
  check(stages_left >= 1 && remaining >= stages_left, "stage_size: budget cannot cover stages");
  if (stages_left == 1) return remaining;
  const int lo_base = answer_len / k;
  const int hi_base = (answer_len + k - 1) / k;
  const int r = std::max(1, answer_len / (4 * k));
  const int draw = rng.range(std::max(1, lo_base - r), hi_base + r);
  return std::clamp(draw, 1, remaining - (stages_left - 1));
}

PumaSlot fresh_slot(ReasoningInstance inst, int mask_id, int k) {
  PumaSlot slot;
  slot.k_current = std::clamp(k, 1, static_cast<int>(inst.answer.size()));
  slot.state = full_mask(inst, mask_id);
  slot.inst = std::move(inst);
  slot.stage_index = 0;
  return slot;
}

bool advance_slot(PumaSlot& slot, const std::vector<double>& top1, Rng& rng) {
  const int remaining = static_cast<int>(slot.state.masked.size());
  check(remaining > 0, "puma advance: chain already finished");
  check(top1.size() == slot.state.masked.size(), "puma advance: confidence size mismatch");
  const int stages_left = slot.k_current - slot.stage_index;
  const int n = stage_size(static_cast<int>(slot.inst.answer.size()), slot.k_current, remaining,
                           stages_left, rng);

  std::vector<int> order(top1.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (top1[static_cast<std::size_t>(a)] != top1[static_cast<std::size_t>(b)])
      return top1[static_cast<std::size_t>(a)] > top1[static_cast<std::size_t>(b)];
    return slot.state.masked[static_cast<std::size_t>(a)] <
           slot.state.masked[static_cast<std::size_t>(b)];
  });

  const int off = slot.inst.answer_offset();
  std::vector<bool> reveal(top1.size(), false);
  for (int i = 0; i < n; ++i) reveal[static_cast<std::size_t>(order[i])] = true;
  std::vector<int> kept;
  kept.reserve(top1.size() - static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < reveal.size(); ++i) {
    const int pos = slot.state.masked[i];
    if (reveal[i]) {
      slot.state.tokens[pos] = slot.inst.answer[static_cast<std::size_t>(pos - off)];
    } else {
      kept.push_back(pos);
    }
  }
  slot.state.masked = std::move(kept);
  ++slot.stage_index;
  return slot.state.masked.empty();
}

void PumaBuffer::init(const Source& next, int k) {
  for (PumaSlot& slot : slots_) slot = fresh_slot(next(), mask_id_, k);
}

void PumaBuffer::advance_all(const std::vector<std::vector<double>>& top1_per_slot,
                             const Source& next, int k_now, Rng& rng) {
  check(top1_per_slot.size() == slots_.size(), "puma advance: slot count mismatch");
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (advance_slot(slots_[i], top1_per_slot[i], rng)) {
      slots_[i] = fresh_slot(next(), mask_id_, k_now);
    }
  }
}

}  // namespace masklab
