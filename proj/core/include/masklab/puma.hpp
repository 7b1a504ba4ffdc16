#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/mask.hpp"
#include "masklab/rng.hpp"

namespace masklab {

// Stage-count schedule: linear ramp from k_start to k_end over the first
// third of training, rounded to integer, constant afterwards.
struct KSchedule {
  int k_start = 1;
  int k_end = 1;
  std::int64_t total_iters = 1;

  int at(std::int64_t iter) const;
};

// Jittered per-stage reveal count. The raw draw lies in
// [max(1, floor(L/K) - r), ceil(L/K) + r] with r = max(1, floor(L/(4K)));
// the budget clamp then guarantees every remaining stage still gets at least
// one token and the final stage absorbs the remainder, so a chain's stages
// sum to exactly the answer length.
int stage_size(int answer_len, int k, int remaining, int stages_left, Rng& rng);

// One teacher-forced chain: the instance being consumed, its current mask
// state, and the stage program it was born with.
struct PumaSlot {
  ReasoningInstance inst;
  MaskState state;
  int stage_index = 0;
  int k_current = 1;
};

PumaSlot fresh_slot(ReasoningInstance inst, int mask_id, int k);

// Applies one unmasking stage: reveals ground truth at the stage-size many
// still-masked positions with the highest top-1 confidence (ties to the
// lower position). top1 is aligned with slot.state.masked. Returns true when
// the chain is fully revealed and must be replaced before the next step.
bool advance_slot(PumaSlot& slot, const std::vector<double>& top1, Rng& rng);

// B chain slots owned by the training loop. The loss consumes the current
// states; advancement and replacement happen after, within the same step.
class PumaBuffer {
 public:
  using Source = std::function<ReasoningInstance()>;

  PumaBuffer(int slots, int mask_id) : mask_id_(mask_id), slots_(slots) {}

  void init(const Source& next, int k);
  std::vector<PumaSlot>& slots() { return slots_; }
  const std::vector<PumaSlot>& slots() const { return slots_; }
  int mask_id() const { return mask_id_; }

  // Advances every slot and replaces finished chains with fresh fully masked
  // ones at stage count k_now. top1_per_slot[i] aligns with slot i's masked set.
  void advance_all(const std::vector<std::vector<double>>& top1_per_slot, const Source& next,
                   int k_now, Rng& rng);

 private:
  int mask_id_;
  std::vector<PumaSlot> slots_;
};

}  // namespace masklab
