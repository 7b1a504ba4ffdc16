#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/model.hpp"

namespace masklab {

// One buffered chain as stored on disk: the mask pattern is recoverable from
// the instance plus the masked set, so tokens are not duplicated.
struct PumaSlotState {
  ReasoningInstance inst;
  std::vector<int> masked;
  int stage_index = 0;
  int k_current = 1;
};

// Versioned container: a JSON header (config echo, counters, RNG engine
// states, buffered chains) followed by raw float blobs for parameters and
// optimizer moments. Save/load round-trips are bit-identical.
struct Checkpoint {
  std::string config_hash;
  ModelConfig model;
  std::int64_t iteration = 0;
  std::int64_t opt_t = 0;
  double loss_ema = 0.0;
  bool has_ema = false;
  std::map<std::string, std::string> rng;  // stream name -> serialized engine
  std::vector<PumaSlotState> puma_slots;
  std::vector<float> params, m1, m2;
};

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace masklab
