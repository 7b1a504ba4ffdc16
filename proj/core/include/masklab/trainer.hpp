#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "masklab/adamw.hpp"
#include "masklab/checkpoint.hpp"
#include "masklab/dataset.hpp"
#include "masklab/losses.hpp"
#include "masklab/model.hpp"
#include "masklab/puma.hpp"
#include "masklab/vocab.hpp"

namespace masklab {

enum class Scheme { random, papl, puma };

const char* scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);

struct TrainConfig {
  Scheme scheme = Scheme::random;
  PaplConfig papl;
  int k_start = 1, k_end = 1;  // puma stage-count schedule endpoints
  int batch = 32;              // doubles as the puma buffer size
  std::int64_t iters = 1000;
  AdamWConfig<float> opt;
  std::uint64_t seed_model = 1;
  std::uint64_t seed_train = 2;
  std::int64_t eval_cadence = 0;       // 0 disables the accuracy curve
  std::int64_t checkpoint_cadence = 0; // 0 keeps only the final checkpoint
  std::filesystem::path out_dir;
  std::string config_hash;
};

// Single-process training loop over one scheme. Owns the model, optimizer,
// RNG streams (data order and mask/stage draws are separate streams so the
// schemes stay comparable under a shared seed), the puma buffer when active,
// and the train_log/curve CSV emitters.
class Trainer {
 public:
  Trainer(const ModelConfig& model_cfg, const TrainConfig& cfg, const Vocabulary& vocab,
          std::vector<ReasoningInstance> train_data, std::vector<ReasoningInstance> eval_data);

  // Fresh start: initializes parameters from seed_model and truncates logs.
  void init();
  // Continues from a snapshot; logs are appended. The checkpoint must carry
  // the same config hash and model shape.
  void resume(const Checkpoint& ckpt);

  // One gradient step; returns the batch loss.
  double step();
  // Steps to cfg.iters, emitting logs, curve points, and checkpoints.
  void run();

  std::int64_t iteration() const { return iter_; }
  const Transformer<float>& model() const { return model_; }
  Transformer<float>& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  Checkpoint snapshot() const;

  // Confidence-decode accuracy on the held-out eval set (task metric).
  double eval_accuracy();

 private:
  ReasoningInstance draw_instance();
  double step_masked();  // random + papl
  double step_puma();

  TrainConfig cfg_;
  Vocabulary vocab_;
  std::vector<ReasoningInstance> train_;
  std::vector<ReasoningInstance> eval_;
  Transformer<float> model_;
  AdamW<float> opt_;
  Workspace<float> ws_;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> d_logits_;
  Rng rng_data_;
  Rng rng_scheme_;
  KSchedule schedule_;
  PumaBuffer buffer_;
  std::int64_t iter_ = 0;
  double ema_ = 0.0;
  bool has_ema_ = false;
  std::ofstream train_log_;
  std::ofstream curve_;
};

}  // namespace masklab
