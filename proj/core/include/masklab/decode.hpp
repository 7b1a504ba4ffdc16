#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/model.hpp"
#include "masklab/rng.hpp"
#include "masklab/vocab.hpp"

namespace masklab {

enum class PolicyKind {
  confidence,
  random,
  lsb_first,
  dead_end_fill,
  layered_postorder,
  step_sequential,
  constraint_propagation,
  technique_difficulty,
  scaffold,
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::confidence;
  double scaffold_fraction = 0.5;  // scaffold only
};

std::string policy_name(const PolicySpec& spec);
// Accepts a kind name, or "scaffold:<fraction>", or the umbrella name
// "oracle" which resolves to the task's logical-flow policy.
PolicySpec parse_policy(const std::string& text, Task task);
PolicyKind oracle_policy_for(Task task);

// Reveal plan for one instance. Positions are answer-region indices. Lower
// class decodes first; within a class the winner is the highest top-1
// probability (ties to the lower index), a seeded uniform draw for the
// random policy, or the lower index when confidence is disabled. Static
// solver orders use singleton classes.
struct PolicyPlan {
  std::vector<int> class_of;  // empty means one class for every position
  bool confidence_within_class = true;
  bool random_within_class = false;
  std::vector<int> prereveal;  // revealed as ground truth before stepping
};

// Probability source abstraction so decode tests can run against oracles.
// probs receives softmaxed rows, shape (batch*len, vocab).
class LogitSource {
 public:
  using ProbMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  virtual ~LogitSource() = default;
  virtual int vocab() const = 0;
  virtual void predict(const std::vector<int>& tokens, int batch, int len, ProbMatrix& probs) = 0;
};

// Adapter over the trained float model; softmax is taken in double so policy
// comparisons are exact.
class ModelProbSource : public LogitSource {
 public:
  explicit ModelProbSource(const Transformer<float>& model) : model_(model) {}
  int vocab() const override { return model_.config().vocab_size; }
  void predict(const std::vector<int>& tokens, int batch, int len, ProbMatrix& probs) override;

 private:
  const Transformer<float>& model_;
  Workspace<float> ws_;
};

struct TrajectoryStep {
  int step = 0;      // 0-indexed commit step
  int position = 0;  // absolute sequence position
  int token = 0;     // committed (argmax) token
  int truth = 0;     // ground-truth token at that position
  double top1 = 0.0; // probability of the committed token
};

struct Trajectory {
  std::string task;
  std::string policy;
  std::uint64_t instance_seed = 0;
  std::vector<int> prereveal;  // absolute positions revealed before stepping
  std::vector<TrajectoryStep> steps;
  std::vector<int> final_tokens;
  bool exact_match = false;  // full answer-region equality
};

// Lockstep greedy decode: every instance starts fully masked, one position is
// committed per step by argmax, and the whole batch is re-forwarded after
// each commit. All instances must share prompt/answer lengths. Instance b
// draws policy randomness from derive_seed(seed, first_index + b), so callers
// slicing a larger set keep per-instance streams stable.
std::vector<Trajectory> decode_batch(LogitSource& source,
                                     const std::vector<ReasoningInstance>& instances,
                                     const PolicySpec& spec, const Vocabulary& vocab,
                                     std::uint64_t seed, std::uint64_t first_index = 0);

// Splits the set into fixed-size slices to bound forward-pass memory; the
// result is element-for-element identical to one monolithic decode_batch call.
std::vector<Trajectory> decode_chunked(LogitSource& source,
                                       const std::vector<ReasoningInstance>& instances,
                                       const PolicySpec& spec, const Vocabulary& vocab,
                                       std::uint64_t seed, int chunk = 32);

void save_trajectories(const std::filesystem::path& file, const std::vector<Trajectory>& trajs,
                       const std::string& config_hash);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& file);

}  // namespace masklab
