#include "masklab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "masklab/decode.hpp"
#include "masklab/diag.hpp"
#include "masklab/error.hpp"

namespace masklab {

namespace {

constexpr double kEmaBeta = 0.99;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::random: return "random";
    case Scheme::papl: return "papl";
    case Scheme::puma: return "puma";
  }
  fail("scheme_name: bad enum value");
}

Scheme parse_scheme(const std::string& s) {
  if (s == "random") return Scheme::random;
  if (s == "papl") return Scheme::papl;
  if (s == "puma") return Scheme::puma;
  fail("unknown training scheme: " + s);
}

Trainer::Trainer(const ModelConfig& model_cfg, const TrainConfig& cfg, const Vocabulary& vocab,
                 std::vector<ReasoningInstance> train_data,
                 std::vector<ReasoningInstance> eval_data)
    : cfg_(cfg),
      vocab_(vocab),
      train_(std::move(train_data)),
      eval_(std::move(eval_data)),
      model_(model_cfg),
      opt_(static_cast<Eigen::Index>(model_.param_count()), cfg.opt),
      rng_data_(derive_seed(cfg.seed_train, 1)),
      rng_scheme_(derive_seed(cfg.seed_train, 2)),
      schedule_{cfg.k_start, cfg.k_end, cfg.iters},
      buffer_(cfg.batch, vocab.mask_id()) {
  check(!train_.empty(), "trainer: empty training set");
  check(cfg_.batch >= 1 && cfg_.iters >= 1, "trainer: bad batch/iteration counts");
  check(model_cfg.vocab_size == vocab_.size(), "trainer: model vocab disagrees with vocabulary");
  if (!cfg_.out_dir.empty()) std::filesystem::create_directories(cfg_.out_dir);
}

ReasoningInstance Trainer::draw_instance() {
  return train_[static_cast<std::size_t>(rng_data_.below(train_.size()))];
}

void Trainer::init() {
  Rng rng(cfg_.seed_model);
  model_.init(rng);
  if (cfg_.scheme == Scheme::puma) {
    buffer_.init([this] { return draw_instance(); }, schedule_.at(0));
  }
  if (!cfg_.out_dir.empty()) {
    train_log_.open(cfg_.out_dir / "train_log.csv", std::ios::trunc);
    train_log_ << "iteration,loss,scheme,k_current\n";
    if (cfg_.eval_cadence > 0) {
      curve_.open(cfg_.out_dir / "curve.csv", std::ios::trunc);
      curve_ << "iteration,loss_ema,accuracy\n";
    }
  }
}

void Trainer::resume(const Checkpoint& ckpt) {
  check(ckpt.config_hash == cfg_.config_hash, "checkpoint was produced by a different config (hash "
                                              + ckpt.config_hash + " vs " + cfg_.config_hash + ")");
  check(ckpt.params.size() == model_.param_count(), "checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < ckpt.params.size(); ++i)
    model_.params()(static_cast<Eigen::Index>(i)) = ckpt.params[i];
  AdamW<float>::Vector m(static_cast<Eigen::Index>(ckpt.m1.size()));
  AdamW<float>::Vector v(static_cast<Eigen::Index>(ckpt.m2.size()));
  for (std::size_t i = 0; i < ckpt.m1.size(); ++i) m(static_cast<Eigen::Index>(i)) = ckpt.m1[i];
  for (std::size_t i = 0; i < ckpt.m2.size(); ++i) v(static_cast<Eigen::Index>(i)) = ckpt.m2[i];
  opt_.restore(ckpt.opt_t, m, v);
  rng_data_.load(ckpt.rng.at("data"));
  rng_scheme_.load(ckpt.rng.at("scheme"));
  iter_ = ckpt.iteration;
  ema_ = ckpt.loss_ema;
  has_ema_ = ckpt.has_ema;
  if (cfg_.scheme == Scheme::puma) {
    check(!ckpt.puma_slots.empty(), "checkpoint lacks buffered chains for the puma scheme");
    std::vector<PumaSlot>& slots = buffer_.slots();
    check(ckpt.puma_slots.size() == slots.size(), "checkpoint buffer size mismatch");
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const PumaSlotState& s = ckpt.puma_slots[i];
      PumaSlot slot;
      slot.inst = s.inst;
      slot.stage_index = s.stage_index;
      slot.k_current = s.k_current;
      slot.state.lambda = 1.0;
      slot.state.masked = s.masked;
      slot.state.tokens = s.inst.prompt;
      slot.state.tokens.insert(slot.state.tokens.end(), s.inst.answer.begin(),
                               s.inst.answer.end());
      for (int pos : s.masked) slot.state.tokens[static_cast<std::size_t>(pos)] = vocab_.mask_id();
      slots[i] = std::move(slot);
    }
  }
  if (!cfg_.out_dir.empty()) {
    train_log_.open(cfg_.out_dir / "train_log.csv", std::ios::app);
    if (cfg_.eval_cadence > 0) curve_.open(cfg_.out_dir / "curve.csv", std::ios::app);
  }
}

Checkpoint Trainer::snapshot() const {
  Checkpoint ckpt;
  ckpt.config_hash = cfg_.config_hash;
  ckpt.model = model_.config();
  ckpt.iteration = iter_;
  ckpt.opt_t = opt_.iterations();
  ckpt.loss_ema = ema_;
  ckpt.has_ema = has_ema_;
  ckpt.rng["data"] = rng_data_.save();
  ckpt.rng["scheme"] = rng_scheme_.save();
  if (cfg_.scheme == Scheme::puma) {
    for (const PumaSlot& slot : buffer_.slots()) {
      PumaSlotState s;
      s.inst = slot.inst;
      s.masked = slot.state.masked;
      s.stage_index = slot.stage_index;
      s.k_current = slot.k_current;
      ckpt.puma_slots.push_back(std::move(s));
    }
  }
  const auto& p = model_.params();
  const auto& m = opt_.moment1();
  const auto& v = opt_.moment2();
  ckpt.params.assign(p.data(), p.data() + p.size());
  ckpt.m1.assign(m.data(), m.data() + m.size());
  ckpt.m2.assign(v.data(), v.data() + v.size());
  return ckpt;
}

double Trainer::step_masked() {
  const int B = cfg_.batch;
  std::vector<ReasoningInstance> batch;
  std::vector<MaskState> states;
  batch.reserve(static_cast<std::size_t>(B));
  states.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    batch.push_back(draw_instance());
    states.push_back(sample_random_mask(batch.back(), vocab_.mask_id(), rng_scheme_));
  }
  const int len = batch.front().seq_len();
  std::vector<int> tokens;
  tokens.reserve(static_cast<std::size_t>(B) * len);
  for (const MaskState& st : states) tokens.insert(tokens.end(), st.tokens.begin(), st.tokens.end());

  model_.forward(tokens, B, len, ws_);
  d_logits_.setZero(ws_.logits.rows(), ws_.logits.cols());
  double loss = 0.0;
  const double grad_scale = 1.0 / B;
  for (int b = 0; b < B; ++b) {
    const ReasoningInstance& inst = batch[static_cast<std::size_t>(b)];
    const MaskState& st = states[static_cast<std::size_t>(b)];
    std::vector<int> target = inst.prompt;
    target.insert(target.end(), inst.answer.begin(), inst.answer.end());
    std::vector<double> w;
    if (cfg_.scheme == Scheme::papl) {
      w = papl_weights(true_logprobs(ws_.logits, b * len, st.masked, target), cfg_.papl);
    } else {
      w = mdm_weights(st.masked.size(), st.lambda);
    }
    loss += weighted_masked_ce(ws_.logits, b * len, st.masked, target, w, grad_scale, &d_logits_);
  }
  loss /= B;
  model_.zero_grads();
  model_.backward(tokens, B, len, ws_, d_logits_);
  opt_.step(model_.params(), model_.grads());
  return loss;
}

double Trainer::step_puma() {
  std::vector<PumaSlot>& slots = buffer_.slots();
  const int B = static_cast<int>(slots.size());
  const int len = slots.front().inst.seq_len();
  std::vector<int> tokens;
  tokens.reserve(static_cast<std::size_t>(B) * len);
  for (const PumaSlot& slot : slots)
    tokens.insert(tokens.end(), slot.state.tokens.begin(), slot.state.tokens.end());

  // One forward serves both the loss over each chain's masked remainder and
  // the confidence ranking that drives the next unmasking stage.
  model_.forward(tokens, B, len, ws_);
  d_logits_.setZero(ws_.logits.rows(), ws_.logits.cols());
  double loss = 0.0;
  const double grad_scale = 1.0 / B;
  std::vector<std::vector<double>> top1(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const PumaSlot& slot = slots[static_cast<std::size_t>(b)];
    std::vector<int> target = slot.inst.prompt;
    target.insert(target.end(), slot.inst.answer.begin(), slot.inst.answer.end());
    // realized mask fraction |M|/L stands in for the sampled lambda
    const double lambda_hat = static_cast<double>(slot.state.masked.size()) /
                              static_cast<double>(slot.inst.answer.size());
    const std::vector<double> w(slot.state.masked.size(), 1.0 / lambda_hat);
    loss += weighted_masked_ce(ws_.logits, b * len, slot.state.masked, target, w, grad_scale,
                               &d_logits_);
    std::vector<double>& conf = top1[static_cast<std::size_t>(b)];
    conf.reserve(slot.state.masked.size());
    for (int pos : slot.state.masked) {
      const std::vector<double> lp = row_logprobs(ws_.logits.row(b * len + pos));
      conf.push_back(std::exp(*std::max_element(lp.begin(), lp.end())));
    }
  }
  loss /= B;
  model_.zero_grads();
  model_.backward(tokens, B, len, ws_, d_logits_);
  opt_.step(model_.params(), model_.grads());
  buffer_.advance_all(top1, [this] { return draw_instance(); }, schedule_.at(iter_), rng_scheme_);
  return loss;
}

double Trainer::step() {
  const double loss =
      cfg_.scheme == Scheme::puma ? step_puma() : step_masked();
  check(std::isfinite(loss), "training aborted: non-finite loss at iteration " +
                                 std::to_string(iter_ + 1) + " (scheme " +
                                 scheme_name(cfg_.scheme) + ")");
  ema_ = has_ema_ ? kEmaBeta * ema_ + (1.0 - kEmaBeta) * loss : loss;
  has_ema_ = true;
  ++iter_;
  return loss;
}

double Trainer::eval_accuracy() {
  check(!eval_.empty(), "trainer: no eval instances configured");
  ModelProbSource source(model_);
  PolicySpec spec;  // confidence
  const std::vector<Trajectory> trajs =
      decode_chunked(source, eval_, spec, vocab_, derive_seed(cfg_.seed_train, 0xE7A1));
  return trajectory_accuracy(trajs, eval_, vocab_, metric_for(eval_.front().task));
}

void Trainer::run() {
  while (iter_ < cfg_.iters) {
    const std::int64_t k_now = cfg_.scheme == Scheme::puma ? schedule_.at(iter_) : 0;
    const double loss = step();
    if (train_log_.is_open()) {
      train_log_ << iter_ << "," << fmt(loss) << "," << scheme_name(cfg_.scheme) << "," << k_now
                 << "\n";
    }
    const bool at_eval = cfg_.eval_cadence > 0 && iter_ % cfg_.eval_cadence == 0;
    if (at_eval && curve_.is_open()) {
      curve_ << iter_ << "," << fmt(ema_) << "," << fmt(eval_accuracy()) << "\n";
      curve_.flush();
    }
    const bool at_ckpt = cfg_.checkpoint_cadence > 0 && iter_ % cfg_.checkpoint_cadence == 0;
    if (at_ckpt && !cfg_.out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "ckpt_%08lld.bin", static_cast<long long>(iter_));
      save_checkpoint(cfg_.out_dir / name, snapshot());
    }
  }
  if (!cfg_.out_dir.empty()) {
    save_checkpoint(cfg_.out_dir / "ckpt_final.bin", snapshot());
    train_log_.flush();
    if (curve_.is_open()) curve_.flush();
  }
}

}  // namespace masklab
