#include "masklab/decode.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "masklab/error.hpp"
#include "masklab/policies.hpp"

namespace masklab {

namespace {
using Json = nlohmann::ordered_json;
}  // namespace

std::string policy_name(const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::confidence: return "confidence";
    case PolicyKind::random: return "random";
    case PolicyKind::lsb_first: return "lsb_first";
    case PolicyKind::dead_end_fill: return "dead_end_fill";
    case PolicyKind::layered_postorder: return "layered_postorder";
    case PolicyKind::step_sequential: return "step_sequential";
    case PolicyKind::constraint_propagation: return "constraint_propagation";
    case PolicyKind::technique_difficulty: return "technique_difficulty";
    case PolicyKind::scaffold: {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "scaffold:%g", spec.scaffold_fraction);
      return buf;
    }
  }
  fail("policy_name: bad policy kind");
}

PolicyKind oracle_policy_for(Task task) {
  switch (task) {
    case Task::addition: return PolicyKind::lsb_first;
    case Task::maze: return PolicyKind::dead_end_fill;
    case Task::listops: return PolicyKind::layered_postorder;
    case Task::countdown: return PolicyKind::step_sequential;
    case Task::sudoku: return PolicyKind::constraint_propagation;
  }
  fail("oracle_policy_for: bad task");
}

PolicySpec parse_policy(const std::string& text, Task task) {
  PolicySpec spec;
  if (text.rfind("scaffold", 0) == 0) {
    spec.kind = PolicyKind::scaffold;
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
      try {
        spec.scaffold_fraction = std::stod(text.substr(colon + 1));
      } catch (const std::exception&) {
        fail("bad scaffold fraction in policy: " + text);
      }
      check(spec.scaffold_fraction >= 0.0 && spec.scaffold_fraction <= 1.0,
            "scaffold fraction outside [0,1]: " + text);
    }
    return spec;
  }
  if (text == "oracle") {
    spec.kind = oracle_policy_for(task);
    return spec;
  }
  for (PolicyKind k :
       {PolicyKind::confidence, PolicyKind::random, PolicyKind::lsb_first,
        PolicyKind::dead_end_fill, PolicyKind::layered_postorder, PolicyKind::step_sequential,
        PolicyKind::constraint_propagation, PolicyKind::technique_difficulty}) {
    spec.kind = k;
    if (policy_name(spec) == text) return spec;
  }
  fail("unknown decode policy: " + text);
}

void ModelProbSource::predict(const std::vector<int>& tokens, int batch, int len,
                              ProbMatrix& probs) {
  // const_cast is confined to the workspace-filling forward; parameters are
  // not touched.
  const_cast<Transformer<float>&>(model_).forward(tokens, batch, len, ws_);
  const Eigen::Index rows = ws_.logits.rows();
  const Eigen::Index v = ws_.logits.cols();
  probs.resize(rows, v);
  for (Eigen::Index r = 0; r < rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < v; ++j) mx = std::max(mx, static_cast<double>(ws_.logits(r, j)));
    double sum = 0.0;
    for (Eigen::Index j = 0; j < v; ++j) {
      const double e = std::exp(static_cast<double>(ws_.logits(r, j)) - mx);
      probs(r, j) = e;
      sum += e;
    }
    probs.row(r) /= sum;
  }
}

namespace {

struct DecodeState {
  PolicyPlan plan;
  Rng rng{0};
  std::vector<bool> masked;  // per answer index
  Trajectory traj;
};

int select_position(const DecodeState& st, const LogitSource::ProbMatrix& probs, int row0, int off,
                    Rng& rng) {
  int best_class = std::numeric_limits<int>::max();
  const int n = static_cast<int>(st.masked.size());
  for (int i = 0; i < n; ++i) {
    if (!st.masked[static_cast<std::size_t>(i)]) continue;
    const int c = st.plan.class_of.empty() ? 0 : st.plan.class_of[static_cast<std::size_t>(i)];
    best_class = std::min(best_class, c);
  }
  check(best_class != std::numeric_limits<int>::max(), "decode: no masked position left");

  if (st.plan.random_within_class) {
    std::vector<int> candidates;
    for (int i = 0; i < n; ++i) {
      if (!st.masked[static_cast<std::size_t>(i)]) continue;
      const int c = st.plan.class_of.empty() ? 0 : st.plan.class_of[static_cast<std::size_t>(i)];
      if (c == best_class) candidates.push_back(i);
    }
    return candidates[rng.below(candidates.size())];
  }

  int chosen = -1;
  double chosen_top1 = -1.0;
  for (int i = 0; i < n; ++i) {
    if (!st.masked[static_cast<std::size_t>(i)]) continue;
    const int c = st.plan.class_of.empty() ? 0 : st.plan.class_of[static_cast<std::size_t>(i)];
    if (c != best_class) continue;
    if (!st.plan.confidence_within_class) return i;  // lowest index in the class
    const double top1 = probs.row(row0 + off + i).maxCoeff();
    if (top1 > chosen_top1) {
      chosen_top1 = top1;
      chosen = i;
    }
  }
  return chosen;
}

}  // namespace

std::vector<Trajectory> decode_batch(LogitSource& source,
                                     const std::vector<ReasoningInstance>& instances,
                                     const PolicySpec& spec, const Vocabulary& vocab,
                                     std::uint64_t seed, std::uint64_t first_index) {
  check(!instances.empty(), "decode: empty instance list");
  const int seq_len = instances.front().seq_len();
  const int off = instances.front().answer_offset();
  const int ans_len = seq_len - off;
  const int batch = static_cast<int>(instances.size());
  const std::string pname = policy_name(spec);

  std::vector<DecodeState> states(instances.size());
  std::vector<int> tokens(static_cast<std::size_t>(batch) * seq_len);
  for (int b = 0; b < batch; ++b) {
    const ReasoningInstance& inst = instances[static_cast<std::size_t>(b)];
    check(inst.seq_len() == seq_len && inst.answer_offset() == off,
          "decode: instances must share sequence layout");
    DecodeState& st = states[static_cast<std::size_t>(b)];
    st.rng = Rng(derive_seed(seed, first_index + static_cast<std::uint64_t>(b)));
    st.plan = build_policy_plan(spec, inst, vocab, st.rng);
    st.masked.assign(static_cast<std::size_t>(ans_len), true);
    st.traj.task = task_name(inst.task);
    st.traj.policy = pname;
    st.traj.instance_seed = inst.seed;

    int* seq = tokens.data() + static_cast<std::size_t>(b) * seq_len;
    for (int i = 0; i < off; ++i) seq[i] = inst.prompt[static_cast<std::size_t>(i)];
    for (int i = 0; i < ans_len; ++i) seq[off + i] = vocab.mask_id();
    for (int p : st.plan.prereveal) {
      check(p >= 0 && p < ans_len, "decode: pre-reveal index out of range");
      check(st.masked[static_cast<std::size_t>(p)], "decode: duplicate pre-reveal index");
      seq[off + p] = inst.answer[static_cast<std::size_t>(p)];
      st.masked[static_cast<std::size_t>(p)] = false;
      st.traj.prereveal.push_back(off + p);
    }
    check(st.traj.prereveal.size() == states[0].traj.prereveal.size(),
          "decode: lockstep batch requires equal pre-reveal counts");
  }

  const int steps = ans_len - static_cast<int>(states[0].traj.prereveal.size());
  LogitSource::ProbMatrix probs;
  for (int step = 0; step < steps; ++step) {
    source.predict(tokens, batch, seq_len, probs);
    for (int b = 0; b < batch; ++b) {
      DecodeState& st = states[static_cast<std::size_t>(b)];
      const ReasoningInstance& inst = instances[static_cast<std::size_t>(b)];
      const int row0 = b * seq_len;
      const int sel = select_position(st, probs, row0, off, st.rng);
      int tok = 0;
      double best = -1.0;
      for (Eigen::Index j = 0; j < probs.cols(); ++j) {
        const double p = probs(row0 + off + sel, j);
        if (p > best) {  // strict: ties keep the lowest token index
          best = p;
          tok = static_cast<int>(j);
        }
      }
      tokens[static_cast<std::size_t>(row0 + off + sel)] = tok;
      st.masked[static_cast<std::size_t>(sel)] = false;
      st.traj.steps.push_back(
          {step, off + sel, tok, inst.answer[static_cast<std::size_t>(sel)], best});
    }
  }

  std::vector<Trajectory> out;
  out.reserve(instances.size());
  for (int b = 0; b < batch; ++b) {
    DecodeState& st = states[static_cast<std::size_t>(b)];
    const int* seq = tokens.data() + static_cast<std::size_t>(b) * seq_len;
    st.traj.final_tokens.assign(seq, seq + seq_len);
    st.traj.exact_match = std::equal(instances[static_cast<std::size_t>(b)].answer.begin(),
                                     instances[static_cast<std::size_t>(b)].answer.end(),
                                     seq + off);
    out.push_back(std::move(st.traj));
  }
  return out;
}

std::vector<Trajectory> decode_chunked(LogitSource& source,
                                       const std::vector<ReasoningInstance>& instances,
                                       const PolicySpec& spec, const Vocabulary& vocab,
                                       std::uint64_t seed, int chunk) {
  check(chunk > 0, "decode: chunk size must be positive");
  std::vector<Trajectory> out;
  out.reserve(instances.size());
  for (std::size_t base = 0; base < instances.size(); base += static_cast<std::size_t>(chunk)) {
    const std::size_t n = std::min(instances.size() - base, static_cast<std::size_t>(chunk));
    const std::vector<ReasoningInstance> slice(instances.begin() + static_cast<std::ptrdiff_t>(base),
                                               instances.begin() +
                                                   static_cast<std::ptrdiff_t>(base + n));
    std::vector<Trajectory> part = decode_batch(source, slice, spec, vocab, seed, base);
    for (Trajectory& t : part) out.push_back(std::move(t));
  }
  return out;
}

void save_trajectories(const std::filesystem::path& file, const std::vector<Trajectory>& trajs,
                       const std::string& config_hash) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream os(tmp);
    check(os.good(), "cannot write trajectories: " + file.string());
    Json header;
    header["config_hash"] = config_hash;
    header["count"] = trajs.size();
    os << header.dump() << "\n";
    for (const Trajectory& t : trajs) {
      Json j;
      j["task"] = t.task;
      j["policy"] = t.policy;
      j["seed"] = t.instance_seed;
      j["prereveal"] = t.prereveal;
      Json steps = Json::array();
      for (const TrajectoryStep& s : t.steps) {
        steps.push_back(Json::array({s.step, s.position, s.token, s.truth, s.top1}));
      }
      j["steps"] = std::move(steps);
      j["final"] = t.final_tokens;
      j["exact"] = t.exact_match;
      os << j.dump() << "\n";
    }
    check(os.good(), "write failed: " + file.string());
  }
  std::filesystem::rename(tmp, file);
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& file) {
  std::ifstream is(file);
  check(is.good(), "cannot open trajectories: " + file.string());
  std::vector<Trajectory> out;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception& e) {
      fail(file.string() + ":" + std::to_string(line_no) + ": bad trajectory line: " + e.what());
    }
    if (line_no == 1 && j.contains("config_hash")) continue;  // header
    Trajectory t;
    t.task = j.at("task").get<std::string>();
    t.policy = j.at("policy").get<std::string>();
    t.instance_seed = j.at("seed").get<std::uint64_t>();
    t.prereveal = j.at("prereveal").get<std::vector<int>>();
    for (const Json& s : j.at("steps")) {
      check(s.is_array() && s.size() == 5, "trajectory step must have 5 fields");
      t.steps.push_back({s[0].get<int>(), s[1].get<int>(), s[2].get<int>(), s[3].get<int>(),
                         s[4].get<double>()});
    }
    t.final_tokens = j.at("final").get<std::vector<int>>();
    t.exact_match = j.at("exact").get<bool>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace masklab
