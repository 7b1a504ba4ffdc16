#include "masklab/checkpoint.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

#include "masklab/error.hpp"

namespace masklab {

namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'M', 'L', 'A', 'B', 'C', 'K', 'P', '1'};

Json strata_to_json(const std::map<std::string, double>& strata) {
  Json j = Json::object();
  for (const auto& [k, v] : strata) {
    if (v == std::floor(v) && std::abs(v) < 9.0e15) {
      j[k] = static_cast<std::int64_t>(v);
    } else {
      j[k] = v;
    }
  }
  return j;
}

Json instance_to_json(const ReasoningInstance& inst) {
  Json j;
  j["task"] = task_name(inst.task);
  j["prompt"] = inst.prompt;
  j["answer"] = inst.answer;
  j["strata"] = strata_to_json(inst.strata);
  j["seed"] = inst.seed;
  return j;
}

ReasoningInstance instance_from_json(const Json& j) {
  ReasoningInstance inst;
  inst.task = parse_task(j.at("task").get<std::string>());
  inst.prompt = j.at("prompt").get<std::vector<int>>();
  inst.answer = j.at("answer").get<std::vector<int>>();
  for (const auto& [k, v] : j.at("strata").items()) inst.strata[k] = v.get<double>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  return inst;
}

Json model_to_json(const ModelConfig& m) {
  Json j;
  j["layers"] = m.layers;
  j["heads"] = m.heads;
  j["embed_dim"] = m.embed_dim;
  j["vocab_size"] = m.vocab_size;
  j["max_seq_len"] = m.max_seq_len;
  j["mlp_ratio"] = m.mlp_ratio;
  return j;
}

ModelConfig model_from_json(const Json& j) {
  ModelConfig m;
  m.layers = j.at("layers").get<int>();
  m.heads = j.at("heads").get<int>();
  m.embed_dim = j.at("embed_dim").get<int>();
  m.vocab_size = j.at("vocab_size").get<int>();
  m.max_seq_len = j.at("max_seq_len").get<int>();
  m.mlp_ratio = j.at("mlp_ratio").get<int>();
  return m;
}

void write_blob(std::ofstream& os, const std::vector<float>& v) {
  const std::uint64_t n = v.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
}

std::vector<float> read_blob(std::ifstream& is, const std::string& what) {
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  check(is.good(), "checkpoint: truncated " + what + " size");
  std::vector<float> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
  check(is.good(), "checkpoint: truncated " + what + " blob");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt) {
  Json header;
  header["format"] = 1;
  header["config_hash"] = ckpt.config_hash;
  header["model"] = model_to_json(ckpt.model);
  header["iteration"] = ckpt.iteration;
  header["opt_t"] = ckpt.opt_t;
  if (ckpt.has_ema) {
    header["loss_ema"] = ckpt.loss_ema;
  } else {
    header["loss_ema"] = nullptr;
  }
  header["rng"] = ckpt.rng;
  Json slots = Json::array();
  for (const PumaSlotState& s : ckpt.puma_slots) {
    Json j;
    j["inst"] = instance_to_json(s.inst);
    j["masked"] = s.masked;
    j["stage"] = s.stage_index;
    j["k"] = s.k_current;
    slots.push_back(std::move(j));
  }
  header["puma"] = std::move(slots);
  const std::string text = header.dump();

  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    check(os.good(), "cannot write checkpoint: " + file.string());
    os.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_blob(os, ckpt.params);
    write_blob(os, ckpt.m1);
    write_blob(os, ckpt.m2);
    check(os.good(), "checkpoint write failed: " + file.string());
  }
  std::filesystem::rename(tmp, file);
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  check(is.good(), "cannot open checkpoint: " + file.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  check(is.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
        "not a checkpoint file: " + file.string());
  std::uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), sizeof(len));
  check(is.good(), "checkpoint: truncated header length");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  check(is.good(), "checkpoint: truncated header");

  Json header;
  try {
    header = Json::parse(text);
  } catch (const std::exception& e) {
    fail("checkpoint header is not valid JSON: " + std::string(e.what()));
  }
  check(header.at("format").get<int>() == 1, "unsupported checkpoint format version");

  Checkpoint ckpt;
  ckpt.config_hash = header.at("config_hash").get<std::string>();
  ckpt.model = model_from_json(header.at("model"));
  ckpt.iteration = header.at("iteration").get<std::int64_t>();
  ckpt.opt_t = header.at("opt_t").get<std::int64_t>();
  if (!header.at("loss_ema").is_null()) {
    ckpt.loss_ema = header.at("loss_ema").get<double>();
    ckpt.has_ema = true;
  }
  for (const auto& [k, v] : header.at("rng").items()) ckpt.rng[k] = v.get<std::string>();
  for (const Json& j : header.at("puma")) {
    PumaSlotState s;
    s.inst = instance_from_json(j.at("inst"));
    s.masked = j.at("masked").get<std::vector<int>>();
    s.stage_index = j.at("stage").get<int>();
    s.k_current = j.at("k").get<int>();
    ckpt.puma_slots.push_back(std::move(s));
  }
  ckpt.params = read_blob(is, "params");
  ckpt.m1 = read_blob(is, "m1");
  ckpt.m2 = read_blob(is, "m2");
  return ckpt;
}

}  // namespace masklab
