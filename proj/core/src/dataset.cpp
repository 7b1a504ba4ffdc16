#include "masklab/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include <json.hpp>

#include "masklab/error.hpp"

namespace masklab {

namespace {

using json = nlohmann::ordered_json;

json strata_to_json(const std::map<std::string, double>& strata) {
  json j = json::object();
  for (const auto& [k, v] : strata) {
    if (v == std::floor(v) && std::abs(v) < 9.0e15) {
      j[k] = static_cast<std::int64_t>(v);
    } else {
      j[k] = v;
    }
  }
  return j;
}

json tokens_to_json(const std::vector<int>& ids, const Vocabulary& vocab) {
  json j = json::array();
  for (int id : ids) j.push_back(vocab.str(id));
  return j;
}

std::vector<int> tokens_from_json(const json& j, const Vocabulary& vocab) {
  check(j.is_array(), "token field is not an array");
  std::vector<int> out;
  out.reserve(j.size());
  for (const auto& t : j) {
    check(t.is_string(), "token entry is not a string");
    out.push_back(vocab.id(t.get<std::string>()));
  }
  return out;
}

}  // namespace

void dataset_emit(const std::vector<ReasoningInstance>& data, const Vocabulary& vocab,
                  const std::filesystem::path& file) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream os(tmp);
    check(os.good(), "cannot open for writing: " + tmp.string());
    for (const ReasoningInstance& inst : data) {
      json j;
      j["task"] = task_name(inst.task);
      j["prompt"] = tokens_to_json(inst.prompt, vocab);
      j["answer"] = tokens_to_json(inst.answer, vocab);
      j["strata"] = strata_to_json(inst.strata);
      j["seed"] = inst.seed;
      os << j.dump() << '\n';
    }
    check(os.good(), "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

std::vector<ReasoningInstance> dataset_load(const std::filesystem::path& file,
                                            const Vocabulary& vocab) {
  std::ifstream is(file);
  check(is.good(), "cannot open dataset file: " + file.string());
  std::vector<ReasoningInstance> out;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      ReasoningInstance inst;
      inst.task = parse_task(j.at("task").get<std::string>());
      inst.prompt = tokens_from_json(j.at("prompt"), vocab);
      inst.answer = tokens_from_json(j.at("answer"), vocab);
      for (const auto& [k, v] : j.at("strata").items()) {
        check(v.is_number(), "stratum value is not a number");
        inst.strata[k] = v.get<double>();
      }
      inst.seed = j.at("seed").get<std::uint64_t>();
      check(!inst.answer.empty(), "instance has empty answer");
      out.push_back(std::move(inst));
    } catch (const json::exception& e) {
      fail(file.string() + ":" + std::to_string(line_no) + ": bad instance: " + e.what());
    } catch (const Error& e) {
      fail(file.string() + ":" + std::to_string(line_no) + ": bad instance: " + e.what());
    }
  }
  return out;
}

}  // namespace masklab
