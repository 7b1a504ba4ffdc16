#include "masklab/vocab.hpp"

#include <fstream>

#include "masklab/error.hpp"

namespace masklab {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  check(!tokens_.empty(), "vocabulary must not be empty");
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
    const std::string& t = tokens_[i];
    check(!t.empty(), "vocabulary token must not be empty");
    const bool inserted = index_.emplace(t, i).second;
    check(inserted, "duplicate vocabulary token: " + t);
    if (t == "#mask") {
      mask_id_ = i;
    } else if (t.rfind("#pad", 0) == 0) {
      pad_ids_.push_back(i);
    }
  }
  check(mask_id_ >= 0, "vocabulary lacks #mask token");
  check(!pad_ids_.empty(), "vocabulary lacks #pad tokens");
}

Vocabulary Vocabulary::for_task(Task t) {
  std::vector<std::string> v;
  auto digits = [&v](int lo, int hi) {
    for (int d = lo; d <= hi; ++d) v.push_back(std::string(1, char('0' + d)));
  };
  auto pads = [&v](int n) {
    for (int i = 0; i < n; ++i) v.push_back("#pad" + std::to_string(i));
  };
  switch (t) {
    case Task::addition:
      digits(0, 9);
      v.insert(v.end(), {"+", "=", "#mask"});
      pads(1);
      break;
    case Task::maze:
      v.insert(v.end(), {"#", ".", "S", "E", "0", "1", "=", "#mask"});
      pads(1);
      break;
    case Task::listops:
      digits(0, 9);
      v.insert(v.end(), {"X", "N", "D", "S", "[", "]", "=", "#mask"});
      pads(4);
      break;
    case Task::countdown:
      digits(0, 9);
      v.insert(v.end(), {"+", "-", "*", "/", ",", "=", "#mask"});
      pads(4);
      break;
    case Task::sudoku:
      digits(1, 9);
      v.insert(v.end(), {".", "=", "#mask"});
      pads(1);
      break;
  }
  return Vocabulary(std::move(v));
}

int Vocabulary::id(const std::string& tok) const {
  auto it = index_.find(tok);
  check(it != index_.end(), "token not in vocabulary: " + tok);
  return it->second;
}

const std::string& Vocabulary::str(int id) const {
  check(id >= 0 && id < size(), "token id out of range");
  return tokens_[id];
}

bool Vocabulary::is_pad(int id) const {
  check(id >= 0 && id < size(), "token id out of range");
  return tokens_[id].rfind("#pad", 0) == 0;
}

std::vector<int> Vocabulary::encode(const std::string& chars) const {
  std::vector<int> out;
  out.reserve(chars.size());
  for (char c : chars) out.push_back(id(std::string(1, c)));
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int i : ids) out += str(i);
  return out;
}

void Vocabulary::save(const std::filesystem::path& file) const {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream os(tmp);
    check(os.good(), "cannot open for writing: " + tmp.string());
    for (const std::string& t : tokens_) os << t << '\n';
    check(os.good(), "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

Vocabulary Vocabulary::load(const std::filesystem::path& file) {
  std::ifstream is(file);
  check(is.good(), "cannot open vocabulary file: " + file.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    check(!line.empty(), "empty line in vocabulary file: " + file.string());
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

}  // namespace masklab
