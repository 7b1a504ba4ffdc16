#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "masklab/instance.hpp"

namespace masklab {

// Ordered token table for one task. Index order is the model's class order.
// Sentinels use '#'-prefixed names ("#mask", "#pad0", ...) that cannot collide
// with content tokens, which are all single characters.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens);

  static Vocabulary for_task(Task t);

  int size() const { return static_cast<int>(tokens_.size()); }
  int mask_id() const { return mask_id_; }
  const std::vector<int>& pad_ids() const { return pad_ids_; }
  int pad_count() const { return static_cast<int>(pad_ids_.size()); }

  int id(const std::string& tok) const;
  const std::string& str(int id) const;
  bool is_pad(int id) const;

  std::vector<int> encode(const std::string& chars) const;  // one char per token
  std::string decode(const std::vector<int>& ids) const;

  void save(const std::filesystem::path& file) const;
  static Vocabulary load(const std::filesystem::path& file);

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int mask_id_ = -1;
  std::vector<int> pad_ids_;
};

}  // namespace masklab
