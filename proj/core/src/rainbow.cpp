#include "masklab/rainbow.hpp"

#include "masklab/error.hpp"

namespace masklab {

std::vector<int> rainbow_pad(const std::vector<int>& content, int max_len,
                             const Vocabulary& vocab, int cycle) {
  check(cycle >= 1 && cycle <= vocab.pad_count(), "rainbow_pad: bad cycle");
  check(static_cast<int>(content.size()) <= max_len, "rainbow_pad: content longer than max_len");
  for (int id : content) check(!vocab.is_pad(id), "rainbow_pad: pad token inside content");
  std::vector<int> out = content;
  out.reserve(max_len);
  for (int p = static_cast<int>(content.size()); p < max_len; ++p) {
    out.push_back(vocab.pad_ids()[p % cycle]);
  }
  return out;
}

std::optional<std::vector<int>> rainbow_strip(const std::vector<int>& padded,
                                              const Vocabulary& vocab, int cycle) {
  check(cycle >= 1 && cycle <= vocab.pad_count(), "rainbow_strip: bad cycle");
  int content_len = static_cast<int>(padded.size());
  for (int p = 0; p < static_cast<int>(padded.size()); ++p) {
    if (vocab.is_pad(padded[p])) {
      content_len = p;
      break;
    }
  }
  for (int p = content_len; p < static_cast<int>(padded.size()); ++p) {
    if (padded[p] != vocab.pad_ids()[p % cycle]) return std::nullopt;
  }
  return std::vector<int>(padded.begin(), padded.begin() + content_len);
}

}  // namespace masklab
