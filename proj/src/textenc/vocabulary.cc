#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "dsdst/error.h"
#include "dsdst/hash.h"
#include "dsdst/textenc.h"

namespace dsdst::textenc {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      fail(ErrorKind::kParse, "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
  auto special = [&](std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) fail(ErrorKind::kParse, "vocabulary lacks " + std::string(name));
    return it->second;
  };
  pad_id_ = special(kPad);
  unk_id_ = special(kUnk);
  cls_id_ = special(kCls);
  sep_id_ = special(kSep);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t max_size) {
  std::map<std::string, int> counts;
  std::set<char> chars = {'|'};
  for (const auto& text : texts) {
    for (CharSpan w : pre_tokenize(text)) {
      std::string word = text.substr(w.start, w.end - w.start);
      chars.insert(word.begin(), word.end());
      ++counts[word];
    }
  }
  std::vector<std::string> tokens = {std::string(kPad), std::string(kUnk), std::string(kCls),
                                     std::string(kSep)};
  std::set<std::string> present(tokens.begin(), tokens.end());
  auto add = [&](std::string token) {
    if (present.insert(token).second) tokens.push_back(std::move(token));
  };
  for (char c : chars) add(std::string(1, c));
  for (char c : chars) add("##" + std::string(1, c));

  std::vector<std::pair<std::string, int>> words(counts.begin(), counts.end());
  std::stable_sort(words.begin(), words.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [word, count] : words) {
    if (tokens.size() >= max_size) break;
    add(word);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(std::move(line));
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write vocabulary " + path.string());
  for (const auto& token : tokens_) out << token << '\n';
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::fingerprint() const {
  Fnv1a h;
  for (const auto& token : tokens_) {
    h.update(token);
    h.update("\n");
  }
  return h.digest();
}

}  // namespace dsdst::textenc
