#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace mog::train {

/// Closed vocabulary. Ids 0-3 are reserved for <pad>, <unk>, <bos>, <eos>.
class Vocab {
 public:
  static constexpr int pad = 0, unk = 1, bos = 2, eos = 3;

  Vocab();
  /// `content` lists the non-special tokens in id order.
  explicit Vocab(const std::vector<std::string>& content);

  int id(const std::string& token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// Tokens after the four specials.
  std::vector<std::string> content() const { return {tokens_.begin() + 4, tokens_.end()}; }

  std::vector<int> encode(const std::vector<std::string>& words) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct Corpus {
  Vocab vocab;
  std::vector<std::vector<int>> src, tgt;

  std::size_t size() const { return src.size(); }
  /// Throws unless counts agree, no sentence is empty and every id is in range.
  void validate() const;
};

struct TaskParams {
  std::size_t vocab_size = 20;  // content tokens
  std::size_t min_len = 3;
  std::size_t max_len = 12;
  std::size_t size = 1000;
  std::uint64_t seed = 1;
};

std::vector<std::string> split_words(const std::string& line);

/// Synthetic tasks over tokens "0", "1", ...: copy, reverse, sort (ascending
/// by token value).
Corpus make_task(const std::string& name, const TaskParams& params);

/// Aligned `<prefix>.src` / `<prefix>.tgt`, whitespace tokenised. Builds the
/// vocabulary from the files in first-seen order unless one is given, in which
/// case unknown words map to <unk>.
Corpus load_parallel(const std::string& prefix, const Vocab* vocab = nullptr);
void write_parallel(const Corpus& corpus, const std::string& prefix);

}  // namespace mog::train
