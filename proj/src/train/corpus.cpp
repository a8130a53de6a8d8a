#include "mog/train/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mog::train {

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(const std::vector<std::string>& content) {
  tokens_ = {"<pad>", "<unk>", "<bos>", "<eos>"};
  tokens_.insert(tokens_.end(), content.begin(), content.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], int(i)).second) throw std::invalid_argument("duplicate token '" + tokens_[i] + "'");
  }
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || std::size_t(id) >= tokens_.size()) throw std::out_of_range("token id outside the vocabulary");
  return tokens_[id];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& words) const {
  std::vector<int> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(id(w));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

void Corpus::validate() const {
  if (src.size() != tgt.size()) throw std::invalid_argument("corpus: source and target counts differ");
  for (const auto* side : {&src, &tgt}) {
    for (const auto& s : *side) {
      if (s.empty()) throw std::invalid_argument("corpus: empty sentence");
      for (int id : s)
        if (id < 0 || std::size_t(id) >= vocab.size()) throw std::invalid_argument("corpus: id outside the vocabulary");
    }
  }
}

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

Corpus make_task(const std::string& name, const TaskParams& params) {
  if (name != "copy" && name != "reverse" && name != "sort")
    throw std::invalid_argument("unknown task '" + name + "' (expected copy, reverse, sort or file)");
  if (params.vocab_size == 0 || params.vocab_size + 4 > 64) throw std::invalid_argument("task vocab must be 1..60 tokens");
  if (params.min_len == 0 || params.min_len > params.max_len) throw std::invalid_argument("task lengths need 1 <= min <= max");
  std::vector<std::string> content;
  for (std::size_t i = 0; i < params.vocab_size; ++i) content.push_back(std::to_string(i));
  Corpus c{Vocab(content), {}, {}};
  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> len(params.min_len, params.max_len);
  std::uniform_int_distribution<int> tok(4, int(params.vocab_size) + 3);
  for (std::size_t n = 0; n < params.size; ++n) {
    std::vector<int> s(len(rng));
    for (int& x : s) x = tok(rng);
    std::vector<int> t = s;
    if (name == "reverse") std::reverse(t.begin(), t.end());
    if (name == "sort") std::sort(t.begin(), t.end());
    c.src.push_back(std::move(s));
    c.tgt.push_back(std::move(t));
  }
  return c;
}

namespace {

std::vector<std::vector<std::string>> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(split_words(line));
  }
  return out;
}

}  // namespace

Corpus load_parallel(const std::string& prefix, const Vocab* vocab) {
  auto src = read_lines(prefix + ".src"), tgt = read_lines(prefix + ".tgt");
  if (src.size() != tgt.size())
    throw std::runtime_error("'" + prefix + ".src' and '.tgt' have different line counts (" + std::to_string(src.size()) +
                             " vs " + std::to_string(tgt.size()) + ")");
  for (std::size_t i = 0; i < src.size(); ++i)
    if (src[i].empty() || tgt[i].empty()) throw std::runtime_error("empty line " + std::to_string(i + 1) + " in '" + prefix + "'");
  Corpus c;
  if (vocab) {
    c.vocab = *vocab;
  } else {
    std::vector<std::string> seen;
    std::unordered_map<std::string, bool> have{{"<pad>", true}, {"<unk>", true}, {"<bos>", true}, {"<eos>", true}};
    for (const auto* side : {&src, &tgt})
      for (const auto& s : *side)
        for (const auto& w : s)
          if (!have[w]) {
            have[w] = true;
            seen.push_back(w);
          }
    c.vocab = Vocab(seen);
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    c.src.push_back(c.vocab.encode(src[i]));
    c.tgt.push_back(c.vocab.encode(tgt[i]));
  }
  return c;
}

void write_parallel(const Corpus& corpus, const std::string& prefix) {
  std::ofstream src(prefix + ".src"), tgt(prefix + ".tgt");
  if (!src || !tgt) throw std::runtime_error("cannot write '" + prefix + ".src/.tgt'");
  auto put = [&corpus](std::ofstream& out, const std::vector<int>& ids) {
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << corpus.vocab.token(ids[i]);
    out << '\n';
  };
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    put(src, corpus.src[i]);
    put(tgt, corpus.tgt[i]);
  }
}

}  // namespace mog::train
