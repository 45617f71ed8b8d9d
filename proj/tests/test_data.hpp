#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nhl/semparse.hpp"

namespace nhl::testing {

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string data_path(const std::string& rel) { return std::string(NHL_DATA_DIR) + "/" + rel; }

inline const Grammar& shipped_grammar() {
  static const Grammar g =
      load_grammar(slurp(data_path("grammar/lexicon.txt")), slurp(data_path("grammar/rules.txt")));
  return g;
}

/// One line of the corpus: a specification, its relation and program, and
/// the expected verdict of every VC.
struct CorpusCase {
  std::string sentence;
  std::string relation;
  std::string program;
  std::string expected;
};

inline std::vector<CorpusCase> corpus() {
  std::vector<CorpusCase> out;
  std::istringstream in(slurp(data_path("corpus/corpus.tsv")));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, '\t')) cols.push_back(c);
    if (cols.size() != 4) throw std::runtime_error("bad corpus line: " + line);
    for (char& ch : cols[1]) {
      if (ch == ';') ch = '\n';
    }
    out.push_back({cols[0], cols[1], cols[2], cols[3]});
  }
  return out;
}

/// Random sentences drawn top-down from the grammar.
class SentenceGen {
 public:
  SentenceGen(const Grammar& g, uint64_t seed) : g_(g), rng_(seed) {}

  std::vector<std::string> sentence(const std::string& start) {
    std::vector<std::string> out;
    expand(start, 0, out);
    return out;
  }

 private:
  void expand(const std::string& cat, int depth, std::vector<std::string>& out) {
    std::vector<int> lex, rules;
    for (size_t e = 0; e < g_.lexicon().size(); ++e) {
      if (g_.lexicon()[e].category == cat) lex.push_back(static_cast<int>(e));
    }
    for (size_t r = 0; r < g_.rules().size(); ++r) {
      if (g_.rules()[r].lhs == cat) rules.push_back(static_cast<int>(r));
    }
    bool numeral = cat == kNumeralCategory;
    size_t choices = lex.size() + (depth < 6 ? rules.size() : 0) + (numeral ? 1 : 0);
    if (choices == 0) {
      for (int r : rules) {  // out of depth: take the first rule anyway
        for (const auto& k : g_.rules()[r].rhs) expand(k, depth + 1, out);
        return;
      }
      return;
    }
    size_t pick = std::uniform_int_distribution<size_t>(0, choices - 1)(rng_);
    if (pick < lex.size()) {
      for (const auto& w : g_.lexicon()[lex[pick]].surface) out.push_back(w);
      return;
    }
    pick -= lex.size();
    if (numeral && pick == 0) {
      out.push_back(std::to_string(std::uniform_int_distribution<int>(-20, 200)(rng_)));
      return;
    }
    if (numeral) --pick;
    for (const auto& k : g_.rules()[rules[pick]].rhs) expand(k, depth + 1, out);
  }

  const Grammar& g_;
  std::mt19937_64 rng_;
};

}  // namespace nhl::testing
