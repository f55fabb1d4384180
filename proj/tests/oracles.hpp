#pragma once

// Brute-force reference implementations used to check the real ones. They
// only handle the ASCII inputs their generators produce, and deliberately
// share no code with the library beyond the value types.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "meco/knowledge/types.hpp"
#include "meco/repository/similarity.hpp"

namespace meco::test {

inline std::string ascii_upper(std::string s) {
  for (auto& c : s) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return s;
}

inline std::string ascii_lower_copy(std::string s) {
  for (auto& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

inline std::vector<std::string> oracle_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) {
    out.push_back(cur);
  }
  return out;
}

// Tries every start position.
inline std::uint64_t oracle_count(const std::vector<std::string>& words, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > words.size()) {
    return 0;
  }
  std::uint64_t n = 0;
  for (std::size_t start = 0; start + phrase.size() <= words.size(); ++start) {
    bool all = true;
    for (std::size_t j = 0; j < phrase.size() && all; ++j) {
      all = words[start + j] == phrase[j];
    }
    n += all ? 1 : 0;
  }
  return n;
}

struct IndicatorCase {
  std::string text;
  std::vector<std::string> words;  // what the text says, lowercased
  std::vector<knowledge::Indicator> indicators;
  std::vector<std::vector<std::string>> phrases;
};

template <typename Rng>
std::string scramble_case(const std::string& word, Rng& rng) {
  std::string out = word;
  for (auto& c : out) {
    if (rng() % 3 == 0) {
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

// Texts of up to 500 tokens over at most 10 distinct words, with 1-3-word
// indicator values drawn from the same words.
template <typename Rng>
IndicatorCase random_indicator_case(Rng& rng) {
  static const std::vector<std::string> vocabulary = {"cassava", "export", "west", "africa", "garri",
                                                       "nigeria", "trade",  "2009", "flour",  "agent"};
  static const std::vector<std::string> separators = {" ", "  ", ", ", "-", ". ", "\n", "!", " / ", "\t"};
  std::size_t alphabet = 2 + rng() % (vocabulary.size() - 1);
  auto word = [&] { return vocabulary[rng() % alphabet]; };
  auto sep = [&] { return separators[rng() % separators.size()]; };

  IndicatorCase c;
  std::size_t length = rng() % 501;
  for (std::size_t i = 0; i < length; ++i) {
    auto w = word();
    if (i > 0) {
      c.text += sep();
    }
    c.text += scramble_case(w, rng);
    c.words.push_back(w);
  }
  if (rng() % 2) {
    c.text += sep();
  }
  std::size_t n_ind = 1 + rng() % 4;
  for (std::size_t i = 0; i < n_ind; ++i) {
    std::size_t len = 1 + rng() % 3;
    std::vector<std::string> phrase;
    std::string value;
    for (std::size_t j = 0; j < len; ++j) {
      auto w = word();
      if (j > 0) {
        value += sep();
      }
      value += scramble_case(w, rng);
      phrase.push_back(w);
    }
    c.indicators.push_back({"attr" + std::to_string(i), value});
    c.phrases.push_back(phrase);
  }
  return c;
}

inline double oracle_jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> both;
  std::set<std::string> either = a;
  either.insert(b.begin(), b.end());
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(both, both.begin()));
  return either.empty() ? 0.0 : static_cast<double>(both.size()) / static_cast<double>(either.size());
}

inline double oracle_cosine(const std::vector<std::string>& x, const std::vector<std::string>& y) {
  std::map<std::string, double> a, b;
  for (const auto& t : x) a[t] += 1;
  for (const auto& t : y) b[t] += 1;
  if (a.empty() || b.empty()) {
    return 0.0;
  }
  double dot = 0, na = 0, nb = 0;
  for (const auto& [t, f] : a) {
    na += f * f;
    if (b.count(t)) dot += f * b[t];
  }
  for (const auto& [t, f] : b) nb += f * f;
  return std::min(1.0, dot / std::sqrt(na * nb));
}

template <typename Range>
std::set<std::string> lowered(const Range& items) {
  std::set<std::string> out;
  for (const auto& s : items) {
    out.insert(ascii_lower_copy(s));
  }
  return out;
}

// The weighted blend, evaluated in the documented order so that results are
// bit-identical to the library's and thresholds compare exactly.
inline double oracle_similarity(const knowledge::ProblemDefinition& a, const knowledge::ProblemDefinition& b,
                                const repository::SimilarityWeights& w = {}) {
  std::set<std::string> ia, ib;
  for (const auto& i : a.indicators) ia.insert(ascii_lower_copy(i.attribute + ":" + i.value));
  for (const auto& i : b.indicators) ib.insert(ascii_lower_copy(i.attribute + ":" + i.value));
  double k = oracle_jaccard(lowered(a.keywords), lowered(b.keywords));
  double d = oracle_jaccard(lowered(a.domains), lowered(b.domains));
  double i = oracle_jaccard(ia, ib);
  double t = oracle_cosine(oracle_tokens(a.statement + " " + a.objective), oracle_tokens(b.statement + " " + b.objective));
  return std::clamp(w.keywords * k + w.domains * d + w.indicators * i + w.text * t, 0.0, 1.0);
}

struct OracleSuggestion {
  UserId user;
  double affinity;
};

// Evaluates every (user, problem) pair.
inline std::vector<OracleSuggestion> oracle_recommend(const std::vector<repository::StoredProblem>& corpus,
                                                      const knowledge::ProblemDefinition& current,
                                                      const std::set<UserId>& exclude, std::size_t k,
                                                      double threshold,
                                                      const repository::SimilarityWeights& w = {}) {
  std::set<UserId> users;
  for (const auto& e : corpus) users.insert(e.participants.begin(), e.participants.end());
  std::vector<OracleSuggestion> out;
  for (const auto& user : users) {
    if (exclude.count(user)) continue;
    double best = -1;
    for (const auto& e : corpus) {
      if (e.problem.id == current.id || !e.participants.count(user)) continue;
      double s = oracle_similarity(current, e.problem, w);
      if (s >= threshold - 1e-12) best = std::max(best, s);
    }
    if (best >= 0) out.push_back({user, best});
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.affinity != y.affinity ? x.affinity > y.affinity : x.user < y.user;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

// Up to 5 problems spread over workspaces, up to 5 users, small vocabularies
// so that overlaps are common.
template <typename Rng>
std::vector<repository::StoredProblem> random_corpus(Rng& rng) {
  static const std::vector<std::string> words = {"cassava", "export", "import", "nigeria", "ghana", "flour"};
  static const std::vector<std::string> labels = {"agriculture", "nutrition", "trade", "Exportation"};
  auto pick = [&](const std::vector<std::string>& from, std::size_t max) {
    std::vector<std::string> out;
    std::size_t n = rng() % (max + 1);
    for (std::size_t i = 0; i < n; ++i) out.push_back(from[rng() % from.size()]);
    return out;
  };
  std::size_t n_problems = 1 + rng() % 5;
  std::size_t n_users = 1 + rng() % 5;
  std::size_t n_workspaces = 1 + rng() % n_problems;
  std::vector<std::set<UserId>> members(n_workspaces);
  for (auto& m : members) {
    for (std::size_t u = 0; u < n_users; ++u) {
      if (rng() % 2) m.insert(UserId("u" + std::to_string(u)));
    }
  }
  std::vector<repository::StoredProblem> corpus;
  for (std::size_t i = 0; i < n_problems; ++i) {
    repository::StoredProblem e;
    auto ws = rng() % n_workspaces;
    e.workspace = WorkspaceId("w" + std::to_string(ws));
    e.participants = members[ws];
    auto& p = e.problem;
    p.id = ProblemId("p" + std::to_string(i));
    for (const auto& w : pick(words, 4)) p.statement += w + " ";
    p.objective = rng() % 2 ? words[rng() % words.size()] : "";
    std::set<std::string> seen;
    for (const auto& kw : pick(words, 3)) {
      if (seen.insert(ascii_lower_copy(kw)).second) p.keywords.push_back(rng() % 2 ? kw : ascii_upper(kw));
    }
    for (const auto& d : pick(labels, 2)) p.domains.insert(d);
    for (const auto& v : pick(words, 2)) p.indicators.push_back({rng() % 2 ? "crop" : "Market", v});
    corpus.push_back(std::move(e));
  }
  return corpus;
}

}  // namespace meco::test
