#include "meco/repository/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "meco/core/text.hpp"
#include "meco/indicator/analyzer.hpp"

namespace meco::repository {

using knowledge::ProblemDefinition;

bool SimilarityWeights::valid() const noexcept {
  if (keywords < 0 || domains < 0 || indicators < 0 || text < 0) {
    return false;
  }
  return std::abs(keywords + domains + indicators + text - 1.0) <= 1e-9;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) {
    return 0;
  }
  std::size_t common = 0;
  for (const auto& x : a) {
    common += b.contains(x) ? 1 : 0;
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

TermVector term_vector(std::string_view text) {
  TermVector v;
  for (auto& token : indicator::tokenize(text)) {
    ++v[std::move(token)];
  }
  return v;
}

double cosine(const TermVector& a, const TermVector& b) {
  if (a.empty() || b.empty()) {
    return 0;
  }
  auto norm2 = [](const TermVector& v) {
    double n = 0;
    for (const auto& [_, f] : v) {
      n += static_cast<double>(f) * static_cast<double>(f);
    }
    return n;
  };
  double dot = 0;
  for (const auto& [term, f] : a) {
    if (auto it = b.find(term); it != b.end()) {
      dot += static_cast<double>(f) * static_cast<double>(it->second);
    }
  }
  double na = norm2(a);
  double nb = norm2(b);
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

namespace {

std::set<std::string> folded(const auto& items) {
  std::set<std::string> out;
  for (const auto& item : items) {
    auto f = fold_case(trim(item));
    if (!f.empty()) {
      out.insert(std::move(f));
    }
  }
  return out;
}

std::set<std::string> indicator_pairs(const ProblemDefinition& p) {
  std::set<std::string> out;
  for (const auto& i : p.indicators) {
    out.insert(fold_case(trim(i.attribute)) + ":" + fold_case(trim(i.value)));
  }
  return out;
}

std::string problem_text(const ProblemDefinition& p) { return p.statement + " " + p.objective; }

}  // namespace

SimilarityScore problem_similarity(const ProblemDefinition& a, const ProblemDefinition& b,
                                   const SimilarityWeights& weights) {
  SimilarityScore score;
  score.parts.keywords = jaccard(folded(a.keywords), folded(b.keywords));
  score.parts.domains = jaccard(folded(a.domains), folded(b.domains));
  score.parts.indicators = jaccard(indicator_pairs(a), indicator_pairs(b));
  score.parts.text = cosine(term_vector(problem_text(a)), term_vector(problem_text(b)));
  double value = weights.keywords * score.parts.keywords + weights.domains * score.parts.domains +
                 weights.indicators * score.parts.indicators + weights.text * score.parts.text;
  score.value = std::clamp(value, 0.0, 1.0);
  return score;
}

std::vector<SearchHit> search_repository(std::span<const StoredProblem> corpus, std::string_view query,
                                         std::size_t limit) {
  std::vector<SearchHit> hits;
  auto q = term_vector(query);
  if (q.empty() || limit == 0) {
    return hits;
  }
  for (const auto& entry : corpus) {
    std::string text = problem_text(entry.problem);
    for (const auto& keyword : entry.problem.keywords) {
      text += ' ';
      text += keyword;
    }
    double score = cosine(q, term_vector(text));
    if (score > 0) {
      hits.push_back({entry, score});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& x, const SearchHit& y) {
    if (x.score != y.score) {
      return x.score > y.score;
    }
    if (x.entry.problem.timestamp != y.entry.problem.timestamp) {
      return x.entry.problem.timestamp > y.entry.problem.timestamp;
    }
    return x.entry.problem.id < y.entry.problem.id;
  });
  if (hits.size() > limit) {
    hits.resize(limit);
  }
  return hits;
}

std::vector<CollaboratorSuggestion> recommend_collaborators(std::span<const StoredProblem> corpus,
                                                            const ProblemDefinition& current,
                                                            const std::set<UserId>& exclude, std::size_t k,
                                                            const RecommendOptions& options,
                                                            const std::function<bool(const UserId&)>& is_online) {
  std::map<UserId, double> affinity;
  for (const auto& entry : corpus) {
    if (entry.problem.id == current.id) {
      continue;
    }
    double s = problem_similarity(current, entry.problem, options.weights).value;
    if (s + kScoreEpsilon < options.threshold) {
      continue;
    }
    for (const auto& user : entry.participants) {
      if (exclude.contains(user)) {
        continue;
      }
      auto [it, inserted] = affinity.emplace(user, s);
      if (!inserted) {
        it->second = std::max(it->second, s);
      }
    }
  }
  std::vector<CollaboratorSuggestion> out;
  out.reserve(affinity.size());
  for (const auto& [user, a] : affinity) {
    out.push_back({user, a, is_online ? is_online(user) : false});
  }
  std::sort(out.begin(), out.end(), [](const CollaboratorSuggestion& x, const CollaboratorSuggestion& y) {
    if (x.affinity != y.affinity) {
      return x.affinity > y.affinity;
    }
    return x.user < y.user;
  });
  if (out.size() > k) {
    out.resize(k);
  }
  return out;
}

}  // namespace meco::repository
