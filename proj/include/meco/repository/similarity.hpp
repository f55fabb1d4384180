#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meco/knowledge/types.hpp"

namespace meco::repository {

struct SimilarityWeights {
  double keywords = 0.4;
  double domains = 0.2;
  double indicators = 0.2;
  double text = 0.2;

  // Non-negative and summing to 1 within 1e-9.
  bool valid() const noexcept;
};

struct SimilarityParts {
  double keywords = 0;
  double domains = 0;
  double indicators = 0;
  double text = 0;
};

struct SimilarityScore {
  double value = 0;
  SimilarityParts parts;
};

// |a ∩ b| / |a ∪ b|; 0 when both are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

using TermVector = std::map<std::string, std::uint64_t>;

TermVector term_vector(std::string_view text);

// 0 when either vector is empty.
double cosine(const TermVector& a, const TermVector& b);

// Components: Jaccard over case-folded keywords, case-folded domains and
// case-folded "attribute:value" indicator pairs; cosine over the term
// frequencies of statement + objective. Symmetric, in [0, 1].
SimilarityScore problem_similarity(const knowledge::ProblemDefinition& a, const knowledge::ProblemDefinition& b,
                                   const SimilarityWeights& weights = {});

// A problem as the repository knows it, with the users of its workspace.
struct StoredProblem {
  WorkspaceId workspace;
  knowledge::ProblemDefinition problem;
  std::set<UserId> participants;
};

struct SearchHit {
  StoredProblem entry;
  double score = 0;
};

// Cosine between the query's terms and each problem's statement, objective
// and keywords. Hits with score > 0, best first; ties go to the more recent
// problem, then the smaller id.
std::vector<SearchHit> search_repository(std::span<const StoredProblem> corpus, std::string_view query,
                                         std::size_t limit);

struct RecommendOptions {
  SimilarityWeights weights;
  double threshold = 0.2;
};

struct CollaboratorSuggestion {
  UserId user;
  double affinity = 0;
  bool online = false;

  friend bool operator==(const CollaboratorSuggestion&, const CollaboratorSuggestion&) = default;
};

// Comparisons against the threshold tolerate this much rounding error.
inline constexpr double kScoreEpsilon = 1e-12;

// Each past problem (every corpus entry except `current` itself) whose
// similarity to `current` reaches the threshold credits that similarity to
// every participant of its workspace; a user's affinity is the best credit.
// Users in `exclude` are skipped. Best affinity first, ties by user id.
std::vector<CollaboratorSuggestion> recommend_collaborators(std::span<const StoredProblem> corpus,
                                                            const knowledge::ProblemDefinition& current,
                                                            const std::set<UserId>& exclude, std::size_t k,
                                                            const RecommendOptions& options,
                                                            const std::function<bool(const UserId&)>& is_online);

}  // namespace meco::repository
