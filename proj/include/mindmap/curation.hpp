#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindmap/clusterer.hpp"
#include "mindmap/vectorizer.hpp"

namespace mindmap {

struct Category {
  std::string name;
  std::vector<std::string> member_ids;  // sorted
  std::vector<std::string> suggested_terms;
  std::size_t origin_round = 0;

  bool operator==(const Category&) const = default;
};

struct RoundSummary {
  std::size_t round = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t unassigned_before = 0;
  std::vector<std::string> accepted;

  bool operator==(const RoundSummary&) const = default;
};

struct CurationSession {
  std::set<std::string> unassigned;
  std::vector<Category> accepted;
  std::size_t round = 0;
  std::uint64_t seed = 0;
  std::vector<RoundSummary> history;

  bool has_category(std::string_view name) const;
  bool operator==(const CurationSession&) const = default;
};

struct ProposedCluster {
  std::size_t id = 0;
  std::vector<std::string> member_ids;
  std::vector<std::string> suggested_terms;
  bool low_confidence = false;
};

struct RoundProposal {
  std::size_t round = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double inertia = 0.0;
  std::vector<ProposedCluster> clusters;
};

struct Selection {
  std::size_t cluster_id = 0;
  std::string name;
};

inline constexpr std::size_t kDefaultLabelTerms = 5;
inline constexpr std::string_view kDefaultResidualName = "Miscellaneous";

/// Case-insensitive (ASCII) name comparison used for uniqueness checks.
bool same_category_name(std::string_view a, std::string_view b);

/// Error{EmptyCorpus} on an empty id list.
CurationSession start_session(const std::vector<std::string>& corpus_ids, std::uint64_t seed);

/// clamp(round(sqrt(unassigned / 2)), 2, 50), never above the unassigned count.
std::size_t default_round_k(std::size_t unassigned);

/// Clusters the unassigned rows only. The session is not modified.
RoundProposal run_round(const CurationSession& session, const TfIdfModel& model, std::size_t k,
                        std::uint64_t seed, std::size_t label_terms = kDefaultLabelTerms,
                        const KMeansOptions& base = {});

/// Turns the selected clusters into categories and advances the round.
/// Error{UnknownCluster}, Error{DuplicateName}, Error{StaleProposal}.
CurationSession accept(const CurationSession& session, const RoundProposal& proposal,
                       const std::vector<Selection>& selections);

/// Remaining unassigned ids become one residual category. Returns the full
/// disjoint cover. `model` (optional) is used for the residual's terms.
std::vector<Category> finalize(const CurationSession& session,
                               std::string_view residual_name = kDefaultResidualName,
                               const TfIdfModel* model = nullptr,
                               std::size_t label_terms = kDefaultLabelTerms);

nlohmann::json session_to_json(const CurationSession& session);
CurationSession session_from_json(const nlohmann::json& j);

nlohmann::json categories_to_json(const std::vector<Category>& categories);
std::vector<Category> categories_from_json(const nlohmann::json& j);

}  // namespace mindmap
