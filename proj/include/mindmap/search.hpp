#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mindmap/corpus.hpp"
#include "mindmap/curation.hpp"
#include "mindmap/textprep.hpp"
#include "mindmap/topics.hpp"
#include "mindmap/vectorizer.hpp"

namespace mindmap {

struct FieldBoosts {
  double title = 3.0;
  double topic = 2.0;
  double body = 1.0;

  bool operator==(const FieldBoosts&) const = default;
};

struct Posting {
  std::uint32_t doc = 0;  // index into SearchIndex::doc_ids
  double weight = 0.0;

  bool operator==(const Posting&) const = default;
};

struct SearchIndex {
  std::vector<std::string> doc_ids;  // sorted
  std::vector<double> doc_norms;     // aligned with doc_ids
  std::map<std::string, std::vector<Posting>, std::less<>> postings;
  std::map<std::string, double, std::less<>> idf;  // query-side term weights
  std::map<std::string, std::string, std::less<>> category_of;
  std::map<std::string, std::vector<std::string>, std::less<>> members;  // category -> ids
  FieldBoosts boosts;

  std::size_t size() const { return doc_ids.size(); }
  bool operator==(const SearchIndex&) const = default;
};

struct SearchHit {
  std::string recording_id;
  double score = 0.0;
  std::string category;
  std::vector<std::string> matched_terms;
};

struct CategoryFilter {
  std::set<std::string> ids;
  std::vector<std::string> unknown;  // names that matched no category

  bool warning() const { return !unknown.empty(); }
};

/// Text preparation shared by titles, topics and queries: the regular
/// cleaning pipeline without the short-word filter.
std::vector<std::string> field_tokens(std::string_view text, const StopwordList& stopwords,
                                      const LemmaTable& lemmas);

/// Document vector = body x boosts.body + unit(title) x boosts.title +
/// unit(topic) x boosts.topic. Body weights come from the TF-IDF model
/// (which may be null for a transcript-less store).
/// Error{InconsistentStore} when recordings, model rows, topics and
/// categories do not describe the same id set, or a recording is in zero or
/// several categories.
SearchIndex build_index(const TfIdfModel* model, const std::vector<Recording>& recordings,
                        const std::vector<TopicAssignment>& topics,
                        const std::vector<Category>& categories, const StopwordList& stopwords,
                        const LemmaTable& lemmas, FieldBoosts boosts = {});

/// Union of the named categories' members; unknown names are reported.
CategoryFilter filter_by_categories(const SearchIndex& index, const std::set<std::string>& categories);

/// Cosine ranking. A non-empty category set restricts hits to members.
/// Sorted by descending score, ties by ascending id, at most top_k.
std::vector<SearchHit> search(const SearchIndex& index, std::string_view query,
                              const std::set<std::string>& categories, std::size_t top_k,
                              const StopwordList& stopwords, const LemmaTable& lemmas);

nlohmann::json index_to_json(const SearchIndex& index);
SearchIndex index_from_json(const nlohmann::json& j);

}  // namespace mindmap
