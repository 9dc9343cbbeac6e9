#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mindmap/vectorizer.hpp"

namespace mindmap {

struct KMeansOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  double tol = 1e-6;
};

struct KMeansResult {
  std::size_t k = 0;
  std::vector<std::string> ids;
  std::vector<std::size_t> assignments;         // aligned with ids, values in [0, k)
  std::vector<std::vector<double>> centroids;   // k dense vectors
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  /// Inertia after each assignment step, with the final inertia appended.
  std::vector<double> inertia_trace;
  /// Row indices picked by k-means++ seeding.
  std::vector<std::size_t> initial_points;

  std::vector<std::size_t> members(std::size_t cluster) const;
  bool operator==(const KMeansResult&) const = default;
};

/// Lloyd's algorithm with k-means++ seeding from a seeded 64-bit Mersenne
/// Twister. Rows are sparse points of dimension `dim`. Ties in assignment go
/// to the lowest cluster id; an emptied cluster takes the point farthest from
/// its own centroid (among clusters with more than one member).
/// Throws Error{BadK} unless 1 <= k <= rows.size().
KMeansResult kmeans(std::span<const SparseVector> rows, std::span<const std::string> ids,
                    std::size_t dim, const KMeansOptions& options);

/// Convenience for dense data, used for low-dimensional point sets.
std::vector<SparseVector> to_sparse(const std::vector<std::vector<double>>& points);

double squared_distance(const SparseVector& x, const std::vector<double>& centroid);

struct LabelSuggestion {
  std::vector<std::string> terms;
  /// Set when the centroid carries no weight at all.
  bool low_confidence = false;
};

/// Top-m vocabulary terms by centroid weight, descending, ties lexicographic.
LabelSuggestion suggest_labels(const KMeansResult& result, std::size_t cluster_id,
                               const Vocabulary& vocab, std::size_t m);

/// Same ranking over an explicit centroid.
LabelSuggestion top_terms(std::span<const double> centroid, const Vocabulary& vocab, std::size_t m);

/// Mean of the given rows as a dense vector.
std::vector<double> mean_vector(std::span<const SparseVector* const> rows, std::size_t dim);

}  // namespace mindmap
