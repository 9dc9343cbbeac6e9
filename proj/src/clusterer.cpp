#include "mindmap/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mindmap/error.hpp"

namespace mindmap {

namespace {

using Dense = std::vector<double>;

double uniform01(std::mt19937_64& rng) {
  // 53 random mantissa bits; identical on every platform unlike
  // std::uniform_real_distribution.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double dense_squared_norm(const Dense& c) {
  double s = 0.0;
  for (double v : c) s += v * v;
  return s;
}

// ||x - c||^2 = ||x||^2 - 2 x.c + ||c||^2, evaluated with the sparse support.
double distance_with_norms(const SparseVector& x, double x_sq, const Dense& c, double c_sq) {
  double dot = 0.0;
  for (const auto& [col, w] : x.entries) dot += w * c[col];
  return std::max(0.0, x_sq - 2.0 * dot + c_sq);
}

Dense densify(const SparseVector& x, std::size_t dim) {
  Dense d(dim, 0.0);
  for (const auto& [col, w] : x.entries) d[col] = w;
  return d;
}

std::vector<std::size_t> seed_plus_plus(std::span<const SparseVector> rows,
                                        std::span<const double> row_sq, std::size_t dim,
                                        std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = rows.size();
  std::vector<std::size_t> chosen;
  std::vector<bool> taken(n, false);
  const auto first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  chosen.push_back(std::min(first, n - 1));
  taken[chosen.back()] = true;

  std::vector<double> closest(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const Dense c = densify(rows[chosen.back()], dim);
    const double c_sq = dense_squared_norm(c);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = taken[i] ? 0.0
                            : std::min(closest[i], distance_with_norms(rows[i], row_sq[i], c, c_sq));
      total += closest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (closest[i] <= 0.0) continue;
        acc += closest[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Fewer distinct points than k: fall back to a uniform untaken index.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) free.push_back(i);
      pick = free[std::min(free.size() - 1,
                           static_cast<std::size_t>(uniform01(rng) * static_cast<double>(free.size())))];
    }
    chosen.push_back(pick);
    taken[pick] = true;
  }
  return chosen;
}

}  // namespace

std::vector<std::size_t> KMeansResult::members(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == cluster) out.push_back(i);
  return out;
}

std::vector<SparseVector> to_sparse(const std::vector<std::vector<double>>& points) {
  std::vector<SparseVector> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    SparseVector v;
    for (std::size_t j = 0; j < p.size(); ++j)
      if (p[j] != 0.0) v.entries.emplace_back(static_cast<std::uint32_t>(j), p[j]);
    out.push_back(std::move(v));
  }
  return out;
}

double squared_distance(const SparseVector& x, const std::vector<double>& centroid) {
  double s = 0.0;
  auto it = x.entries.begin();
  for (std::size_t j = 0; j < centroid.size(); ++j) {
    double xv = 0.0;
    if (it != x.entries.end() && it->first == j) {
      xv = it->second;
      ++it;
    }
    const double d = xv - centroid[j];
    s += d * d;
  }
  return s;
}

KMeansResult kmeans(std::span<const SparseVector> rows, std::span<const std::string> ids,
                    std::size_t dim, const KMeansOptions& options) {
  const std::size_t n = rows.size();
  const std::size_t k = options.k;
  if (ids.size() != n) throw Error(ErrorKind::DomainError, "rows and ids differ in length");
  if (k < 1 || k > n)
    throw Error(ErrorKind::BadK, "k=" + std::to_string(k) + " with " + std::to_string(n) + " points");
  if (!(options.tol > 0.0)) throw Error(ErrorKind::DomainError, "tol must be > 0");

  std::vector<double> row_sq(n);
  for (std::size_t i = 0; i < n; ++i) row_sq[i] = rows[i].squared_norm();

  std::mt19937_64 rng(options.seed);
  KMeansResult result;
  result.k = k;
  result.seed = options.seed;
  result.ids.assign(ids.begin(), ids.end());
  result.initial_points = seed_plus_plus(rows, row_sq, dim, k, rng);

  std::vector<Dense> centroids;
  centroids.reserve(k);
  for (auto idx : result.initial_points) centroids.push_back(densify(rows[idx], dim));

  std::vector<std::size_t> assign(n, 0);
  std::vector<double> dist(n, 0.0);
  std::vector<double> c_sq(k);

  const auto assign_all = [&] {
    for (std::size_t c = 0; c < k; ++c) c_sq[c] = dense_squared_norm(centroids[c]);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = distance_with_norms(rows[i], row_sq[i], centroids[0], c_sq[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = distance_with_norms(rows[i], row_sq[i], centroids[c], c_sq[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
      dist[i] = best_d;
    }
  };

  const auto fix_empty_clusters = [&] {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assign) ++sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assign[i]] < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) break;  // unreachable while k <= n
      --sizes[assign[far]];
      assign[far] = c;
      dist[far] = 0.0;
      sizes[c] = 1;
      centroids[c] = densify(rows[far], dim);
    }
  };

  const auto update_centroids = [&] {
    std::vector<Dense> next(k, Dense(dim, 0.0));
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[assign[i]];
      for (const auto& [col, w] : rows[i].entries) next[assign[i]][col] += w;
    }
    double max_shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double inv = 1.0 / static_cast<double>(sizes[c]);
      double shift = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        next[c][j] *= inv;
        const double d = next[c][j] - centroids[c][j];
        shift += d * d;
      }
      max_shift = std::max(max_shift, std::sqrt(shift));
    }
    centroids = std::move(next);
    return max_shift;
  };

  const auto exact_inertia = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += squared_distance(rows[i], centroids[assign[i]]);
    return total;
  };

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    assign_all();
    fix_empty_clusters();
    result.inertia_trace.push_back(exact_inertia());
    ++result.iterations;
    if (update_centroids() < options.tol) break;
  }

  result.inertia = exact_inertia();
  result.inertia_trace.push_back(result.inertia);
  result.assignments = std::move(assign);
  result.centroids = std::move(centroids);
  return result;
}

LabelSuggestion top_terms(std::span<const double> centroid, const Vocabulary& vocab,
                          std::size_t m) {
  std::vector<std::uint32_t> order(vocab.size());
  std::iota(order.begin(), order.end(), 0u);
  const auto w = [&](std::uint32_t c) { return c < centroid.size() ? centroid[c] : 0.0; };
  const std::size_t take = std::min(m, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (w(a) != w(b)) return w(a) > w(b);
                      return vocab.terms[a] < vocab.terms[b];
                    });
  LabelSuggestion out;
  out.low_confidence = std::none_of(centroid.begin(), centroid.end(), [](double v) { return v > 0.0; });
  for (std::size_t i = 0; i < take; ++i) out.terms.push_back(vocab.terms[order[i]]);
  return out;
}

LabelSuggestion suggest_labels(const KMeansResult& result, std::size_t cluster_id,
                               const Vocabulary& vocab, std::size_t m) {
  if (cluster_id >= result.k)
    throw Error(ErrorKind::UnknownCluster, "cluster " + std::to_string(cluster_id));
  return top_terms(result.centroids[cluster_id], vocab, m);
}

std::vector<double> mean_vector(std::span<const SparseVector* const> rows, std::size_t dim) {
  Dense mean(dim, 0.0);
  if (rows.empty()) return mean;
  for (const auto* r : rows)
    for (const auto& [col, w] : r->entries) mean[col] += w;
  for (auto& v : mean) v /= static_cast<double>(rows.size());
  return mean;
}

}  // namespace mindmap
