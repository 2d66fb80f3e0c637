#include "bess/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bess/rng.hpp"

namespace bess {

namespace {

double sq_dist(const Point& a, const Point& b) {
  const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
  return d0 * d0 + d1 * d1 + d2 * d2;
}

Point to_point(const CellFeatures& c) { return {c.soc, c.temperature, c.resistance}; }

int nearest(const Point& p, const std::vector<Point>& centroids, double* dist = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const double d = sq_dist(p, centroids[j]);
    if (d < best_d) {  // strict: ties keep the lower index
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

// k-means++ seeding, appended to `centroids` until it holds k entries.
void seed_plus_plus(std::span<const Point> points, int k, Rng& rng, std::vector<Point>& centroids) {
  const std::size_t n = points.size();
  if (centroids.empty()) centroids.push_back(points[rng.index(n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d;
      nearest(points[i], centroids, &d);
      d2[i] = d;
      total += d;
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.index(n);
    } else {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
  }
}

std::vector<Point> means_of(std::span<const Point> points, const std::vector<int>& labels, int k,
                            const std::vector<Point>& previous) {
  std::vector<Point> sums(k, Point{0, 0, 0});
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& s = sums[labels[i]];
    for (int a = 0; a < 3; ++a) s[a] += points[i][a];
    ++counts[labels[i]];
  }
  for (int j = 0; j < k; ++j) {
    if (counts[j] == 0) {
      sums[j] = previous[j];
      continue;
    }
    for (int a = 0; a < 3; ++a) sums[j][a] /= static_cast<double>(counts[j]);
  }
  return sums;
}

void assign(std::span<const Point> points, std::vector<Point>& centroids, std::vector<int>& labels) {
  const int k = static_cast<int>(centroids.size());
  std::vector<double> dist(points.size());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    labels[i] = nearest(points[i], centroids, &dist[i]);
    ++counts[labels[i]];
  }
  // Empty-cluster repair: move the worst-served point into the empty cluster.
  for (int j = 0; j < k; ++j) {
    if (counts[j] != 0) continue;
    std::size_t worst = points.size();
    double worst_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (counts[labels[i]] > 1 && dist[i] > worst_d) {
        worst_d = dist[i];
        worst = i;
      }
    }
    if (worst == points.size()) break;
    --counts[labels[worst]];
    labels[worst] = j;
    ++counts[j];
    dist[worst] = 0.0;
    centroids[j] = points[worst];
  }
}

}  // namespace

FeatureScaler FeatureScaler::fit(std::span<const CellFeatures> cells) {
  FeatureScaler s;
  const double n = static_cast<double>(cells.size());
  if (cells.empty()) return s;
  for (const auto& c : cells) {
    const Point p = to_point(c);
    for (int a = 0; a < 3; ++a) s.mean_[a] += p[a];
  }
  for (int a = 0; a < 3; ++a) s.mean_[a] /= n;
  Point var{0, 0, 0};
  for (const auto& c : cells) {
    const Point p = to_point(c);
    for (int a = 0; a < 3; ++a) var[a] += (p[a] - s.mean_[a]) * (p[a] - s.mean_[a]);
  }
  for (int a = 0; a < 3; ++a) {
    const double sd = std::sqrt(var[a] / n);
    // Relative threshold: spreads at rounding level count as zero variance.
    s.scale_[a] = sd > 1e-12 * std::max(1.0, std::abs(s.mean_[a])) ? sd : 0.0;
  }
  return s;
}

Point FeatureScaler::normalize(const CellFeatures& c) const {
  const Point p = to_point(c);
  Point z{};
  for (int a = 0; a < 3; ++a) z[a] = scale_[a] > 0 ? (p[a] - mean_[a]) / scale_[a] : 0.0;
  return z;
}

CellFeatures FeatureScaler::denormalize(const Point& z) const {
  Point p{};
  for (int a = 0; a < 3; ++a) p[a] = scale_[a] > 0 ? mean_[a] + z[a] * scale_[a] : mean_[a];
  return {p[0], p[1], p[2]};
}

std::vector<FeatureVector> normalize_features(std::span<const CellFeatures> cells) {
  const auto scaler = FeatureScaler::fit(cells);
  std::vector<FeatureVector> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back({c, scaler.normalize(c)});
  return out;
}

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> m(k);
  for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].push_back(i);
  return m;
}

double inertia_of(std::span<const Point> points, const std::vector<int>& labels,
                  const std::vector<Point>& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) total += sq_dist(points[i], centroids[labels[i]]);
  return total;
}

ClusterAssignment kmeans(std::span<const Point> points, int k, const KMeansOptions& opts) {
  const std::size_t n = points.size();
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("kmeans: k must satisfy 1 <= k <= number of points");

  Rng rng(opts.seed);
  std::vector<Point> centroids;
  if (opts.init) {
    centroids = *opts.init;
    if (static_cast<int>(centroids.size()) > k) centroids.resize(k);
  }
  seed_plus_plus(points, k, rng, centroids);

  ClusterAssignment out;
  out.k = k;
  std::vector<int> labels(n, -1), next(n, 0);
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    assign(points, centroids, next);
    out.inertia_history.push_back(inertia_of(points, next, centroids));
    if (next == labels) break;
    labels = next;
    centroids = means_of(points, labels, k, centroids);
  }
  if (labels.front() == -1) {  // max_iterations == 0
    assign(points, centroids, labels);
  }
  out.iterations = it;
  out.labels = std::move(labels);
  out.centroids = std::move(centroids);
  out.inertia = inertia_of(points, out.labels, out.centroids);
  return out;
}

GapCurve gap_curve(std::span<const Point> points, const GapOptions& opts) {
  if (opts.k_max < 1 || opts.references < 1)
    throw std::invalid_argument("select_k_gap: k_max and B must be at least 1");
  GapCurve curve;
  const std::size_t n = points.size();

  std::size_t distinct = 0;
  for (std::size_t i = 0; i < n && distinct < 2; ++i) {
    bool seen = false;
    for (std::size_t j = 0; j < i && !seen; ++j) seen = sq_dist(points[i], points[j]) == 0.0;
    if (!seen) ++distinct;
  }
  const int k_max = static_cast<int>(std::min<std::size_t>(opts.k_max, n));
  if (distinct < 2 || k_max == 1) {
    curve.selected_k = 1;
    return curve;
  }

  Point lo = points[0], hi = points[0];
  for (const auto& p : points)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }

  // Reference sets are drawn once and reused for every k.
  Rng rng(opts.seed);
  std::vector<std::vector<Point>> refs(opts.references, std::vector<Point>(n));
  for (auto& ref : refs)
    for (auto& p : ref)
      for (int a = 0; a < 3; ++a) p[a] = rng.uniform(lo[a], hi[a]);

  const double b = static_cast<double>(opts.references);
  for (int k = 1; k <= k_max; ++k) {
    KMeansOptions km;
    km.max_iterations = opts.max_iterations;
    km.seed = opts.seed * 1000003ULL + static_cast<std::uint64_t>(k);
    const double w = kmeans(points, k, km).inertia;
    const double log_w = std::log(std::max(w, 1e-300));

    std::vector<double> log_ref(opts.references);
    for (int r = 0; r < opts.references; ++r) {
      km.seed = opts.seed * 7919ULL + static_cast<std::uint64_t>(k * 131 + r);
      log_ref[r] = std::log(std::max(kmeans(refs[r], k, km).inertia, 1e-300));
    }
    double mean = 0.0;
    for (double v : log_ref) mean += v;
    mean /= b;
    double var = 0.0;
    for (double v : log_ref) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / b);

    curve.log_w.push_back(log_w);
    curve.gap.push_back(mean - log_w);
    curve.s.push_back(sd * std::sqrt(1.0 + 1.0 / b));
  }

  curve.selected_k = k_max;
  for (int k = 1; k < k_max; ++k) {
    if (curve.gap[k - 1] >= curve.gap[k] - curve.s[k]) {
      curve.selected_k = k;
      break;
    }
  }
  return curve;
}

int select_k_gap(std::span<const Point> points, const GapOptions& opts) {
  return gap_curve(points, opts).selected_k;
}

std::vector<Deviation> max_deviation(const ClusterAssignment& assignment,
                                     std::span<const CellFeatures> cells) {
  std::vector<Deviation> out(assignment.k);
  for (const auto& group : assignment.members()) {
    if (group.empty()) continue;
    double q = 0.0, t = 0.0;
    for (auto i : group) {
      q += cells[i].soc;
      t += cells[i].temperature;
    }
    q /= static_cast<double>(group.size());
    t /= static_cast<double>(group.size());
    auto& d = out[assignment.labels[group.front()]];
    for (auto i : group) {
      d.soc = std::max(d.soc, std::abs(cells[i].soc - q));
      d.temperature = std::max(d.temperature, std::abs(cells[i].temperature - t));
    }
  }
  return out;
}

}  // namespace bess
