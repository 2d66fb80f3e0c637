#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bess {

/// Raw clustering features of one cell: SoC, temperature [K] and
/// internal resistance [ohm].
struct CellFeatures {
  double soc = 0.0;
  double temperature = 0.0;
  double resistance = 0.0;
};

using Point = std::array<double, 3>;

/// Per-axis z-score transform fitted on a population. Axes with zero
/// variance map to 0 and back to the population mean.
class FeatureScaler {
 public:
  static FeatureScaler fit(std::span<const CellFeatures> cells);

  Point normalize(const CellFeatures& c) const;
  CellFeatures denormalize(const Point& p) const;

  const Point& mean() const { return mean_; }
  const Point& scale() const { return scale_; }

 private:
  Point mean_{};
  Point scale_{};  // 0 marks a degenerate axis
};

struct FeatureVector {
  CellFeatures raw;
  Point normalized{};
};

std::vector<FeatureVector> normalize_features(std::span<const CellFeatures> cells);

struct ClusterAssignment {
  std::vector<int> labels;
  std::vector<Point> centroids;
  int k = 0;
  double inertia = 0.0;
  int iterations = 0;
  /// Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_history;

  std::vector<std::vector<std::size_t>> members() const;
};

struct KMeansOptions {
  int max_iterations = 100;
  std::uint64_t seed = 1;
  /// Initial centroids. When the count differs from k, the list is
  /// truncated or completed by k-means++ draws.
  std::optional<std::vector<Point>> init;
};

/// Lloyd's algorithm. Ties in the assignment go to the lowest centroid
/// index; a cluster that empties receives the point farthest from its
/// own centroid. Throws std::invalid_argument unless 1 <= k <= points.
ClusterAssignment kmeans(std::span<const Point> points, int k, const KMeansOptions& opts = {});

double inertia_of(std::span<const Point> points, const std::vector<int>& labels,
                  const std::vector<Point>& centroids);

struct GapOptions {
  int k_max = 20;
  int references = 10;  // B
  std::uint64_t seed = 1;
  int max_iterations = 100;
};

struct GapCurve {
  std::vector<double> gap;   // index k-1
  std::vector<double> s;     // sd_k * sqrt(1 + 1/B)
  std::vector<double> log_w; // data log dispersion
  int selected_k = 1;
};

/// Gap statistic over k = 1..k_max with reference sets drawn uniformly
/// over the bounding box of the data. Selects the smallest k with
/// Gap(k) >= Gap(k+1) - s_{k+1}, or k_max when none does.
GapCurve gap_curve(std::span<const Point> points, const GapOptions& opts);
int select_k_gap(std::span<const Point> points, const GapOptions& opts);

struct Deviation {
  double soc = 0.0;
  double temperature = 0.0;
};

/// Largest |member - centroid| per cluster in raw SoC and temperature units.
std::vector<Deviation> max_deviation(const ClusterAssignment& assignment,
                                     std::span<const CellFeatures> cells);

}  // namespace bess
