#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coadapt/optimize.hpp"

namespace coadapt::pareto {

struct PlanePoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

/// True when `a` is at least as good as `b` on both axes and better on one
/// (lower is better on both).
bool dominates(const PlanePoint& a, const PlanePoint& b);

/// Pareto-minimal points that lie on the lower-left convex hull, sorted by
/// increasing x (hence strictly decreasing y). Collinear hull points are kept.
/// Throws ArityError on empty input.
std::vector<PlanePoint> nondominated(std::span<const PlanePoint> points);

/// g(x) = a + b·t + c·t² + d·t³ with t = x − x0 on [x0, x1].
struct Segment {
  double x0 = 0.0, x1 = 0.0;
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  double value(double x) const;
  double slope(double x) const;
  double curvature(double x) const;
  double integral() const;
};

class ParetoFrontier {
 public:
  ParetoFrontier() = default;
  ParetoFrontier(std::vector<PlanePoint> knots, std::vector<Segment> segments);

  const std::vector<PlanePoint>& knots() const { return knots_; }
  const std::vector<Segment>& segments() const { return segments_; }
  double x_min() const { return knots_.front().x; }
  double x_max() const { return knots_.back().x; }

  /// Spline value; x is clamped to the knot range. A single-knot frontier is
  /// the constant knot height.
  double value(double x) const;
  double slope(double x) const;
  double curvature(double x) const;
  double area() const;

 private:
  const Segment& segment_at(double x) const;

  std::vector<PlanePoint> knots_;
  std::vector<Segment> segments_;
};

/// Maximizes the area under a C¹ piecewise cubic through the knot abscissae
/// subject to g(xᵢ) ≤ yᵢ, g'' ≥ 0 and g' ≤ 0, by linear programming over
/// Hermite values and slopes. Knots must be sorted by strictly increasing x.
/// A single knot yields a segment-free frontier; no knots throw ArityError.
ParetoFrontier fit_frontier_spline(std::span<const PlanePoint> knots);

/// Area under the piecewise-linear interpolant of the knots.
double polyline_area(std::span<const PlanePoint> knots);

// ---------------------------------------------------------------------------

struct KernelSample {
  double x = 0.0, y = 0.0, z = 0.0;
};

enum class KernelForm {
  gaussian,  // w ∝ exp(−(L1·dx² + L2·dy²))
  literal,   // w ∝ L1·dx² + L2·dy², as the formula is printed
};

class KernelSmoother {
 public:
  KernelSmoother() = default;
  KernelSmoother(std::vector<KernelSample> samples, double L1, double L2,
                 KernelForm form = KernelForm::gaussian);

  double operator()(double x, double y) const;
  /// Prediction at sample i from the other samples.
  double leave_one_out(std::size_t i) const;
  /// Mean squared leave-one-out error.
  double loo_error() const;

  double L1() const { return L1_; }
  double L2() const { return L2_; }
  KernelForm form() const { return form_; }
  const std::vector<KernelSample>& samples() const { return samples_; }
  /// True when all samples share one location and the mean z is returned.
  bool collapsed() const { return collapsed_; }

 private:
  double weighted(double x, double y, std::size_t skip) const;

  std::vector<KernelSample> samples_;
  double L1_ = 0.0, L2_ = 0.0;
  KernelForm form_ = KernelForm::gaussian;
  bool collapsed_ = false;
  double mean_z_ = 0.0;
};

struct SmootherSearch {
  std::uint64_t seed = 1;
  int draws = 5000;
  double scale_max = 100.0;
  double regularization = 1e-5;
  KernelForm form = KernelForm::gaussian;
};

/// Random search over (L1, L2) ∈ [0, scale_max]² minimizing the mean squared
/// leave-one-out error plus regularization·(L1² + L2²). Throws ArityError
/// with fewer than two samples.
KernelSmoother fit_kernel_smoother(std::vector<KernelSample> samples, const SmootherSearch& search = {});

enum class Region { full, il_end, dl_end };

std::string to_string(Region r);

/// full: mean over `points` x-equispaced positions on the spline;
/// il_end: the leftmost knot; dl_end: the bottom-right knot.
double frontier_congruence(const ParetoFrontier& frontier, const KernelSmoother& smoother, Region region,
                           int points = 200);

/// Mean congruence of optimized points: all λ (full), λ = 1 (il_end) or
/// λ = 0 (dl_end). Points without a congruence are skipped. Throws
/// DegenerateError when nothing is selected.
double raw_frontier_congruence(std::span<const optimize::EfficiencyPoint> points, Region region);

/// {"knots":[[x,y],...],"segments":[{"x0":..,"x1":..,"a":..,"b":..,"c":..,"d":..}]}
std::string frontier_to_json(const ParetoFrontier& frontier);
ParetoFrontier frontier_from_json(const std::string& text);
/// {"L1":..,"L2":..,"form":..,"samples":N,"samples_digest":"<fnv1a hex>"}
std::string smoother_to_json(const KernelSmoother& smoother);

}  // namespace coadapt::pareto
