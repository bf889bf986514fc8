#include "coadapt/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "coadapt/error.hpp"
#include "coadapt/hash.hpp"
#include "coadapt/simplex.hpp"
#include "json.hpp"

namespace coadapt::pareto {

bool dominates(const PlanePoint& a, const PlanePoint& b) {
  return a.x <= b.x && a.y <= b.y && (a.x < b.x || a.y < b.y);
}

namespace {

double cross(const PlanePoint& o, const PlanePoint& a, const PlanePoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::vector<PlanePoint> nondominated(std::span<const PlanePoint> points) {
  if (points.empty()) throw ArityError("nondominated: no points");
  std::vector<PlanePoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const PlanePoint& a, const PlanePoint& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  // Sweep by x: a point is minimal when its y beats every point to its left.
  std::vector<PlanePoint> minimal;
  double best_y = std::numeric_limits<double>::infinity();
  for (const auto& p : sorted) {
    if (p.y < best_y) {
      minimal.push_back(p);
      best_y = p.y;
    }
  }
  // Lower convex hull, keeping collinear points.
  std::vector<PlanePoint> hull;
  for (const auto& p : minimal) {
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& a = hull.back();
      double scale = std::abs(a.x - o.x) * std::abs(p.y - o.y) + std::abs(a.y - o.y) * std::abs(p.x - o.x);
      if (cross(o, a, p) < -1e-12 * scale) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  return hull;
}

// ---------------------------------------------------------------------------

double Segment::value(double x) const {
  double t = x - x0;
  return a + t * (b + t * (c + t * d));
}

double Segment::slope(double x) const {
  double t = x - x0;
  return b + t * (2.0 * c + 3.0 * d * t);
}

double Segment::curvature(double x) const { return 2.0 * c + 6.0 * d * (x - x0); }

double Segment::integral() const {
  double h = x1 - x0;
  return h * (a + h * (b / 2.0 + h * (c / 3.0 + h * d / 4.0)));
}

ParetoFrontier::ParetoFrontier(std::vector<PlanePoint> knots, std::vector<Segment> segments)
    : knots_(std::move(knots)), segments_(std::move(segments)) {
  if (knots_.empty()) throw ArityError("frontier without knots");
  if (segments_.size() + 1 != knots_.size()) throw ArityError("frontier needs one segment per knot interval");
}

const Segment& ParetoFrontier::segment_at(double x) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                             [](double v, const Segment& s) { return v < s.x1; });
  if (it == segments_.end()) --it;
  return *it;
}

double ParetoFrontier::value(double x) const {
  if (segments_.empty()) return knots_.front().y;
  x = std::clamp(x, x_min(), x_max());
  return segment_at(x).value(x);
}

double ParetoFrontier::slope(double x) const {
  if (segments_.empty()) return 0.0;
  x = std::clamp(x, x_min(), x_max());
  return segment_at(x).slope(x);
}

double ParetoFrontier::curvature(double x) const {
  if (segments_.empty()) return 0.0;
  x = std::clamp(x, x_min(), x_max());
  return segment_at(x).curvature(x);
}

double ParetoFrontier::area() const {
  double total = 0.0;
  for (const auto& s : segments_) total += s.integral();
  return total;
}

double polyline_area(std::span<const PlanePoint> knots) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    total += (knots[i + 1].x - knots[i].x) * (knots[i].y + knots[i + 1].y) / 2.0;
  }
  return total;
}

ParetoFrontier fit_frontier_spline(std::span<const PlanePoint> knots) {
  if (knots.empty()) throw ArityError("spline fit needs at least one knot");
  const std::size_t n = knots.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(knots[i + 1].x > knots[i].x)) throw ArityError("spline knots must have strictly increasing x");
  }
  std::vector<PlanePoint> kv(knots.begin(), knots.end());
  if (n == 1) return ParetoFrontier(std::move(kv), {});

  // Knot values v = y − p and slopes s = −q with p, q ≥ 0.
  // Variables: p_0..p_{n−1}, q_0..q_{n−1}.
  const std::size_t nv = 2 * n;
  auto P = [](std::size_t i) { return i; };
  auto Q = [n](std::size_t i) { return n + i; };
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  std::vector<double> c(nv, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = knots[i + 1].x - knots[i].x;
    const double dy = knots[i + 1].y - knots[i].y;
    // g''(x_i) ≥ 0
    std::vector<double> row(nv, 0.0);
    row[P(i)] = -6.0 / h;
    row[P(i + 1)] = 6.0 / h;
    row[Q(i)] = -4.0;
    row[Q(i + 1)] = -2.0;
    A.push_back(row);
    b.push_back(6.0 * dy / h);
    // g''(x_{i+1}) ≥ 0
    std::fill(row.begin(), row.end(), 0.0);
    row[P(i)] = 6.0 / h;
    row[P(i + 1)] = -6.0 / h;
    row[Q(i)] = 2.0;
    row[Q(i + 1)] = 4.0;
    A.push_back(row);
    b.push_back(-6.0 * dy / h);
    // Area h(v0+v1)/2 + h²(s0−s1)/12, constant part dropped.
    c[P(i)] -= h / 2.0;
    c[P(i + 1)] -= h / 2.0;
    c[Q(i)] -= h * h / 12.0;
    c[Q(i + 1)] += h * h / 12.0;
  }
  auto lp = simplex::maximize(A, b, c);
  if (lp.status != simplex::Status::optimal) {
    throw NumericalError(std::string("frontier spline LP is ") +
                         (lp.status == simplex::Status::infeasible ? "infeasible" : "unbounded"));
  }
  std::vector<Segment> segments;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = knots[i + 1].x - knots[i].x;
    const double v0 = knots[i].y - lp.x[P(i)], v1 = knots[i + 1].y - lp.x[P(i + 1)];
    const double s0 = -lp.x[Q(i)], s1 = -lp.x[Q(i + 1)];
    const double delta = (v1 - v0) / h;
    Segment s;
    s.x0 = knots[i].x;
    s.x1 = knots[i + 1].x;
    s.a = v0;
    s.b = s0;
    s.c = (3.0 * delta - 2.0 * s0 - s1) / h;
    s.d = (-2.0 * delta + s0 + s1) / (h * h);
    segments.push_back(s);
  }
  return ParetoFrontier(std::move(kv), std::move(segments));
}

// ---------------------------------------------------------------------------

KernelSmoother::KernelSmoother(std::vector<KernelSample> samples, double L1, double L2, KernelForm form)
    : samples_(std::move(samples)), L1_(L1), L2_(L2), form_(form) {
  if (samples_.empty()) throw ArityError("kernel smoother without samples");
  if (!std::isfinite(L1_) || !std::isfinite(L2_) || L1_ < 0.0 || L2_ < 0.0) {
    throw ParameterError("kernel scales must be finite and non-negative");
  }
  collapsed_ = true;
  for (const auto& s : samples_) {
    mean_z_ += s.z;
    collapsed_ = collapsed_ && s.x == samples_.front().x && s.y == samples_.front().y;
  }
  mean_z_ /= static_cast<double>(samples_.size());
}

double KernelSmoother::weighted(double x, double y, std::size_t skip) const {
  const std::size_t n = samples_.size();
  if (form_ == KernelForm::gaussian) {
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (i == skip) continue;
      double dx = samples_[i].x - x, dy = samples_[i].y - y;
      max_log = std::max(max_log, -(L1_ * dx * dx + L2_ * dy * dy));
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == skip) continue;
      double dx = samples_[i].x - x, dy = samples_[i].y - y;
      double w = std::exp(-(L1_ * dx * dx + L2_ * dy * dy) - max_log);
      num += w * samples_[i].z;
      den += w;
    }
    return num / den;
  }
  double num = 0.0, den = 0.0, plain = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == skip) continue;
    double dx = samples_[i].x - x, dy = samples_[i].y - y;
    double w = L1_ * dx * dx + L2_ * dy * dy;
    num += w * samples_[i].z;
    den += w;
    plain += samples_[i].z;
    ++count;
  }
  return den > 0.0 ? num / den : plain / static_cast<double>(count);
}

double KernelSmoother::operator()(double x, double y) const {
  if (collapsed_) return mean_z_;
  return weighted(x, y, samples_.size());
}

double KernelSmoother::leave_one_out(std::size_t i) const {
  if (samples_.size() < 2) throw ArityError("leave-one-out needs two samples");
  return weighted(samples_[i].x, samples_[i].y, i);
}

double KernelSmoother::loo_error() const {
  if (collapsed_) {
    double ss = 0.0;
    for (const auto& s : samples_) ss += (s.z - mean_z_) * (s.z - mean_z_);
    return ss / static_cast<double>(samples_.size());
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    double e = leave_one_out(i) - samples_[i].z;
    ss += e * e;
  }
  return ss / static_cast<double>(samples_.size());
}

KernelSmoother fit_kernel_smoother(std::vector<KernelSample> samples, const SmootherSearch& search) {
  if (samples.size() < 2) throw ArityError("kernel smoother fit needs at least two samples");
  KernelSmoother probe(samples, 0.0, 0.0, search.form);
  if (probe.collapsed()) return probe;

  const std::size_t n = samples.size();
  std::vector<double> dx2(n * n), dy2(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dx = samples[i].x - samples[j].x, dy = samples[i].y - samples[j].y;
      dx2[i * n + j] = dx * dx;
      dy2[i * n + j] = dy * dy;
    }
  }
  std::vector<double> logw(n);
  auto objective = [&](double L1, double L2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double pred;
      if (search.form == KernelForm::gaussian) {
        double max_log = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          logw[j] = j == i ? 0.0 : -(L1 * dx2[i * n + j] + L2 * dy2[i * n + j]);
          if (j != i) max_log = std::max(max_log, logw[j]);
        }
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          double w = std::exp(logw[j] - max_log);
          num += w * samples[j].z;
          den += w;
        }
        pred = num / den;
      } else {
        double num = 0.0, den = 0.0, plain = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          double w = L1 * dx2[i * n + j] + L2 * dy2[i * n + j];
          num += w * samples[j].z;
          den += w;
          plain += samples[j].z;
        }
        pred = den > 0.0 ? num / den : plain / static_cast<double>(n - 1);
      }
      double e = pred - samples[i].z;
      ss += e * e;
    }
    return ss / static_cast<double>(n) + search.regularization * (L1 * L1 + L2 * L2);
  };

  std::mt19937_64 rng(search.seed);
  std::uniform_real_distribution<double> unif(0.0, search.scale_max);
  double best = std::numeric_limits<double>::infinity(), best1 = 0.0, best2 = 0.0;
  for (int k = 0; k < search.draws; ++k) {
    double L1 = unif(rng), L2 = unif(rng);
    double v = objective(L1, L2);
    if (v < best) {
      best = v;
      best1 = L1;
      best2 = L2;
    }
  }
  return KernelSmoother(std::move(samples), best1, best2, search.form);
}

// ---------------------------------------------------------------------------

std::string to_string(Region r) {
  switch (r) {
    case Region::full: return "full";
    case Region::il_end: return "il-end";
    case Region::dl_end: return "dl-end";
  }
  return "unknown";
}

double frontier_congruence(const ParetoFrontier& frontier, const KernelSmoother& smoother, Region region,
                           int points) {
  const auto& knots = frontier.knots();
  if (region == Region::il_end) return smoother(knots.front().x, knots.front().y);
  if (region == Region::dl_end) return smoother(knots.back().x, knots.back().y);
  if (knots.size() == 1 || points < 2) return smoother(knots.front().x, frontier.value(knots.front().x));
  double total = 0.0;
  const double lo = frontier.x_min(), hi = frontier.x_max();
  for (int k = 0; k < points; ++k) {
    double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    total += smoother(x, frontier.value(x));
  }
  return total / static_cast<double>(points);
}

double raw_frontier_congruence(std::span<const optimize::EfficiencyPoint> points, Region region) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& p : points) {
    if (p.tag != optimize::Provenance::optimized || !p.congruence) continue;
    if (region == Region::il_end && p.lambda != 1.0) continue;
    if (region == Region::dl_end && p.lambda != 0.0) continue;
    total += *p.congruence;
    ++count;
  }
  if (count == 0) throw DegenerateError("no optimized points with a congruence for region " + to_string(region));
  return total / static_cast<double>(count);
}

std::string frontier_to_json(const ParetoFrontier& frontier) {
  nlohmann::ordered_json j;
  j["knots"] = nlohmann::ordered_json::array();
  for (const auto& k : frontier.knots()) j["knots"].push_back({k.x, k.y});
  j["segments"] = nlohmann::ordered_json::array();
  for (const auto& s : frontier.segments()) {
    j["segments"].push_back({{"x0", s.x0}, {"x1", s.x1}, {"a", s.a}, {"b", s.b}, {"c", s.c}, {"d", s.d}});
  }
  return j.dump(2);
}

ParetoFrontier frontier_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    std::vector<PlanePoint> knots;
    for (const auto& k : j.at("knots")) knots.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
    std::vector<Segment> segments;
    for (const auto& s : j.at("segments")) {
      segments.push_back({s.at("x0").get<double>(), s.at("x1").get<double>(), s.at("a").get<double>(),
                          s.at("b").get<double>(), s.at("c").get<double>(), s.at("d").get<double>()});
    }
    return ParetoFrontier(std::move(knots), std::move(segments));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("frontier JSON: ") + e.what());
  }
}

std::string smoother_to_json(const KernelSmoother& smoother) {
  std::uint64_t h = fnv1a64("");
  char buf[96];
  for (const auto& s : smoother.samples()) {
    int len = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.x, s.y, s.z);
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(len)), h);
  }
  nlohmann::ordered_json j;
  j["L1"] = smoother.L1();
  j["L2"] = smoother.L2();
  j["form"] = smoother.form() == KernelForm::gaussian ? "gaussian" : "literal";
  j["samples"] = smoother.samples().size();
  j["samples_digest"] = hex64(h);
  return j.dump(2);
}

}  // namespace coadapt::pareto
