#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

#include <Eigen/Dense>

namespace obb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Closed Euclidean ball {x : |x - center| <= radius}.
struct Ball {
  Vector center;
  double radius = 1.0;
};

/// Axis-aligned box {x : lower <= x <= upper}.
struct Box {
  Vector lower;
  Vector upper;
};

/**
 * Bounded, closed, convex decision set. Immutable once constructed.
 *
 * Only balls and boxes are supported; both project in closed form.
 */
class FeasibleSet {
public:
  explicit FeasibleSet(Ball ball) : shape_(std::move(ball)) { validate(); }
  explicit FeasibleSet(Box box) : shape_(std::move(box)) { validate(); }

  static FeasibleSet ball(Vector center, double radius) { return FeasibleSet(Ball{std::move(center), radius}); }
  static FeasibleSet box(Vector lower, Vector upper) { return FeasibleSet(Box{std::move(lower), std::move(upper)}); }

  Eigen::Index dimension() const {
    return std::visit([](const auto& s) -> Eigen::Index {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Ball>) {
        return s.center.size();
      } else {
        return s.lower.size();
      }
    }, shape_);
  }

  bool is_ball() const { return std::holds_alternative<Ball>(shape_); }
  bool is_box() const { return std::holds_alternative<Box>(shape_); }
  const Ball& as_ball() const { return std::get<Ball>(shape_); }
  const Box& as_box() const { return std::get<Box>(shape_); }

  /// Short human-readable form, used in trajectory metadata.
  std::string describe() const {
    std::ostringstream os;
    if (is_ball()) {
      os << "ball(d=" << dimension() << ",r=" << as_ball().radius << ")";
    } else {
      os << "box(d=" << dimension() << ")";
    }
    return os.str();
  }

private:
  void validate() const {
    if (is_ball()) {
      const auto& b = as_ball();
      if (b.center.size() == 0) throw std::invalid_argument("ball: empty center");
      if (!(b.radius > 0.0) || !std::isfinite(b.radius)) throw std::invalid_argument("ball: radius must be positive and finite");
      if (!b.center.allFinite()) throw std::invalid_argument("ball: center must be finite");
    } else {
      const auto& b = as_box();
      if (b.lower.size() == 0) throw std::invalid_argument("box: empty bounds");
      if (b.lower.size() != b.upper.size()) throw std::invalid_argument("box: lower/upper dimension mismatch");
      if (!b.lower.allFinite() || !b.upper.allFinite()) throw std::invalid_argument("box: bounds must be finite");
      for (Eigen::Index i = 0; i < b.lower.size(); ++i) {
        if (b.lower[i] > b.upper[i]) throw std::invalid_argument("box: lower exceeds upper at index " + std::to_string(i));
      }
    }
  }

  std::variant<Ball, Box> shape_;
};

namespace detail {

inline void require_dimension(const FeasibleSet& set, const Vector& x, const char* op) {
  if (x.size() != set.dimension()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (set " + std::to_string(set.dimension()) +
                                ", point " + std::to_string(x.size()) + ")");
  }
}

}  // namespace detail

/// Euclidean-nearest member of `set`. Members are returned unchanged.
inline Vector project(const FeasibleSet& set, const Vector& x) {
  detail::require_dimension(set, x, "project");
  if (set.is_ball()) {
    const auto& b = set.as_ball();
    const Vector offset = x - b.center;
    const double dist = offset.norm();
    if (dist <= b.radius) return x;
    return b.center + (b.radius / dist) * offset;
  }
  const auto& b = set.as_box();
  return x.cwiseMax(b.lower).cwiseMin(b.upper);
}

/// sup |x - y| over member pairs: 2r for a ball, the main diagonal for a box.
inline double diameter(const FeasibleSet& set) {
  if (set.is_ball()) return 2.0 * set.as_ball().radius;
  const auto& b = set.as_box();
  return (b.upper - b.lower).norm();
}

/// Euclidean distance from x to the set (zero for members).
inline double distance(const FeasibleSet& set, const Vector& x) {
  detail::require_dimension(set, x, "distance");
  if (set.is_ball()) {
    const auto& b = set.as_ball();
    return std::max(0.0, (x - b.center).norm() - b.radius);
  }
  const auto& b = set.as_box();
  const Vector below = (b.lower - x).cwiseMax(0.0);
  const Vector above = (x - b.upper).cwiseMax(0.0);
  return (below + above).norm();
}

inline bool contains(const FeasibleSet& set, const Vector& x, double tol) {
  if (tol < 0.0) throw std::invalid_argument("contains: tolerance must be non-negative");
  return distance(set, x) <= tol;
}

/// Member point farthest from `p`. Used to bound gradient norms over the set.
inline Vector farthest_point(const FeasibleSet& set, const Vector& p) {
  detail::require_dimension(set, p, "farthest_point");
  if (set.is_ball()) {
    const auto& b = set.as_ball();
    Vector dir = b.center - p;
    const double n = dir.norm();
    if (n == 0.0) {
      dir = Vector::Zero(p.size());
      dir[0] = 1.0;
    } else {
      dir /= n;
    }
    return b.center + b.radius * dir;
  }
  // The farthest point of a box is the corner picking, per coordinate, the bound farther from p.
  const auto& b = set.as_box();
  Vector corner(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    corner[i] = std::abs(b.lower[i] - p[i]) >= std::abs(b.upper[i] - p[i]) ? b.lower[i] : b.upper[i];
  }
  return corner;
}

}  // namespace obb
