#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "obb/errors.hpp"
#include "obb/geometry.hpp"

namespace obb {

/// s = x(k) - x(k-1), y = grad f_k(x(k)) - grad f_{k-1}(x(k-1)).
struct SecantPair {
  Vector s;
  Vector y;
};

namespace detail {

inline void require_pair(const SecantPair& p) {
  if (p.s.size() != p.y.size()) throw std::invalid_argument("secant pair: s and y dimensions differ");
}

}  // namespace detail

/// s^T s / s^T y. No safeguarding.
inline double bb1(const SecantPair& p) {
  detail::require_pair(p);
  const double sy = p.s.dot(p.y);
  if (sy == 0.0) throw DegenerateSecant("bb1: s^T y = 0");
  return p.s.squaredNorm() / sy;
}

/// s^T y / y^T y. No safeguarding.
inline double bb2(const SecantPair& p) {
  detail::require_pair(p);
  const double yy = p.y.squaredNorm();
  if (yy == 0.0) throw DegenerateSecant("bb2: y = 0");
  return p.s.dot(p.y) / yy;
}

enum class StepKind { BB1, BB2, AlternatingBB, Constant, Diminishing };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::BB1: return "bb1";
    case StepKind::BB2: return "bb2";
    case StepKind::AlternatingBB: return "alt_bb";
    case StepKind::Constant: return "constant";
    case StepKind::Diminishing: return "diminishing";
  }
  return "?";
}

inline bool is_bb(StepKind k) { return k == StepKind::BB1 || k == StepKind::BB2 || k == StepKind::AlternatingBB; }

/// Clamp interval and replacement value for BB steps.
struct Safeguard {
  double alpha_min = 1e-6;
  double alpha_max = 1e3;
  double fallback = 0.1;

  friend bool operator==(const Safeguard&, const Safeguard&) = default;
};

/// Threshold below which |s^T y| (BB1) or |y|^2 (BB2) counts as degenerate.
inline constexpr double kDegenerateSecantTol = 1e-14;

struct StepDecision {
  double alpha = 0.0;
  bool degenerate = false;
};

/**
 * Step-size policy with per-run state.
 *
 * Policies only ever see the round index and the latest secant pair; the
 * horizon is deliberately not part of the interface. One instance serves
 * one run at a time.
 */
class StepPolicy {
public:
  static StepPolicy bb1(Safeguard g = {}) { return StepPolicy(StepKind::BB1, 0.0, 1, g); }
  static StepPolicy bb2(Safeguard g = {}) { return StepPolicy(StepKind::BB2, 0.0, 1, g); }
  static StepPolicy alternating(int period = 10, Safeguard g = {}) {
    return StepPolicy(StepKind::AlternatingBB, 0.0, period, g);
  }
  static StepPolicy constant(double alpha0) { return StepPolicy(StepKind::Constant, alpha0, 1, {}); }
  static StepPolicy diminishing(double c) { return StepPolicy(StepKind::Diminishing, c, 1, {}); }

  StepKind kind() const { return kind_; }
  /// alpha0 for Constant, c for Diminishing; unused otherwise.
  double scale() const { return scale_; }
  int period() const { return period_; }
  const Safeguard& safeguard() const { return guard_; }
  double last_step() const { return last_; }
  int rounds_seen() const { return counter_; }

  std::string describe() const {
    std::string out = to_string(kind_);
    if (kind_ == StepKind::Constant || kind_ == StepKind::Diminishing) out += "(" + std::to_string(scale_) + ")";
    if (kind_ == StepKind::AlternatingBB) out += "(M=" + std::to_string(period_) + ")";
    return out;
  }

  /// Which BB formula round k uses: BB1 while ceil(k/M) is odd, BB2 while even.
  StepKind formula_at(int k) const {
    if (kind_ != StepKind::AlternatingBB) return kind_;
    const int block = (k + period_ - 1) / period_;
    return block % 2 == 1 ? StepKind::BB1 : StepKind::BB2;
  }

  StepDecision next_step(const std::optional<SecantPair>& pair, int k) {
    if (k < 1) throw std::invalid_argument("next_step: round index must be >= 1");
    StepDecision d;
    switch (kind_) {
      case StepKind::Constant: d.alpha = scale_; break;
      case StepKind::Diminishing: d.alpha = scale_ / std::sqrt(static_cast<double>(k)); break;
      default: d = bb_step(pair, formula_at(k)); break;
    }
    last_ = d.alpha;
    ++counter_;
    return d;
  }

  void reset() {
    last_ = 0.0;
    counter_ = 0;
  }

private:
  StepPolicy(StepKind kind, double scale, int period, Safeguard g) : kind_(kind), scale_(scale), period_(period), guard_(g) {
    if ((kind == StepKind::Constant || kind == StepKind::Diminishing) && !(scale > 0.0 && std::isfinite(scale))) {
      throw std::invalid_argument("step policy: scale must be positive and finite");
    }
    if (period < 1) throw std::invalid_argument("step policy: period must be >= 1");
    if (!(g.alpha_min > 0.0 && g.alpha_min <= g.fallback && g.fallback <= g.alpha_max && std::isfinite(g.alpha_max))) {
      throw std::invalid_argument("step policy: need 0 < alpha_min <= fallback <= alpha_max < inf");
    }
  }

  StepDecision bb_step(const std::optional<SecantPair>& pair, StepKind formula) const {
    if (!pair) return {guard_.fallback, false};
    detail::require_pair(*pair);
    const double sy = pair->s.dot(pair->y);
    double raw = 0.0;
    if (formula == StepKind::BB1) {
      if (std::abs(sy) < kDegenerateSecantTol) return {guard_.fallback, true};
      raw = pair->s.squaredNorm() / sy;
    } else {
      const double yy = pair->y.squaredNorm();
      if (yy < kDegenerateSecantTol) return {guard_.fallback, true};
      raw = sy / yy;
    }
    if (!std::isfinite(raw) || raw <= 0.0) return {guard_.fallback, true};
    return {std::clamp(raw, guard_.alpha_min, guard_.alpha_max), false};
  }

  StepKind kind_;
  double scale_;
  int period_;
  Safeguard guard_;
  double last_ = 0.0;
  int counter_ = 0;
};

}  // namespace obb
