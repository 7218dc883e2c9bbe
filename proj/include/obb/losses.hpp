#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "obb/geometry.hpp"

namespace obb {

/**
 * Convex quadratic f(x) = 1/2 (x - c)^T A (x - c) + b.
 *
 * The curvature A must be symmetric (componentwise within 1e-12) and positive
 * semidefinite. It is symmetrized exactly on construction, and its extreme
 * eigenvalues are cached since every consumer needs them.
 */
class QuadraticLoss {
public:
  QuadraticLoss(Matrix curvature, Vector center, double offset = 0.0)
      : curvature_(std::move(curvature)), center_(std::move(center)), offset_(offset) {
    if (curvature_.rows() != curvature_.cols()) throw std::invalid_argument("QuadraticLoss: curvature must be square");
    if (curvature_.rows() != center_.size()) throw std::invalid_argument("QuadraticLoss: curvature/center dimension mismatch");
    if (center_.size() == 0) throw std::invalid_argument("QuadraticLoss: empty dimension");
    if (!curvature_.allFinite() || !center_.allFinite() || !std::isfinite(offset_)) {
      throw std::invalid_argument("QuadraticLoss: non-finite parameters");
    }
    if ((curvature_ - curvature_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("QuadraticLoss: curvature is not symmetric");
    }
    curvature_ = 0.5 * (curvature_ + curvature_.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(curvature_, Eigen::EigenvaluesOnly);
    lambda_min_ = eig.eigenvalues().minCoeff();
    lambda_max_ = eig.eigenvalues().maxCoeff();
    if (lambda_min_ < -1e-12 * std::max(1.0, std::abs(lambda_max_))) {
      throw std::invalid_argument("QuadraticLoss: curvature is not positive semidefinite");
    }
  }

  const Matrix& curvature() const { return curvature_; }
  const Vector& center() const { return center_; }
  double offset() const { return offset_; }
  Eigen::Index dimension() const { return center_.size(); }
  double lambda_min() const { return std::max(0.0, lambda_min_); }
  double lambda_max() const { return lambda_max_; }

  QuadraticLoss with_center(Vector center) const {
    QuadraticLoss copy = *this;
    if (center.size() != center_.size()) throw std::invalid_argument("QuadraticLoss: center dimension mismatch");
    copy.center_ = std::move(center);
    return copy;
  }

  friend bool operator==(const QuadraticLoss& a, const QuadraticLoss& b) {
    return a.offset_ == b.offset_ && a.curvature_ == b.curvature_ && a.center_ == b.center_;
  }

private:
  Matrix curvature_;
  Vector center_;
  double offset_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

namespace detail {

inline void require_dimension(const QuadraticLoss& f, const Vector& x, const char* op) {
  if (x.size() != f.dimension()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (loss " + std::to_string(f.dimension()) +
                                ", point " + std::to_string(x.size()) + ")");
  }
}

}  // namespace detail

inline double evaluate(const QuadraticLoss& f, const Vector& x) {
  detail::require_dimension(f, x, "evaluate");
  const Vector r = x - f.center();
  return 0.5 * r.dot(f.curvature() * r) + f.offset();
}

inline Vector gradient(const QuadraticLoss& f, const Vector& x) {
  detail::require_dimension(f, x, "gradient");
  return f.curvature() * (x - f.center());
}

/// Gradient Lipschitz constant, lambda_max(A).
inline double lipschitz_constant(const QuadraticLoss& f) { return f.lambda_max(); }

// ---------------------------------------------------------------------------
// Seeded randomness. Bits come from std::mt19937_64 (fully specified by the
// standard); the uniform and normal transforms are spelled out here so the
// generated sequences do not depend on the standard library's distributions.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(detail::splitmix64(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(detail::splitmix64(seed ^ detail::splitmix64(stream + 1))) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t bits() { return engine_(); }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with R's diagonal signs folded into Q.
inline Matrix random_orthogonal(Eigen::Index n, Rng& rng) {
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

/// A = Q diag(lambda) Q^T with lambda ~ U[eig_lo, eig_hi], center ~ U[center_lo, center_hi]^n.
inline QuadraticLoss random_quadratic(Eigen::Index n, double eig_lo, double eig_hi, double center_lo, double center_hi,
                                      Rng& rng) {
  Vector lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) lambda[i] = rng.uniform(eig_lo, eig_hi);
  const Matrix q = random_orthogonal(n, rng);
  Matrix a = q * lambda.asDiagonal() * q.transpose();
  a = 0.5 * (a + a.transpose()).eval();
  Vector c(n);
  for (Eigen::Index i = 0; i < n; ++i) c[i] = rng.uniform(center_lo, center_hi);
  return QuadraticLoss(std::move(a), std::move(c), 0.0);
}

// ---------------------------------------------------------------------------
// Loss sequences

/// Same loss every round.
struct Stationary {
  QuadraticLoss loss;
};

/// Fixed curvature; center moves by drift * (1 + decay + ... + decay^(k-2)) at round k.
struct DriftingCenter {
  QuadraticLoss base;
  Vector drift;
  double decay = 1.0;
};

/// Fresh random quadratic each round, drawn from the (seed, k) stream.
struct RandomRotation {
  Eigen::Index dimension = 2;
  double eig_lo = 1.0;
  double eig_hi = 10.0;
  double center_lo = -1.0;
  double center_hi = 1.0;
};

/// Explicit list of losses, one per round.
struct Scripted {
  std::vector<QuadraticLoss> losses;
};

using Generator = std::variant<Stationary, DriftingCenter, RandomRotation, Scripted>;

/**
 * Time-varying loss sequence f_1, ..., f_K.
 *
 * generate(k) is a pure function of (generator, seed, k): the same inputs
 * always yield bitwise-identical losses, independent of call order.
 */
class LossSequence {
public:
  LossSequence(Generator generator, int horizon, std::uint64_t seed = 0)
      : generator_(std::move(generator)), horizon_(horizon), seed_(seed) {
    if (horizon_ < 1) throw std::invalid_argument("LossSequence: horizon must be positive");
    if (auto* d = std::get_if<DriftingCenter>(&generator_)) {
      if (d->drift.size() != d->base.dimension()) throw std::invalid_argument("DriftingCenter: drift dimension mismatch");
      if (!std::isfinite(d->decay) || d->decay < 0.0) throw std::invalid_argument("DriftingCenter: decay must be finite and >= 0");
    } else if (auto* r = std::get_if<RandomRotation>(&generator_)) {
      if (r->dimension < 1) throw std::invalid_argument("RandomRotation: dimension must be positive");
      if (!(0.0 <= r->eig_lo && r->eig_lo <= r->eig_hi)) throw std::invalid_argument("RandomRotation: need 0 <= eig_lo <= eig_hi");
      if (!(r->center_lo <= r->center_hi)) throw std::invalid_argument("RandomRotation: need center_lo <= center_hi");
    } else if (auto* s = std::get_if<Scripted>(&generator_)) {
      if (static_cast<int>(s->losses.size()) != horizon_) throw std::invalid_argument("Scripted: need exactly one loss per round");
      for (const auto& f : s->losses) {
        if (f.dimension() != s->losses.front().dimension()) throw std::invalid_argument("Scripted: mixed dimensions");
      }
    }
  }

  int horizon() const { return horizon_; }
  std::uint64_t seed() const { return seed_; }
  const Generator& generator() const { return generator_; }

  Eigen::Index dimension() const {
    return std::visit([](const auto& g) -> Eigen::Index {
      using G = std::decay_t<decltype(g)>;
      if constexpr (std::is_same_v<G, Stationary>) return g.loss.dimension();
      else if constexpr (std::is_same_v<G, DriftingCenter>) return g.base.dimension();
      else if constexpr (std::is_same_v<G, RandomRotation>) return g.dimension;
      else return g.losses.front().dimension();
    }, generator_);
  }

  /// Loss revealed at round k, 1 <= k <= horizon.
  QuadraticLoss generate(int k) const {
    if (k < 1 || k > horizon_) {
      throw std::invalid_argument("generate: round " + std::to_string(k) + " outside [1, " + std::to_string(horizon_) + "]");
    }
    return std::visit([&](const auto& g) -> QuadraticLoss {
      using G = std::decay_t<decltype(g)>;
      if constexpr (std::is_same_v<G, Stationary>) {
        return g.loss;
      } else if constexpr (std::is_same_v<G, DriftingCenter>) {
        const double steps = static_cast<double>(k - 1);
        const double factor = g.decay == 1.0 ? steps : (1.0 - std::pow(g.decay, steps)) / (1.0 - g.decay);
        return g.base.with_center(g.base.center() + factor * g.drift);
      } else if constexpr (std::is_same_v<G, RandomRotation>) {
        Rng rng(seed_, static_cast<std::uint64_t>(k));
        return random_quadratic(g.dimension, g.eig_lo, g.eig_hi, g.center_lo, g.center_hi, rng);
      } else {
        return g.losses[static_cast<std::size_t>(k - 1)];
      }
    }, generator_);
  }

  std::string describe() const {
    std::ostringstream os;
    std::visit([&](const auto& g) {
      using G = std::decay_t<decltype(g)>;
      if constexpr (std::is_same_v<G, Stationary>) os << "stationary";
      else if constexpr (std::is_same_v<G, DriftingCenter>) os << "drifting(decay=" << g.decay << ")";
      else if constexpr (std::is_same_v<G, RandomRotation>) os << "random_rotation(eig=[" << g.eig_lo << "," << g.eig_hi << "])";
      else os << "scripted";
    }, generator_);
    os << ",d=" << dimension() << ",K=" << horizon_ << ",seed=" << seed_;
    return os.str();
  }

private:
  Generator generator_;
  int horizon_;
  std::uint64_t seed_;
};

inline std::vector<QuadraticLoss> materialize(const LossSequence& seq) {
  std::vector<QuadraticLoss> out;
  out.reserve(static_cast<std::size_t>(seq.horizon()));
  for (int k = 1; k <= seq.horizon(); ++k) out.push_back(seq.generate(k));
  return out;
}

/// L = max_k L_k over the whole horizon.
inline double sequence_lipschitz(const LossSequence& seq) {
  double best = 0.0;
  for (int k = 1; k <= seq.horizon(); ++k) best = std::max(best, lipschitz_constant(seq.generate(k)));
  return best;
}

/**
 * Bound on max_k max_{x in X} |grad f_k(x)|.
 *
 * Per round this is lambda_max(A_k) times the distance from c_k to the
 * farthest member of X. It equals the true maximum whenever that direction
 * is a top eigenvector (always, for isotropic curvature) and is an upper
 * bound otherwise.
 */
inline double max_gradient_norm(const QuadraticLoss& f, const FeasibleSet& set) {
  if (f.dimension() != set.dimension()) throw std::invalid_argument("max_gradient_norm: dimension mismatch");
  return f.lambda_max() * (farthest_point(set, f.center()) - f.center()).norm();
}

inline double max_gradient_norm(const LossSequence& seq, const FeasibleSet& set) {
  if (seq.dimension() != set.dimension()) throw std::invalid_argument("max_gradient_norm: dimension mismatch");
  double best = 0.0;
  for (int k = 1; k <= seq.horizon(); ++k) best = std::max(best, max_gradient_norm(seq.generate(k), set));
  return best;
}

}  // namespace obb
