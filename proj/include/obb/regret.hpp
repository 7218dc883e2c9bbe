#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "obb/csv.hpp"
#include "obb/errors.hpp"
#include "obb/geometry.hpp"
#include "obb/learner.hpp"
#include "obb/losses.hpp"
#include "obb/steppers.hpp"

namespace obb {

// ---------------------------------------------------------------------------
// Hindsight minimizer

/// sum_k f_k(x) = 1/2 x^T H x - h^T x + const, with H = sum A_k and h = sum A_k c_k.
struct SummedQuadratic {
  Matrix curvature;
  Vector linear;
};

inline SummedQuadratic summed_quadratic(const LossSequence& seq, int horizon) {
  if (horizon < 1 || horizon > seq.horizon()) throw std::invalid_argument("summed_quadratic: bad horizon");
  const auto n = seq.dimension();
  SummedQuadratic q{Matrix::Zero(n, n), Vector::Zero(n)};
  for (int k = 1; k <= horizon; ++k) {
    const QuadraticLoss f = seq.generate(k);
    q.curvature += f.curvature();
    q.linear += f.curvature() * f.center();
  }
  return q;
}

struct OracleOptions {
  double tol = 1e-12;
  long max_iterations = 1'000'000;
};

/**
 * Projected gradient descent on the summed quadratic with step 1/lambda_max(H),
 * stopped once successive iterates differ by less than `tol`.
 */
inline Vector projected_gradient_oracle(const SummedQuadratic& q, const FeasibleSet& set, const Vector& start,
                                        OracleOptions opts = {}) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q.curvature, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  Vector x = project(set, start);
  if (!(lmax > 0.0)) return x;  // zero curvature: every feasible point is optimal
  const double step = 1.0 / lmax;
  for (long it = 0; it < opts.max_iterations; ++it) {
    Vector next = project(set, x - step * (q.curvature * x - q.linear));
    if (!next.allFinite()) throw NumericalFailure("hindsight oracle: non-finite iterate");
    const double moved = (next - x).norm();
    x = std::move(next);
    if (moved < opts.tol) return x;
  }
  throw NumericalFailure("hindsight oracle: no convergence after " + std::to_string(opts.max_iterations) + " iterations");
}

/**
 * argmin over the set of the summed quadratic. Closed form H^{-1} h when H is
 * nonsingular and the unconstrained minimizer is feasible; otherwise the
 * projected-gradient oracle, started from the projected closed form (or the
 * projected origin when H is singular).
 */
inline Vector hindsight_minimizer(const SummedQuadratic& q, const FeasibleSet& set, OracleOptions opts = {}) {
  if (q.curvature.rows() != set.dimension()) throw std::invalid_argument("hindsight_minimizer: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q.curvature);
  const auto& lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  Vector start = Vector::Zero(set.dimension());
  if (lmax > 0.0 && lambda.minCoeff() > 1e-12 * lmax) {
    const Matrix& v = eig.eigenvectors();
    Vector xhat = v * (v.transpose() * q.linear).cwiseQuotient(lambda);
    if (contains(set, xhat, 0.0)) return xhat;
    start = std::move(xhat);
  }
  return projected_gradient_oracle(q, set, start, opts);
}

inline Vector hindsight_minimizer(const LossSequence& seq, const FeasibleSet& set, int horizon) {
  return hindsight_minimizer(summed_quadratic(seq, horizon), set);
}

inline Vector hindsight_minimizer(const LossSequence& seq, const FeasibleSet& set) {
  return hindsight_minimizer(seq, set, seq.horizon());
}

// ---------------------------------------------------------------------------
// Regret curves

/// R(k) = sum_{j<=k} f_j(x(j)) - sum_{j<=k} f_j(x*), against one fixed comparator.
inline std::vector<double> static_regret(const TrajectoryRecord& traj, const LossSequence& seq, const Vector& xstar) {
  std::vector<double> out(static_cast<std::size_t>(traj.rounds()));
  double played = 0.0;
  double best = 0.0;
  for (int k = 1; k <= traj.rounds(); ++k) {
    played += traj.losses[static_cast<std::size_t>(k - 1)];
    best += evaluate(seq.generate(k), xstar);
    out[static_cast<std::size_t>(k - 1)] = played - best;
  }
  return out;
}

/// Diagnostic variant: R(k) against the hindsight minimizer of the first k losses only.
inline std::vector<double> prefix_static_regret(const TrajectoryRecord& traj, const LossSequence& seq,
                                                const FeasibleSet& set) {
  const auto n = seq.dimension();
  SummedQuadratic q{Matrix::Zero(n, n), Vector::Zero(n)};
  std::vector<QuadraticLoss> seen;
  std::vector<double> out(static_cast<std::size_t>(traj.rounds()));
  double played = 0.0;
  for (int k = 1; k <= traj.rounds(); ++k) {
    seen.push_back(seq.generate(k));
    q.curvature += seen.back().curvature();
    q.linear += seen.back().curvature() * seen.back().center();
    played += traj.losses[static_cast<std::size_t>(k - 1)];
    const Vector xk = hindsight_minimizer(q, set);
    double best = 0.0;
    for (const auto& f : seen) best += evaluate(f, xk);
    out[static_cast<std::size_t>(k - 1)] = played - best;
  }
  return out;
}

/// sum_{j<=k} g(j)^T (x(j) - x*). Dominates static regret for convex losses.
inline std::vector<double> linearized_regret(const TrajectoryRecord& traj, const Vector& xstar) {
  std::vector<double> out(static_cast<std::size_t>(traj.rounds()));
  double acc = 0.0;
  for (int k = 1; k <= traj.rounds(); ++k) {
    acc += traj.g(k).dot(traj.x(k) - xstar);
    out[static_cast<std::size_t>(k - 1)] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bounds

/// D^2 / (2 alpha(K)) + (gmax^2 / 2) sum_k alpha(k).
inline double zinkevich_bound(double diameter, double gmax, std::span<const double> alphas) {
  if (alphas.empty()) throw std::invalid_argument("zinkevich_bound: empty step sequence");
  if (!(alphas.back() > 0.0)) throw std::invalid_argument("zinkevich_bound: final step must be positive");
  const double total = std::accumulate(alphas.begin(), alphas.end(), 0.0);
  return diameter * diameter / (2.0 * alphas.back()) + 0.5 * gmax * gmax * total;
}

enum class Condition { Holds, Fails, Indeterminate };

inline const char* to_string(Condition c) {
  switch (c) {
    case Condition::Holds: return "1";
    case Condition::Fails: return "0";
    case Condition::Indeterminate: return "NA";
  }
  return "NA";
}

/**
 * Quantities of the BB1 average-regret bound, built from the recorded
 * iterates x(1..K) and the secant pairs s_j = x(j+1) - x(j),
 * y_j = g(j+1) - g(j):
 *
 *   b = (|s_1| + |s_2|)^2          c = 2 (|s_1|^2 + |s_2|^2)
 *   d = sum_j s_j^T y_j            e = L sum_j |s_j|^2
 *   P = sum_k alpha(k)             Q = b / d
 *   Z = Psi = c / (L sum_j (|x(j+1)|^2 + |x(j)|^2))
 *
 * The bound's hypotheses are (e - d)/(c - b) <= d/b and P <= Z; both are
 * reported, not enforced.
 */
struct Bb1BoundDiagnostics {
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double e = 0.0;
  double P = 0.0;
  double Q = std::numeric_limits<double>::quiet_NaN();
  double Z = std::numeric_limits<double>::quiet_NaN();
  double psi = std::numeric_limits<double>::quiet_NaN();
  Condition condition = Condition::Indeterminate;
  bool flag_P = false;
};

inline Bb1BoundDiagnostics bb1_bound_diagnostics(const TrajectoryRecord& traj, double lipschitz) {
  if (traj.rounds() < 2) throw std::invalid_argument("bb1_bound_diagnostics: need at least two rounds");
  Bb1BoundDiagnostics t;
  const double s1 = (traj.x(2) - traj.x(1)).norm();
  const double s2 = traj.rounds() >= 3 ? (traj.x(3) - traj.x(2)).norm() : 0.0;
  t.b = (s1 + s2) * (s1 + s2);
  t.c = 2.0 * (s1 * s1 + s2 * s2);
  double norms = 0.0;
  for (int k = 2; k <= traj.rounds(); ++k) {
    const SecantPair p = traj.secant(k);
    t.d += p.s.dot(p.y);
    t.e += lipschitz * p.s.squaredNorm();
    norms += traj.x(k).squaredNorm() + traj.x(k - 1).squaredNorm();
  }
  t.P = std::accumulate(traj.alphas.begin(), traj.alphas.end(), 0.0);
  if (t.d != 0.0) t.Q = t.b / t.d;
  if (lipschitz * norms > 0.0) {
    t.Z = t.c / (lipschitz * norms);
    t.psi = t.Z;
  }
  const double gap = t.c - t.b;
  if (t.b > 0.0 && gap > 1e-12 * t.c) {
    t.condition = (t.e - t.d) / gap <= t.d / t.b ? Condition::Holds : Condition::Fails;
  }
  t.flag_P = std::isfinite(t.Z) && t.P <= t.Z;
  return t;
}

/**
 * BB2 bound ingredients: A(k) = s, B(k) = y, C(k) = |y|^{-2} over the secant
 * pairs of rounds k >= 2, and
 *
 *   zeta = (sum |A|^2)^{1/2} (sum |B|^2)^{1/2} (sum C^2)^{1/2}.
 *
 * Rounds with |y| < 1e-14 have no C(k); they are dropped from all three sums
 * and counted in `excluded_rounds`.
 */
struct Bb2BoundDiagnostics {
  double sum_a = 0.0;
  double sum_b = 0.0;
  double sum_c = 0.0;
  double zeta = 0.0;
  /// sum of recorded alpha(k) over the rounds entering zeta
  double step_sum = 0.0;
  /// sum of raw s^T y / y^T y over the same rounds
  double bb2_sum = 0.0;
  int excluded_rounds = 0;
  double bound = std::numeric_limits<double>::quiet_NaN();
};

inline Bb2BoundDiagnostics bb2_bound_diagnostics(const TrajectoryRecord& traj, double diameter, double gmax) {
  if (traj.rounds() < 2) throw std::invalid_argument("bb2_bound_diagnostics: need at least two rounds");
  Bb2BoundDiagnostics t;
  for (int k = 2; k <= traj.rounds(); ++k) {
    const SecantPair p = traj.secant(k);
    const double ynorm = p.y.norm();
    if (ynorm < kDegenerateSecantTol) {
      ++t.excluded_rounds;
      continue;
    }
    const double inv = 1.0 / (ynorm * ynorm);
    t.sum_a += p.s.squaredNorm();
    t.sum_b += ynorm * ynorm;
    t.sum_c += inv * inv;
    t.step_sum += traj.alpha(k);
    t.bb2_sum += p.s.dot(p.y) * inv;
  }
  t.zeta = std::sqrt(t.sum_a) * std::sqrt(t.sum_b) * std::sqrt(t.sum_c);
  if (traj.alphas.back() > 0.0) {
    t.bound = diameter * diameter / (2.0 * traj.alphas.back()) + 0.5 * gmax * gmax * t.zeta;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Sedrakyan (Engel form of Cauchy-Schwarz)

namespace detail {

inline void require_positive_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("sedrakyan: length mismatch");
  if (a.empty()) throw std::invalid_argument("sedrakyan: empty input");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0) || !(b[i] > 0.0)) throw std::invalid_argument("sedrakyan: entries must be positive");
  }
}

}  // namespace detail

/// sum a_i^2 / b_i - (sum a_i)^2 / sum b_i. Non-negative; zero iff a_i / b_i is constant.
inline double sedrakyan_gap(std::span<const double> a, std::span<const double> b) {
  detail::require_positive_pair(a, b);
  double lhs = 0.0, sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lhs += a[i] * a[i] / b[i];
    sa += a[i];
    sb += b[i];
  }
  return lhs - sa * sa / sb;
}

/// True when sum a_i^2 / b_i >= (sum a_i)^2 / sum b_i, up to 1e-12 relative to max(1, rhs).
inline bool sedrakyan_check(std::span<const double> a, std::span<const double> b) {
  detail::require_positive_pair(a, b);
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double rhs = sa * sa / sb;
  return sedrakyan_gap(a, b) >= -1e-12 * std::max(1.0, rhs);
}

// ---------------------------------------------------------------------------
// Sublinearity

struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  int used = 0;
  int excluded = 0;
};

/// Least-squares slope of log R(k) on log k for k in [k_lo, k_hi] (1-based). Rounds with R <= 0 are skipped.
inline SlopeFit sublinearity_slope(std::span<const double> regret, int k_lo, int k_hi) {
  if (k_lo < 1 || k_hi > static_cast<int>(regret.size()) || k_lo > k_hi) {
    throw std::invalid_argument("sublinearity_slope: window outside the regret curve");
  }
  SlopeFit fit;
  std::vector<double> lx, ly;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double r = regret[static_cast<std::size_t>(k - 1)];
    if (!(r > 0.0) || !std::isfinite(r)) {
      ++fit.excluded;
      continue;
    }
    lx.push_back(std::log(static_cast<double>(k)));
    ly.push_back(std::log(r));
  }
  fit.used = static_cast<int>(lx.size());
  if (fit.used < 10) {
    throw InsufficientData("sublinearity_slope: " + std::to_string(fit.used) + " usable points, need 10");
  }
  // Offsets from the first point keep a constant curve at an exact zero slope.
  const double n = fit.used;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] - lx[0];
    my += ly[i] - ly[0];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double dx = (lx[i] - lx[0]) - mx;
    sxx += dx * dx;
    sxy += dx * ((ly[i] - ly[0]) - my);
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = (ly[0] + my) - fit.slope * (lx[0] + mx);
  return fit;
}

// ---------------------------------------------------------------------------
// Report

struct ReportOptions {
  /// Lower edge of the slope window; clipped to K.
  int slope_from = 100;
  /// Also compute the per-prefix comparator curve (expensive; diagnostics only).
  bool prefix_regret = false;
};

struct RegretReport {
  std::string policy;
  Vector xstar;
  std::vector<double> regret;
  std::vector<double> average;
  std::vector<double> linearized;
  std::vector<double> prefix_regret;
  double diameter = 0.0;
  double gmax = 0.0;
  double lipschitz = 0.0;
  double zinkevich = std::numeric_limits<double>::quiet_NaN();
  /// D^2 / (2 alpha(K)) + (gmax^2 / 2) Psi
  double bb1_bound = std::numeric_limits<double>::quiet_NaN();
  Bb1BoundDiagnostics bb1;
  Bb2BoundDiagnostics bb2;
  SlopeFit slope;

  int rounds() const { return static_cast<int>(regret.size()); }
  double final_regret() const { return regret.back(); }
  double final_average() const { return average.back(); }
};

inline RegretReport make_report(const TrajectoryRecord& traj, const LossSequence& seq, const FeasibleSet& set,
                                ReportOptions opts = {}) {
  if (traj.rounds() < 1) throw std::invalid_argument("make_report: empty trajectory");
  RegretReport r;
  r.policy = traj.meta.policy;
  const int horizon = traj.rounds();
  r.xstar = hindsight_minimizer(seq, set, horizon);
  r.regret = static_regret(traj, seq, r.xstar);
  r.average.resize(r.regret.size());
  for (std::size_t i = 0; i < r.regret.size(); ++i) r.average[i] = r.regret[i] / static_cast<double>(i + 1);
  r.linearized = linearized_regret(traj, r.xstar);
  if (opts.prefix_regret) r.prefix_regret = prefix_static_regret(traj, seq, set);

  r.diameter = diameter(set);
  double gmax = 0.0, lip = 0.0;
  for (int k = 1; k <= horizon; ++k) {
    const QuadraticLoss f = seq.generate(k);
    gmax = std::max(gmax, max_gradient_norm(f, set));
    lip = std::max(lip, lipschitz_constant(f));
  }
  r.gmax = gmax;
  r.lipschitz = lip;
  if (traj.alphas.back() > 0.0) r.zinkevich = zinkevich_bound(r.diameter, r.gmax, traj.alphas);

  if (horizon >= 2) {
    r.bb1 = bb1_bound_diagnostics(traj, r.lipschitz);
    r.bb2 = bb2_bound_diagnostics(traj, r.diameter, r.gmax);
    r.bb1_bound = r.diameter * r.diameter / (2.0 * traj.alphas.back()) + 0.5 * r.gmax * r.gmax * r.bb1.psi;
  }
  try {
    r.slope = sublinearity_slope(r.regret, std::min(opts.slope_from, horizon), horizon);
  } catch (const InsufficientData&) {
    r.slope = SlopeFit{};
  }
  return r;
}

/// `k,regret,avg_regret,lin_regret` followed by a blank line and the one-row summary block.
inline std::string regret_csv(const RegretReport& r) {
  std::string out = "k,regret,avg_regret,lin_regret\n";
  for (int k = 1; k <= r.rounds(); ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    out += std::to_string(k) + "," + csv::num(r.regret[i]) + "," + csv::num(r.average[i]) + "," + csv::num(r.linearized[i]) + "\n";
  }
  out += "\nR_K,avg_R_K,zinkevich_bound,psi,zeta,cond_t1,flag_P,slope\n";
  out += csv::num(r.final_regret()) + "," + csv::num(r.final_average()) + "," + csv::num(r.zinkevich) + "," +
         csv::num(r.bb1.psi) + "," + csv::num(r.bb2.zeta) + "," + to_string(r.bb1.condition) + "," + csv::flag(r.bb1.flag_P) +
         "," + csv::num(r.slope.slope) + "\n";
  return out;
}

}  // namespace obb
