#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "obb/csv.hpp"
#include "obb/errors.hpp"
#include "obb/geometry.hpp"
#include "obb/losses.hpp"
#include "obb/steppers.hpp"

namespace obb {

struct RunMetadata {
  std::uint64_t seed = 0;
  std::string policy;
  std::string set;
  std::string scenario;
  int horizon = 0;
  Eigen::Index dimension = 0;
};

/**
 * Everything one online run produced, stored column-wise and indexed by
 * round k = 1..K (entry k-1 in each vector).
 *
 * projected[k-1] is set when x(k) was moved by the projection by more than
 * 1e-12; degenerate[k-1] when the BB safeguard replaced the round's step.
 */
struct TrajectoryRecord {
  RunMetadata meta;
  std::vector<Vector> iterates;
  std::vector<double> losses;
  std::vector<Vector> gradients;
  std::vector<double> alphas;
  std::vector<bool> degenerate;
  std::vector<bool> projected;

  int rounds() const { return static_cast<int>(iterates.size()); }
  const Vector& x(int k) const { return iterates.at(static_cast<std::size_t>(k - 1)); }
  const Vector& g(int k) const { return gradients.at(static_cast<std::size_t>(k - 1)); }
  double alpha(int k) const { return alphas.at(static_cast<std::size_t>(k - 1)); }

  /// Pair formed at round k >= 2 from the played points and their revealed gradients.
  SecantPair secant(int k) const { return {x(k) - x(k - 1), g(k) - g(k - 1)}; }

  int degenerate_rounds() const { return static_cast<int>(std::count(degenerate.begin(), degenerate.end(), true)); }

  friend bool operator==(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    return a.meta.seed == b.meta.seed && a.meta.policy == b.meta.policy && a.meta.set == b.meta.set &&
           a.meta.scenario == b.meta.scenario && a.meta.horizon == b.meta.horizon &&
           a.meta.dimension == b.meta.dimension && a.iterates == b.iterates && a.losses == b.losses &&
           a.gradients == b.gradients && a.alphas == b.alphas && a.degenerate == b.degenerate &&
           a.projected == b.projected;
  }
};

struct LearnerOptions {
  /// Disable only to compare against the raw unconstrained recursion.
  bool project = true;
};

inline constexpr double kProjectionActiveTol = 1e-12;

/**
 * Online BB loop. For k = 1..K: play x(k), observe f_k, record f_k(x(k)) and
 * g(k) = grad f_k(x(k)), pick alpha(k) from the policy (with the secant pair of
 * played points when k >= 2), then x(k+1) = project(x(k) - alpha(k) g(k)).
 *
 * x(0) = x(1) = project(x0). The policy is reset first and never sees K.
 */
inline TrajectoryRecord run(const LossSequence& seq, StepPolicy& policy, const FeasibleSet& set, const Vector& x0,
                            int horizon, LearnerOptions options = {}) {
  if (horizon < 1) throw std::invalid_argument("run: horizon must be positive");
  if (horizon > seq.horizon()) throw std::invalid_argument("run: horizon exceeds the loss sequence");
  if (seq.dimension() != set.dimension()) throw std::invalid_argument("run: sequence and set dimensions differ");
  if (x0.size() != set.dimension()) throw std::invalid_argument("run: x0 dimension mismatch");
  if (!x0.allFinite()) throw std::invalid_argument("run: x0 must be finite");

  policy.reset();
  TrajectoryRecord traj;
  traj.meta = {seq.seed(), policy.describe(), set.describe(), seq.describe(), horizon, set.dimension()};
  const auto n = static_cast<std::size_t>(horizon);
  traj.iterates.reserve(n);
  traj.losses.reserve(n);
  traj.gradients.reserve(n);
  traj.alphas.reserve(n);
  traj.degenerate.reserve(n);
  traj.projected.reserve(n);

  Vector x = options.project ? project(set, x0) : x0;
  bool moved = options.project && (x - x0).norm() > kProjectionActiveTol;

  for (int k = 1; k <= horizon; ++k) {
    const QuadraticLoss f = seq.generate(k);
    const double loss = evaluate(f, x);
    Vector g = gradient(f, x);
    if (!std::isfinite(loss) || !g.allFinite()) {
      throw NumericalFailure("round " + std::to_string(k) + ": non-finite loss or gradient");
    }

    std::optional<SecantPair> pair;
    if (k >= 2) pair = SecantPair{x - traj.iterates.back(), g - traj.gradients.back()};
    const StepDecision step = policy.next_step(pair, k);

    traj.iterates.push_back(x);
    traj.losses.push_back(loss);
    traj.gradients.push_back(g);
    traj.alphas.push_back(step.alpha);
    traj.degenerate.push_back(step.degenerate);
    traj.projected.push_back(moved);

    if (k == horizon) break;
    const Vector raw = x - step.alpha * g;
    if (!raw.allFinite()) throw NumericalFailure("round " + std::to_string(k) + ": non-finite iterate");
    if (options.project) {
      x = project(set, raw);
      moved = (x - raw).norm() > kProjectionActiveTol;
    } else {
      x = raw;
      moved = false;
    }
  }
  return traj;
}

/// f(K) = sum_k f_k(x(k)).
inline double aggregate_loss(const TrajectoryRecord& traj) {
  return std::accumulate(traj.losses.begin(), traj.losses.end(), 0.0);
}

/// `k,x_1..x_n,loss,grad_norm,alpha,degenerate,projected`, one row per round.
inline std::string trajectory_csv(const TrajectoryRecord& traj) {
  std::string out = "k";
  for (Eigen::Index i = 1; i <= traj.meta.dimension; ++i) out += ",x_" + std::to_string(i);
  out += ",loss,grad_norm,alpha,degenerate,projected\n";
  for (int k = 1; k <= traj.rounds(); ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    out += std::to_string(k);
    for (Eigen::Index j = 0; j < traj.iterates[i].size(); ++j) out += "," + csv::num(traj.iterates[i][j]);
    out += "," + csv::num(traj.losses[i]) + "," + csv::num(traj.gradients[i].norm()) + "," + csv::num(traj.alphas[i]) + "," +
           csv::flag(traj.degenerate[i]) + "," + csv::flag(traj.projected[i]) + "\n";
  }
  return out;
}

}  // namespace obb
