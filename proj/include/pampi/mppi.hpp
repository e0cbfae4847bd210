#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pampi/costs.hpp"
#include "pampi/reference.hpp"

namespace pampi {

struct MppiConfig {
  int n_samples{10000};
  int horizon{15};
  double lambda{0.05};
  double dt_pred{0.1};
  double dt_ctrl{0.02};
  // (thrust [N], rates [rad/s]); sized for the 0.21 kg platform: thrust
  // noise a quarter of hover, rate noise that keeps 1.5 s rollouts from
  // tumbling. Validated closed loop on the empty arena.
  Vec4 sigma{0.5, 0.45, 0.45, 0.6};
  uint64_t rng_seed{0};
  int jobs{1};
  double sentinel_cost{1e9};

  void validate() const {
    if (n_samples < 1 || horizon < 1 || !(lambda > 0.0) ||
        !(dt_ctrl > 0.0) || dt_pred < dt_ctrl || sigma.minCoeff() < 0.0) {
      throw std::invalid_argument("MppiConfig: invalid parameters");
    }
  }
};

using ControlSequence = std::vector<ControlCommand>;

inline ControlSequence hover_sequence(const QuadParams& qp, int horizon) {
  return ControlSequence(horizon, hover_command(qp));
}

/// Cost stack shared by both controllers. PA mode uses the goal +
/// perception stage cost; tracking mode swaps the goal term for reference
/// tracking and drops the perception term.
struct RolloutCostModel {
  const OccupancyGrid* grid{nullptr};
  GoalPose goal;
  CostParams prm;
  const ReferenceTrajectory* reference{nullptr};  // non-null => tracking mode
  TrackingParams tracking;
  double rollout_start_time{0.0};
  double dt_pred{0.1};

  double stage(const QuadState& s, const ControlCommand& u,
               const ControlCommand& u_prev, int i) const {
    if (reference) {
      return tracking_stage_cost(s, rollout_start_time + i * dt_pred,
                                 *reference, tracking) +
             action_cost(u, u_prev, prm) + collision_cost(s.p, *grid, prm);
    }
    return stage_cost(s, u, u_prev, *grid, goal, prm, i);
  }

  double terminal(const QuadState& s) const { return terminal_cost(s, prm); }
};

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d649bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Nominal sequence plus elementwise Gaussian noise. Each sample has its
/// own seeded generator so the batch is reproducible independent of
/// evaluation order or worker count.
inline std::vector<ControlSequence> sample_controls(
    const ControlSequence& nominal, const MppiConfig& cfg, uint64_t seed) {
  std::vector<ControlSequence> out(cfg.n_samples);
  for (int j = 0; j < cfg.n_samples; ++j) {
    // hash the batch seed before offsetting by the sample index so that
    // nearby seeds do not share per-sample streams
    std::mt19937_64 rng(detail::splitmix64(detail::splitmix64(seed) + j));
    std::normal_distribution<double> gauss(0.0, 1.0);
    ControlSequence& seq = out[j];
    seq = nominal;
    for (auto& u : seq) {
      u.thrust += cfg.sigma(0) * gauss(rng);
      u.rates.x() += cfg.sigma(1) * gauss(rng);
      u.rates.y() += cfg.sigma(2) * gauss(rng);
      u.rates.z() += cfg.sigma(3) * gauss(rng);
    }
  }
  return out;
}

/// Forward-simulates one sampled sequence and sums stage costs plus the
/// terminal value. Divergent rollouts get the sentinel cost.
inline double rollout(const QuadState& x0, const ControlSequence& seq,
                      const RolloutCostModel& cm, const QuadParams& qp,
                      const MppiConfig& cfg, const ControlCommand& u_last) {
  QuadState x = x0;
  ControlCommand u_prev = u_last;
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(seq.size()); ++i) {
    const ControlCommand& u = seq[i];
    if (!x.finite() || !u.finite()) return cfg.sentinel_cost;
    total += cm.stage(x, u, u_prev, i);
    x = step(x, u, cfg.dt_pred, qp);
    u_prev = u;
  }
  if (!x.finite() || !std::isfinite(total)) return cfg.sentinel_cost;
  return total + cm.terminal(x);
}

namespace detail {
/// Shared by the serial and threaded evaluation paths. Kept out of line so
/// both compile to the same floating-point code and results are bitwise
/// identical for any worker count.
[[gnu::noinline]] inline void eval_rollout_range(
    std::vector<double>& costs, const std::vector<ControlSequence>& samples,
    size_t lo, size_t hi, const QuadState& x, const RolloutCostModel& cm,
    const QuadParams& qp, const MppiConfig& cfg, const ControlCommand& u_last) {
  for (size_t j = lo; j < hi; ++j) {
    costs[j] = rollout(x, samples[j], cm, qp, cfg, u_last);
  }
}
}  // namespace detail

struct OptimizerStarvation : std::runtime_error {
  OptimizerStarvation() : std::runtime_error("all rollouts at sentinel cost") {}
};

/// Softmax weights over rollout costs, stabilized by the min shift.
inline std::vector<double> weights(const std::vector<double>& costs,
                                   double lambda, double sentinel = 1e9) {
  double lmin = std::numeric_limits<double>::infinity();
  for (double c : costs) lmin = std::min(lmin, c);
  if (!(lmin < sentinel)) throw OptimizerStarvation();
  std::vector<double> w(costs.size());
  double sum = 0.0;
  for (size_t j = 0; j < costs.size(); ++j) {
    w[j] = std::exp(-(costs[j] - lmin) / lambda);
    sum += w[j];
  }
  for (double& x : w) x /= sum;
  return w;
}

inline ControlSequence update(const std::vector<ControlSequence>& samples,
                              const std::vector<double>& w) {
  // accumulate relative to the first sample; a degenerate batch (all
  // samples equal) then averages to that sample exactly
  ControlSequence avg = samples[0];
  for (size_t i = 0; i < avg.size(); ++i) {
    double dthrust = 0.0;
    Vec3 drates = Vec3::Zero();
    for (size_t j = 1; j < samples.size(); ++j) {
      dthrust += w[j] * (samples[j][i].thrust - avg[i].thrust);
      drates += w[j] * (samples[j][i].rates - avg[i].rates);
    }
    avg[i].thrust += dthrust;
    avg[i].rates += drates;
  }
  return avg;
}

/// Warm start for the next control tick: the sequence, viewed as a
/// piecewise-linear function on knots spaced dt_pred, shifted by dt_ctrl
/// and re-sampled at dt_pred. Beyond the last knot the final command is
/// held.
inline ControlSequence shift_warmstart(const ControlSequence& seq,
                                       const MppiConfig& cfg) {
  const int H = static_cast<int>(seq.size());
  ControlSequence out(H);
  for (int i = 0; i < H; ++i) {
    const double t = cfg.dt_ctrl + i * cfg.dt_pred;
    const double k = t / cfg.dt_pred;
    const int k0 = static_cast<int>(std::floor(k));
    if (k0 >= H - 1) {
      out[i] = seq[H - 1];
      continue;
    }
    const double a = k - k0;
    out[i].thrust = (1.0 - a) * seq[k0].thrust + a * seq[k0 + 1].thrust;
    out[i].rates = (1.0 - a) * seq[k0].rates + a * seq[k0 + 1].rates;
  }
  return out;
}

struct MppiDiagnostics {
  double l_min{0.0};
  double effective_samples{0.0};
  StageCostBreakdown executed_terms;
};

/// One full MPPI iteration: sample, roll out, weight, average. Returns the
/// command to execute now and the shifted nominal for the next tick.
struct ControlStepResult {
  ControlCommand command;
  ControlSequence next_nominal;
  MppiDiagnostics diag;
};

inline ControlStepResult control_step(const QuadState& x,
                                      const ControlSequence& nominal,
                                      const ControlCommand& u_last,
                                      const RolloutCostModel& cm,
                                      const QuadParams& qp,
                                      const MppiConfig& cfg,
                                      uint64_t tick_seed) {
  const auto samples = sample_controls(nominal, cfg, tick_seed);
  std::vector<double> costs(samples.size());

  auto eval_range = [&](size_t lo, size_t hi) {
    detail::eval_rollout_range(costs, samples, lo, hi, x, cm, qp, cfg, u_last);
  };
  if (cfg.jobs <= 1) {
    eval_range(0, samples.size());
  } else {
    // samples write disjoint slots; the reduction below is serial, so the
    // result does not depend on the worker count
    std::vector<std::thread> pool;
    const size_t chunk = (samples.size() + cfg.jobs - 1) / cfg.jobs;
    for (int t = 0; t < cfg.jobs; ++t) {
      const size_t lo = t * chunk;
      const size_t hi = std::min(samples.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(eval_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  const auto w = weights(costs, cfg.lambda, cfg.sentinel_cost);
  ControlSequence updated = update(samples, w);

  ControlStepResult res;
  res.command = updated[0];
  res.next_nominal = shift_warmstart(updated, cfg);
  res.diag.l_min = *std::min_element(costs.begin(), costs.end());
  double w2 = 0.0;
  for (double wj : w) w2 += wj * wj;
  res.diag.effective_samples = 1.0 / w2;
  if (cm.reference) {
    res.diag.executed_terms.goal =
        tracking_stage_cost(x, cm.rollout_start_time, *cm.reference, cm.tracking);
    res.diag.executed_terms.action = action_cost(res.command, u_last, cm.prm);
    res.diag.executed_terms.collision = collision_cost(x.p, *cm.grid, cm.prm);
  } else {
    res.diag.executed_terms = stage_cost_terms(x, res.command, u_last, *cm.grid,
                                               cm.goal, cm.prm, 0);
  }
  return res;
}

}  // namespace pampi
