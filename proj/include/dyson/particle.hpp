#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dyson/kernel.hpp"
#include "dyson/measure.hpp"
#include "dyson/rng.hpp"

namespace dyson {

// Euler-Maruyama simulation of the interacting system
//
//   d lambda_i = [ (1/N) sum_{j != i} f(lambda_i, lambda_j) / (lambda_i - lambda_j)
//                  + b(lambda_i) ] dt
//                + sigma(lambda_i) sqrt(2 f(lambda_i, lambda_i) / N) dB_i.
//
// The diffusion coefficient sqrt(2 c(x)/N) with c(x) = f(x, x) reproduces
// the classical cases: f = 1 gives sqrt(2/N) (Dyson), f = (2/eta) x gives
// 2 sqrt(x / (eta N)) (Wishart).  Noise is counter-based: each attempted
// substep consumes one counter value, so rejected attempts are redrawn
// independently and runs are reproducible for a fixed seed regardless of
// how many halvings occur.

struct TrajectoryFrame {
  double t = 0.0;
  std::vector<double> positions;
  bool has_spike = false;
  double spike = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectoryFrame> frames;
};

struct StepStats {
  std::uint64_t attempts = 0;
  std::uint64_t halvings = 0;
  std::uint64_t reflections = 0;
  std::uint64_t floor_hits = 0;
};

struct SdeConfig {
  std::uint64_t seed = 1;
  InteractionKernel kernel = kernels::dyson();
  std::function<double(double)> sigma;  // noise multiplier; empty means 1
  bool reflect_at_zero = false;         // half-line systems (Wishart)
  double gap_floor_rel = 1e-12;         // min gap relative to ensemble width
  int max_halvings = 20;
  bool with_spike = false;              // deterministic outlier tracer
  double spike0 = 0.0;
};

inline double empirical_variance(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

class ParticleSim {
 public:
  SdeConfig cfg;
  ParticleEnsemble state;
  double time = 0.0;
  double spike = 0.0;
  StepStats stats;

  ParticleSim(SdeConfig c, ParticleEnsemble init)
      : cfg(std::move(c)), state(std::move(init)), spike(cfg.with_spike ? cfg.spike0 : 0.0) {
    if (state.positions.empty()) throw std::invalid_argument("ParticleSim: empty ensemble");
    if (cfg.reflect_at_zero) {
      for (double v : state.positions) {
        if (v < 0.0) throw std::invalid_argument("ParticleSim: reflected system needs x >= 0");
      }
    }
  }

  // Pairwise drift plus external drift, one distance evaluation per pair.
  std::vector<double> drift(const std::vector<double>& x, double t) const {
    return pair_field(x, t, 0.0);
  }

  // Pairwise field with the interaction mollified below the one-step
  // relative noise displacement. A raw Euler step kicks a nearly collided
  // pair by dt / (N gap), a heavy-tailed quantity whose rare blowups
  // inflate the ensemble spread; gaps below the per-step noise scale are
  // noise-dominated and carry no resolvable drift, so the 1/gap factor is
  // rounded off there. The scale vanishes with dt, keeping the scheme
  // consistent. dt_scale = 0 gives the exact field.
  std::vector<double> pair_field(const std::vector<double>& x, double t,
                                 double dt_scale) const {
    const size_t n = x.size();
    std::vector<double> d(n, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> ns2;
    if (dt_scale > 0.0) {
      ns2.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const double s = noise_scale(x[i]);
        ns2[i] = s * s;
      }
    }
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        const double dx = x[i] - x[j];
        const double d2 = (dt_scale > 0.0) ? dt_scale * (ns2[i] + ns2[j]) : 0.0;
        const double w = dx / (dx * dx + d2);
        d[i] += cfg.kernel.f(x[i], x[j]) * w * inv_n;
        d[j] -= cfg.kernel.f(x[j], x[i]) * w * inv_n;
      }
    }
    if (cfg.kernel.drift.kind != DriftKind::None) {
      for (size_t i = 0; i < n; ++i) d[i] += cfg.kernel.drift.eval(t, x[i]);
    }
    return d;
  }

  double noise_scale(double x) const {
    const double c = std::max(0.0, cfg.kernel.c(x));
    const double base = std::sqrt(2.0 * c / static_cast<double>(state.positions.size()));
    return cfg.sigma ? cfg.sigma(x) * base : base;
  }

  // Velocity of the deterministic outlier driven by the empirical measure.
  double spike_velocity(double s, const std::vector<double>& x, double t) const {
    double v = 0.0;
    const double inv_n = 1.0 / static_cast<double>(x.size());
    for (double xj : x) v += cfg.kernel.f(s, xj) / (s - xj) * inv_n;
    if (cfg.kernel.drift.kind != DriftKind::None) v += cfg.kernel.drift.eval(t, s);
    return v;
  }

  // One macro step of size dt; substeps halve recursively when a move
  // would cross particles or collapse a gap below the floor.
  void step(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("ParticleSim::step: dt > 0");
    step_impl(dt, 0);
  }

  void simulate(double t_end, double dt, int record_every = 1,
                TrajectoryRecord* rec = nullptr) {
    if (rec != nullptr && rec->frames.empty()) record(rec);
    int k = 0;
    while (time < t_end - 1e-15) {
      step(std::min(dt, t_end - time));
      ++k;
      if (rec != nullptr && (k % record_every == 0 || time >= t_end - 1e-15)) record(rec);
    }
  }

 private:
  void record(TrajectoryRecord* rec) const {
    TrajectoryFrame f;
    f.t = time;
    f.positions = state.positions;
    f.has_spike = cfg.with_spike;
    f.spike = spike;
    rec->frames.push_back(f);
  }

  // The system is exchangeable, so a proposed move that crosses particles
  // is accepted as a relabeling: the candidate is sorted in place and the
  // empirical measure carries on. Only genuine pathologies reject a
  // substep: non-finite values, a single-particle jump beyond a quarter of
  // the ensemble scale (stiff drift from a near-collision), or a post-sort
  // gap below the floor.
  bool admissible(std::vector<double>& cand, double floor, double cap) const {
    for (size_t i = 0; i < cand.size(); ++i) {
      if (!std::isfinite(cand[i])) return false;
      if (std::abs(cand[i] - state.positions[i]) > cap) return false;
    }
    std::sort(cand.begin(), cand.end());
    for (size_t i = 1; i < cand.size(); ++i) {
      if (cand[i] - cand[i - 1] < floor) return false;
    }
    return true;
  }

  std::vector<double> attempt(double dt) {
    const std::uint64_t a = attempt_counter_++;
    ++stats.attempts;
    const std::vector<double> d = pair_field(state.positions, time, dt);
    const double sdt = std::sqrt(dt);
    std::vector<double> cand(state.positions.size());
    for (size_t i = 0; i < cand.size(); ++i) {
      const double xi = state.positions[i];
      cand[i] = xi + dt * d[i] +
                sdt * noise_scale(xi) * normal(cfg.seed, a, static_cast<std::uint64_t>(i));
      if (cfg.reflect_at_zero && cand[i] < 0.0) {
        cand[i] = -cand[i];
        ++stats.reflections;
      }
    }
    return cand;
  }

  void step_impl(double dt, int depth) {
    std::vector<double> cand = attempt(dt);
    const double width = state.positions.back() - state.positions.front();
    const double floor = cfg.gap_floor_rel * std::max(1.0, width);
    const double cap = 0.25 * std::max(1.0, width);
    if (!admissible(cand, floor, cap)) {
      if (depth < cfg.max_halvings) {
        ++stats.halvings;
        step_impl(0.5 * dt, depth + 1);
        step_impl(0.5 * dt, depth + 1);
        return;
      }
      // Depth exhausted: repair the candidate explicitly and continue.
      for (size_t i = 0; i < cand.size(); ++i) {
        if (!std::isfinite(cand[i])) cand[i] = state.positions[i];
      }
      std::sort(cand.begin(), cand.end());
      for (size_t i = 1; i < cand.size(); ++i) {
        if (cand[i] - cand[i - 1] < floor) cand[i] = cand[i - 1] + floor;
      }
      ++stats.floor_hits;
    }
    if (cfg.with_spike) spike += dt * spike_velocity(spike, state.positions, time);
    state.positions = std::move(cand);
    time += dt;
  }

  std::uint64_t attempt_counter_ = 0;
};

}  // namespace dyson
