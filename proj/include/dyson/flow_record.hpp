#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dyson/grid.hpp"

namespace dyson {

// Time series of grid snapshots plus the health counters every solver
// maintains: step sizes taken, magnitude of monotonicity clamps (CDF
// scheme) or negativity clips (density scheme), and the largest slope seen
// (the Lipschitz datum the perturbation envelopes are built from).

struct FlowFrame {
  double t = 0.0;
  std::vector<double> values;
};

struct FlowRecord {
  Grid grid;
  std::string kind;  // "cdf" or "density"
  std::vector<FlowFrame> frames;

  std::uint64_t steps = 0;
  double final_time = 0.0;
  double min_dt = std::numeric_limits<double>::infinity();
  double max_dt = 0.0;

  std::uint64_t clamp_events = 0;  // monotonicity/range clamps on a CDF
  double clamp_max = 0.0;          // largest single clamp magnitude
  std::uint64_t clip_events = 0;   // negativity clips on a density
  double clip_mass_max = 0.0;      // largest mass removed by one clip sweep
  double max_abs_slope = 0.0;      // sup over steps of max_i |du/dx|

  void note_dt(double dt) {
    ++steps;
    if (dt < min_dt) min_dt = dt;
    if (dt > max_dt) max_dt = dt;
  }

  void note_clamp(double magnitude) {
    if (magnitude > 0.0) {
      ++clamp_events;
      if (magnitude > clamp_max) clamp_max = magnitude;
    }
  }

  void note_clip(double mass) {
    if (mass > 0.0) {
      ++clip_events;
      if (mass > clip_mass_max) clip_mass_max = mass;
    }
  }
};

}  // namespace dyson
