#pragma once

#include <vector>

namespace madiff {

// Linear-beta noise schedule. alpha_bar[t] is the cumulative product of
// (1 - beta_i) over raw timesteps i <= t, with alpha_bar[0] == 1.
//
// Walking every raw timestep is wasteful, so the schedule also carries a
// stride: "effective" step k lives at raw timestep k*stride, and all loop
// counts elsewhere (inversion depth S, sampling ranges) are in effective
// steps. stride == 1 means every raw timestep is visited.
struct NoiseSchedule {
    std::vector<double> alpha_bar; // indexed by raw timestep, size raw_steps()+1
    int stride = 1;
    int inversion_depth = 0; // S, in effective steps

    int raw_steps() const { return int(alpha_bar.size()) - 1; }
    int total_steps() const { return raw_steps() / stride; } // effective T
    double alpha_at(int step) const;                         // alpha_bar at effective step
};

// Builds the raw schedule: beta ramps linearly from beta_min (t=1) to
// beta_max (t=steps). Requires 0 < beta_min <= beta_max < 1.
NoiseSchedule build_schedule(int steps, double beta_min, double beta_max);

// Returns a copy with the given stride; stride must divide raw_steps().
NoiseSchedule with_stride(const NoiseSchedule& s, int stride);

// Returns a copy with inversion depth set; requires 0 <= depth <= total_steps().
NoiseSchedule with_inversion_depth(const NoiseSchedule& s, int depth);

} // namespace madiff
