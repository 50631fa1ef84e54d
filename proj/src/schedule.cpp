#include "madiff/schedule.hpp"

#include "madiff/errors.hpp"

#include <string>

namespace madiff {

double NoiseSchedule::alpha_at(int step) const {
    if (step < 0 || step > total_steps())
        throw ParameterError("NoiseSchedule::alpha_at: step " + std::to_string(step) +
                             " outside [0, " + std::to_string(total_steps()) + "]");
    return alpha_bar[size_t(step) * size_t(stride)];
}

NoiseSchedule build_schedule(int steps, double beta_min, double beta_max) {
    if (steps < 1) throw ParameterError("build_schedule: steps must be >= 1");
    if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
        throw ParameterError("build_schedule: need 0 < beta_min <= beta_max < 1");

    NoiseSchedule s;
    s.alpha_bar.resize(size_t(steps) + 1);
    s.alpha_bar[0] = 1.0;
    double acc = 1.0;
    for (int t = 1; t <= steps; ++t) {
        double beta = (steps == 1)
                          ? beta_min
                          : beta_min + (beta_max - beta_min) * double(t - 1) / double(steps - 1);
        acc *= (1.0 - beta);
        s.alpha_bar[size_t(t)] = acc;
    }
    s.stride = 1;
    s.inversion_depth = steps;
    return s;
}

NoiseSchedule with_stride(const NoiseSchedule& s, int stride) {
    if (stride < 1) throw ParameterError("with_stride: stride must be >= 1");
    if (s.raw_steps() % stride != 0)
        throw ParameterError("with_stride: stride " + std::to_string(stride) +
                             " does not divide raw step count " + std::to_string(s.raw_steps()));
    NoiseSchedule out = s;
    out.stride = stride;
    if (out.inversion_depth > out.total_steps()) out.inversion_depth = out.total_steps();
    return out;
}

NoiseSchedule with_inversion_depth(const NoiseSchedule& s, int depth) {
    if (depth < 0 || depth > s.total_steps())
        throw ParameterError("with_inversion_depth: depth " + std::to_string(depth) +
                             " outside [0, " + std::to_string(s.total_steps()) + "]");
    NoiseSchedule out = s;
    out.inversion_depth = depth;
    return out;
}

} // namespace madiff
