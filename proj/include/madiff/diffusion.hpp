#pragma once

#include "madiff/attention.hpp"
#include "madiff/latent.hpp"
#include "madiff/predictor.hpp"
#include "madiff/schedule.hpp"

#include <utility>
#include <vector>

namespace madiff {

// States collected while inverting: states[k] is x at effective step k for
// k in [0, S), and final_noise is x at step S. states[0] is the input image
// itself, so a blend that masks everything out reproduces it bit for bit.
struct Trajectory {
    std::vector<LatentImage> states;
    LatentImage final_noise;

    int steps() const { return int(states.size()); }
};

// x0 estimate from a state and its predicted noise:
//   f = (x_t - sqrt(1 - alpha_bar) * eps) / sqrt(alpha_bar)
// Throws SingularityError when alpha_bar is too close to zero to divide by.
LatentImage predict_x0(const LatentImage& x_t, const LatentImage& eps, double alpha_bar_t);

// One deterministic inversion step (effective step -> step+1):
//   x_{t+1} = sqrt(1 - abar_{t+1}) * eps(x_t, t) + sqrt(abar_{t+1}) * f(x_t, t)
// Inversion is unconditioned.
LatentImage invert_step(const LatentImage& x_t, int step, const NoisePredictor& pred,
                        const NoiseSchedule& sched);

// Runs inversion_depth steps from a clean image, collecting the trajectory.
// Depth 0 is allowed and yields an empty state list with final_noise == x0.
Trajectory invert(const LatentImage& x0, const NoisePredictor& pred, const NoiseSchedule& sched);

// One deterministic denoising step (effective step -> step-1):
//   x_{t-1} = sqrt(abar_{t-1}) * f(x_t, t) + sqrt(1 - abar_{t-1}) * eps(x_t, t)
// This is the exact time-reversal of invert_step for a frozen predictor.
LatentImage sample_step(const LatentImage& x_t, int step, const PromptEmbedding* cond,
                        const NoisePredictor& pred, const NoiseSchedule& sched);

// Walks from effective step `from` down to `to` (from > to >= 0), asking the
// provider for one attention map per step when one is given. Returns the
// final state and the collected maps.
std::pair<LatentImage, std::vector<AttentionMap>>
sample(const LatentImage& x_start, int from, int to, const PromptEmbedding* cond,
       const NoisePredictor& pred, AttentionProvider* provider, const NoiseSchedule& sched);

} // namespace madiff
