#pragma once

#include "madiff/latent.hpp"
#include "madiff/prompt.hpp"

namespace madiff {

// Noise prediction seam between the diffusion walkers and whatever model
// backs them (analytic mixture, trained net, test stubs). `step` is an
// effective schedule step; `cond` is the prompt embedding or nullptr for
// unconditioned prediction. Implementations must be pure functions of their
// arguments and construction-time state.
class NoisePredictor {
  public:
    virtual ~NoisePredictor() = default;
    virtual LatentImage predict(const LatentImage& x_t, int step,
                                const PromptEmbedding* cond) const = 0;
};

} // namespace madiff
