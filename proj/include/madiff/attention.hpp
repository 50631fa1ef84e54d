#pragma once

#include "madiff/latent.hpp"
#include "madiff/mask.hpp"
#include "madiff/prompt.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace madiff {

// Non-negative H x W attention weights.
struct AttentionMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    AttentionMap() = default;
    AttentionMap(int h, int w, double fill = 0.0)
        : height(h), width(w), data(size_t(h) * size_t(w), fill) {}

    double& at(int y, int x) { return data[size_t(y) * width + x]; }
    double at(int y, int x) const { return data[size_t(y) * width + x]; }
};

// Flat pixel index in row-major order (y * width + x).
using PixelIndex = int;

// The two pixel groups the substitution step works with:
//  edited    - pixels inside the edit mask, in row-major order
//  preferred - the top ceil(|edited| / 2) attention pixels over the whole
//              map, sorted by descending weight (row-major on ties)
//  v_min     - attention weight of the last preferred pixel (the selection
//              threshold actually achieved)
struct PixelSets {
    std::vector<PixelIndex> edited;
    std::vector<PixelIndex> preferred;
    double v_min = 0.0;
};

// Something that can produce a map per sampling step. Implementations must
// be deterministic functions of their construction seed and the step index,
// so repeated runs over the same steps see identical maps.
class AttentionProvider {
  public:
    virtual ~AttentionProvider() = default;
    virtual AttentionMap emit(const LatentImage& x_t, int step, const PromptEmbedding* cond) = 0;
};

// Pointwise mean of the given maps. Empty input or mixed resolutions throw
// ParameterError.
AttentionMap average_attention(const std::vector<AttentionMap>& maps);

// Bilinear resize with half-pixel centers (edge clamped). A constant map
// stays constant at any target size.
AttentionMap resize_attention(const AttentionMap& a, int out_h, int out_w);

// Builds the edited/preferred pixel groups for a map and a binary mask of
// the same resolution. An all-zero mask yields empty groups.
PixelSets build_pixel_sets(const AttentionMap& a, const EditMask& mask);

// Substitution step: copies whole channel vectors from the sampled noise
// x_no into a copy of the inverted noise x_inv. Edited pixel i takes the
// value at preferred pixel i while both lists last; remaining edited pixels
// draw their source uniformly from the preferred list (seeded). Pixels
// outside the mask are returned bit-identical.
LatentImage attention_process(const LatentImage& x_inv, const LatentImage& x_no,
                              const AttentionMap& a, const EditMask& mask, uint64_t seed);

// Test/e2e attention source: emits (1-noise_level)*indicator(region) plus
// noise_level * N(0,1) per pixel, clamped at zero. noise_level == 0 gives
// exactly the region indicator, and raising it degrades the in-region signal
// the way a sloppier cross-attention readout would.
class SyntheticAttention : public AttentionProvider {
  public:
    SyntheticAttention(EditMask region, double noise_level, uint64_t seed);

    AttentionMap emit(const LatentImage& x_t, int step, const PromptEmbedding* cond) override;

  private:
    EditMask region_;
    double noise_level_;
    uint64_t seed_;
};

} // namespace madiff
