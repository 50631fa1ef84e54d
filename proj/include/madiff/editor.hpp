#pragma once

#include "madiff/attention.hpp"
#include "madiff/diffusion.hpp"
#include "madiff/masknet.hpp"
#include "madiff/predictor.hpp"
#include "madiff/prompt.hpp"
#include "madiff/schedule.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>

namespace madiff {

// Where the edit mask comes from:
//   masknet              the trained mask predictor (the full method)
//   foreground           the person silhouette (mask-predictor-off ablation)
//   attention_threshold  averaged attention binarized at its own median
//                        (local-blending-style ablation)
enum class MaskSource { masknet, foreground, attention_threshold };

std::string mask_source_name(MaskSource s);
MaskSource parse_mask_source(const std::string& name); // FormatError on unknown names

struct EditConfig {
    int raw_steps = 1000;       // raw schedule length T
    double beta_min = 1e-4;
    double beta_max = 0.02;
    int stride = 20;            // raw steps per effective step
    int inversion_depth = 35;   // S, in effective steps; must stay below T/stride
    uint64_t seed = 0;
    double noise_level = 0.1;   // synthetic attention sharpness
    MaskSource mask_source = MaskSource::masknet;
    double binarize_threshold = 0.5;
    bool attention_processor = true; // off reduces x_S^re to plain x_S

    nlohmann::json to_json() const;
};

// Latent codec seam. Desk scale diffuses in pixel space, so the default is
// the identity; a learned VAE would slot in here without touching edit().
class EncoderDecoder {
  public:
    virtual ~EncoderDecoder() = default;
    virtual LatentImage encode(const LatentImage& image) const { return image; }
    virtual LatentImage decode(const LatentImage& latent) const { return latent; }
};

// Everything edit() borrows. Pointers are non-owning and must outlive the
// call; blend_predictor and codec fall back to invert_predictor and the
// identity codec when null.
struct EditorDeps {
    const NoisePredictor* invert_predictor = nullptr; // drives DDIM inversion
    const NoisePredictor* sample_predictor = nullptr; // drives the prompted sampling branch
    const NoisePredictor* blend_predictor = nullptr;  // drives blended denoising
    AttentionProvider* attention = nullptr;
    const EncoderDecoder* codec = nullptr;
    const MaskNet* masknet = nullptr;       // with MaskSource::masknet
    const MaskInput* mask_input = nullptr;  // with MaskSource::masknet
    const EditMask* foreground = nullptr;   // with MaskSource::foreground
    const EditMask* mask_override = nullptr; // test hook: forces the final mask
    const PromptEmbedding* cond = nullptr;  // conditioning; default embeds the prompt text
};

struct EditResult {
    LatentImage x_out;
    EditMask mask;        // the binary mask the blend actually used
    EditMask soft_mask;   // pre-binarization mask (equals mask for binary sources)
    AttentionMap attention;
    LatentImage x_s;      // inversion endpoint
    LatentImage x_s_no;   // sampling-branch endpoint
    LatentImage x_s_re;   // refined start of blended denoising
    Trajectory trajectory;
    nlohmann::json provenance; // config, seeds, stage accounting; no timings
    double wall_seconds = 0.0; // reported separately so provenance stays stable
};

// One blended denoising update: the prompted DDIM step inside the mask, the
// stored inversion state x_{t-1} outside. Exact at mask values 0 and 1, so a
// binary mask reproduces the chosen branch bit for bit.
LatentImage blend_step(const LatentImage& x_t_re, int t, const EditMask& mask,
                       const Trajectory& trajectory, const PromptEmbedding* cond,
                       const NoisePredictor& predictor, const NoiseSchedule& schedule);

// Binarizes an attention map at its own median (strictly above). Constant
// maps come back empty rather than all-selected.
EditMask attention_threshold_mask(const AttentionMap& a);

// The full pipeline: encode, invert S effective steps, run the prompted
// sampling branch from seeded noise while collecting attention, derive the
// mask, refine x_S with the substitution step, blend-denoise back to x_0,
// decode. Deterministic given (inputs, cfg.seed).
EditResult edit(const LatentImage& x_org, const PromptText& target_prompt, const EditConfig& cfg,
                const EditorDeps& deps);

} // namespace madiff
