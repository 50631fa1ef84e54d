#pragma once

#include "madiff/latent.hpp"
#include "madiff/mask.hpp"
#include "madiff/nn.hpp"
#include "madiff/prompt.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace madiff {

// What the mask predictor sees: the person's foreground silhouette, a one-hot
// body-part layout, and the embedded mask prompt.
struct MaskInput {
    EditMask foreground;
    LatentImage parts;
    PromptEmbedding embedding;
};

struct MaskNetConfig {
    int base_channels = 8; // second encoder stage doubles this
    int part_channels = 6;
    int embed_dim = 32;
    int attn_dim = 16;
    nn::Act activation = nn::Act::silu;
    bool sigmoid_head = true;
    bool use_attention = true;
    uint64_t init_seed = 1;

    // Fully linear variant (identity activation, no attention, no sigmoid).
    // Its gradients are exact, which pins the backprop plumbing in tests.
    static MaskNetConfig linear_probe();
};

// Small UNet: two stride-2 encoder stages, a prompt-keyed spatial attention
// block at the bottleneck (queries from features, key/value from the prompt
// embedding, softmax over positions), two decoder stages with skip
// connections, sigmoid head. All backward passes are written by hand; the
// flat parameter vector keeps gradient checks, plain-GD updates and
// checkpointing trivial.
class MaskNet {
  public:
    explicit MaskNet(MaskNetConfig cfg);

    const MaskNetConfig& config() const { return cfg_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    int param_count() const { return int(params_.size()); }

    // Soft mask in (0,1) (or raw scores without the sigmoid head).
    EditMask predict(const MaskInput& input) const;

    // Mean squared error against a target mask.
    double loss(const MaskInput& input, const EditMask& truth) const;

    // Loss plus parameter gradients accumulated into *grad (params layout).
    double loss_and_grad(const MaskInput& input, const EditMask& truth,
                         std::vector<double>* grad) const;

  private:
    MaskNetConfig cfg_;
    std::vector<double> params_;

    struct Layout; // parameter offsets
    Layout layout() const;
    struct Workspace;
    EditMask forward(const MaskInput& input, Workspace* ws) const;
};

struct MaskExample {
    MaskInput input;
    EditMask truth;
};

struct MaskTrainConfig {
    double lr = 1e-2;
    int batch = 16;
    int epochs = 40;
    int max_steps = 0; // 0 = no cap
    uint64_t seed = 0;
    double binarize_threshold = 0.5;
};

struct TrainingReport {
    double initial_loss = 0.0; // over a fixed probe subset, before training
    double final_loss = 0.0;   // same subset, end-of-training parameters
    std::vector<double> step_loss;
    std::vector<double> epoch_loss;
    std::vector<double> val_iou; // one entry per epoch when val data given
    int best_epoch = -1;
    double best_val_iou = 0.0;
    int steps_run = 0;

    nlohmann::json to_json() const;
};

// Plain momentum-free gradient descent. When validation examples are given
// the model is left holding the parameters of its best validation epoch.
TrainingReport train_masknet(MaskNet& model, const std::vector<MaskExample>& train,
                             const std::vector<MaskExample>& val, const MaskTrainConfig& cfg);

// Mean IoU of thresholded predictions against the ground truth masks.
double mean_val_iou(const MaskNet& model, const std::vector<MaskExample>& examples,
                    double threshold);

struct GradCheckResult {
    double max_rel_error = 0.0;
    int checked = 0;
};

// Central-difference check of loss_and_grad on up to max_params randomly
// chosen parameters. Relative error uses |a|+|n| with a small floor.
GradCheckResult gradient_check(const MaskNet& model, const MaskExample& example, double h,
                               int max_params, uint64_t seed);

// Checkpoint: magic, little-endian u32 header length, JSON header (config,
// parameter count, caller metadata), then raw little-endian float64 params.
// Round-trips are bit-exact.
void save_masknet(const std::string& path, const MaskNet& model, const nlohmann::json& meta);
MaskNet load_masknet(const std::string& path, nlohmann::json* meta_out = nullptr);

} // namespace madiff
