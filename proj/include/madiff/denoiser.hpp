#pragma once

#include "madiff/latent.hpp"
#include "madiff/predictor.hpp"
#include "madiff/prompt.hpp"
#include "madiff/schedule.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace madiff {

// Isotropic Gaussian mixture over flattened images. Under the forward
// process at alpha_bar, component k contributes
//   N(x; sqrt(alpha_bar) * mean_k, (alpha_bar * sigma0^2 + 1 - alpha_bar) I)
// which makes the exact posterior-mean noise available in closed form. The
// mixture doubles as the test oracle for everything downstream of the
// predictor seam.
struct GmComponent {
    double weight = 0.0;
    LatentImage mean;
    std::string prototype_id; // stable name used by the JSON spec
};

struct GaussianMixtureModel {
    double sigma0 = 0.05;
    std::vector<GmComponent> components;
    // class name -> (component index, class weight); weights are renormalized
    // at evaluation time, so only their ratios matter.
    std::map<std::string, std::vector<std::pair<int, double>>> classes;

    void validate() const; // throws ConfigError on bad weights/indices/shapes
};

// Fully normalized log p_t(x) of the noised mixture; cls selects a class
// subset (nullptr = whole mixture). The finite-difference tests take the
// gradient of this.
double gm_log_density(const GaussianMixtureModel& gmm, const LatentImage& x, double alpha_bar,
                      const std::string* cls);

// Exact noise prediction  eps = -sqrt(1 - alpha_bar) * grad_x log p_t(x),
// evaluated in closed form with log-sum-exp stabilized responsibilities.
LatentImage analytic_eps(const GaussianMixtureModel& gmm, const LatentImage& x, double alpha_bar,
                         const std::string* cls);

// Same, indexed by effective schedule step.
LatentImage analytic_eps_at(const GaussianMixtureModel& gmm, const LatentImage& x, int step,
                            const std::string* cls, const NoiseSchedule& sched);

// NoisePredictor backed by the mixture. The conditioning class is fixed at
// construction; the embedding argument is accepted for interface parity and
// ignored (class selection is a config concern, not an embedding lookup).
class GaussianMixturePredictor : public NoisePredictor {
  public:
    GaussianMixturePredictor(GaussianMixtureModel gmm, NoiseSchedule sched,
                             std::optional<std::string> cls = std::nullopt);

    LatentImage predict(const LatentImage& x_t, int step,
                        const PromptEmbedding* cond) const override;

    const GaussianMixtureModel& model() const { return gmm_; }

  private:
    GaussianMixtureModel gmm_;
    NoiseSchedule sched_;
    std::optional<std::string> cls_;
};

// JSON round-trip for the mixture *specification*: weights, sigma0, class
// table and prototype ids. Means are not embedded; the loader resolves each
// prototype id back to an image (typically by re-rendering it).
nlohmann::json gmm_spec_to_json(const GaussianMixtureModel& gmm);
GaussianMixtureModel gmm_from_spec_json(
    const nlohmann::json& spec,
    const std::function<LatentImage(const std::string&)>& resolve_prototype);

// Small trainable epsilon-predictor (two 3x3 convs around a SiLU, plus two
// schedule planes and an optional conditioning plane). It exists to exercise
// the NoisePredictor seam end to end, not to reach sample quality.
struct TinyDenoiserConfig {
    int hidden = 16;
    int cond_dim = 8;
    double lr = 1e-2;
    int batch = 8;
    int steps = 20;
    uint64_t seed = 0;
};

class TinyDenoiser : public NoisePredictor {
  public:
    TinyDenoiser(int image_channels, TinyDenoiserConfig cfg, const NoiseSchedule& sched);

    LatentImage predict(const LatentImage& x_t, int step,
                        const PromptEmbedding* cond) const override;

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    const TinyDenoiserConfig& config() const { return cfg_; }

    // Mean squared error of eps prediction on one noised example, plus
    // parameter gradients (accumulated into grad, same layout as params).
    double loss_and_grad(const LatentImage& x0, const PromptEmbedding* cond, int step,
                         const LatentImage& eps, std::vector<double>* grad) const;

  private:
    int image_channels_;
    TinyDenoiserConfig cfg_;
    NoiseSchedule sched_;
    std::vector<double> params_;

    friend class TinyDenoiserOps;
};

// Plain-GD training loop over (image, class-name) pairs. Class names are
// embedded through a hash table of dimension cfg.cond_dim. Returns the loss
// history; throws TrainingError when the loss stops being finite.
std::vector<double> train_tiny_denoiser(TinyDenoiser& model,
                                        const std::vector<std::pair<LatentImage, std::string>>& data,
                                        const NoiseSchedule& sched);

} // namespace madiff
