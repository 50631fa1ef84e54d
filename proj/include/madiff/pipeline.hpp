#pragma once

#include "madiff/datagen.hpp"
#include "madiff/denoiser.hpp"
#include "madiff/editor.hpp"

#include <memory>

namespace madiff {

// Bundles everything edit() needs for one synthetic task, with the analytic
// mixture standing in for a pretrained backbone:
//   - mixture components: the rendered source and target scenes
//   - class "edit" {source, target}: inversion and blended denoising, which
//     must be free to stay near the source or move to the target
//   - class "gen" {target}: the prompted sampling branch, which should land
//     on the target
//   - synthetic attention concentrated on the ground-truth region
//   - mask-network input built from the source sample and the mask prompt
class TaskPipeline {
  public:
    TaskPipeline(const EditTask& task, const EditConfig& cfg, const MaskNet* masknet);

    const EditorDeps& deps() const { return deps_; }
    const GaussianMixtureModel& mixture() const { return gmm_; }
    const Sample& target_render() const { return target_render_; }

    // Replaces the mask-prompt embedding (e.g. with one fetched from an LLM
    // endpoint) while keeping the rest of the wiring.
    void set_mask_embedding(const PromptEmbedding& e) { mask_input_.embedding = e; }

    // Runs the editor on the task input under the stored dependencies.
    EditResult run(const EditTask& task, const EditConfig& cfg) const;

  private:
    Sample target_render_;
    GaussianMixtureModel gmm_;
    std::unique_ptr<GaussianMixturePredictor> edit_predictor_; // class "edit"
    std::unique_ptr<GaussianMixturePredictor> gen_predictor_;  // class "gen"
    std::unique_ptr<SyntheticAttention> attention_;
    MaskInput mask_input_;
    PromptEmbedding cond_;
    EditMask foreground_;
    EditorDeps deps_;
};

// Builds the two-component mixture for a task. Exposed separately so tests
// can poke at the mixture without an editor run.
GaussianMixtureModel task_mixture(const Sample& source, const Sample& target, double sigma0 = 0.05);

// Convenience wrapper: assemble the pipeline and run the edit.
EditResult run_task(const EditTask& task, const EditConfig& cfg, const MaskNet* masknet);

} // namespace madiff
