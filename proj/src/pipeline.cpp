#include "madiff/pipeline.hpp"

#include "madiff/errors.hpp"

namespace madiff {

GaussianMixtureModel task_mixture(const Sample& source, const Sample& target, double sigma0) {
    GaussianMixtureModel gmm;
    gmm.sigma0 = sigma0;
    gmm.components.push_back({0.5, source.image, "source:" + source.caption.text});
    gmm.components.push_back({0.5, target.image, "target:" + target.caption.text});
    gmm.classes["edit"] = {{0, 0.5}, {1, 0.5}};
    gmm.classes["gen"] = {{1, 1.0}};
    gmm.validate();
    return gmm;
}

TaskPipeline::TaskPipeline(const EditTask& task, const EditConfig& cfg, const MaskNet* masknet) {
    target_render_ = render(task.target, task.input.body_seed);
    gmm_ = task_mixture(task.input, target_render_);

    NoiseSchedule schedule = build_schedule(cfg.raw_steps, cfg.beta_min, cfg.beta_max);
    schedule = with_stride(schedule, cfg.stride);
    schedule = with_inversion_depth(schedule, cfg.inversion_depth);

    edit_predictor_ = std::make_unique<GaussianMixturePredictor>(gmm_, schedule, "edit");
    gen_predictor_ = std::make_unique<GaussianMixturePredictor>(gmm_, schedule, "gen");
    attention_ = std::make_unique<SyntheticAttention>(
        task.region, cfg.noise_level, seed_split(cfg.seed, "attention-provider"));

    mask_input_ = task_mask_input(task.input, task.target_prompt, default_shape_vocabulary(),
                                  default_embedding_table());
    cond_ = embed_prompt(MaskPrompt{tokenize(task.target_prompt.text)}, default_embedding_table());
    foreground_ = task.input.foreground;

    deps_.invert_predictor = edit_predictor_.get();
    deps_.sample_predictor = gen_predictor_.get();
    deps_.blend_predictor = edit_predictor_.get();
    deps_.attention = attention_.get();
    deps_.masknet = masknet;
    deps_.mask_input = &mask_input_;
    deps_.foreground = &foreground_;
    deps_.cond = &cond_;
}

EditResult TaskPipeline::run(const EditTask& task, const EditConfig& cfg) const {
    if (cfg.mask_source == MaskSource::masknet && deps_.masknet == nullptr)
        throw ConfigError("run_task: masknet mask source but no model was provided");
    return edit(task.input.image, task.target_prompt, cfg, deps_);
}

EditResult run_task(const EditTask& task, const EditConfig& cfg, const MaskNet* masknet) {
    TaskPipeline pipeline(task, cfg, masknet);
    return pipeline.run(task, cfg);
}

} // namespace madiff
