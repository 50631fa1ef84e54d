#include "madiff/editor.hpp"

#include "madiff/errors.hpp"
#include "madiff/rng.hpp"

#include <algorithm>
#include <chrono>
#include <tuple>
#include <utility>

namespace madiff {

namespace {

std::string stage_tag(const char* name, const std::exception& e) {
    return std::string("edit stage '") + name + "': " + e.what();
}

// Reruns a stage, tagging any library error with the stage name while
// keeping its concrete type so callers can still dispatch on it.
template <class F>
decltype(auto) run_stage(const char* name, F&& f) {
    try {
        return std::forward<F>(f)();
    } catch (const ParameterError& e) {
        throw ParameterError(stage_tag(name, e));
    } catch (const SingularityError& e) {
        throw SingularityError(stage_tag(name, e));
    } catch (const ConfigError& e) {
        throw ConfigError(stage_tag(name, e));
    } catch (const TrainingError& e) {
        throw TrainingError(stage_tag(name, e));
    } catch (const StateError& e) {
        throw StateError(stage_tag(name, e));
    } catch (const FormatError& e) {
        throw FormatError(stage_tag(name, e));
    } catch (const IoError& e) {
        throw IoError(stage_tag(name, e));
    }
}

LatentImage gaussian_image(int channels, int height, int width, uint64_t seed) {
    LatentImage out(channels, height, width);
    Rng rng(seed);
    for (double& v : out.data) v = rng.normal();
    return out;
}

int count_positive(const EditMask& m) {
    int n = 0;
    for (double v : m.data) n += v > 0.0 ? 1 : 0;
    return n;
}

} // namespace

std::string mask_source_name(MaskSource s) {
    switch (s) {
    case MaskSource::masknet: return "masknet";
    case MaskSource::foreground: return "foreground";
    case MaskSource::attention_threshold: return "attention_threshold";
    }
    throw ParameterError("mask_source_name: bad mask source value");
}

MaskSource parse_mask_source(const std::string& name) {
    if (name == "masknet") return MaskSource::masknet;
    if (name == "foreground") return MaskSource::foreground;
    if (name == "attention_threshold") return MaskSource::attention_threshold;
    throw FormatError("unknown mask source '" + name + "'");
}

nlohmann::json EditConfig::to_json() const {
    return {
        {"raw_steps", raw_steps},
        {"beta_min", beta_min},
        {"beta_max", beta_max},
        {"stride", stride},
        {"inversion_depth", inversion_depth},
        {"seed", seed},
        {"noise_level", noise_level},
        {"mask_source", mask_source_name(mask_source)},
        {"binarize_threshold", binarize_threshold},
        {"attention_processor", attention_processor},
    };
}

LatentImage blend_step(const LatentImage& x_t_re, int t, const EditMask& mask,
                       const Trajectory& trajectory, const PromptEmbedding* cond,
                       const NoisePredictor& predictor, const NoiseSchedule& schedule) {
    if (mask.height != x_t_re.height || mask.width != x_t_re.width)
        throw ParameterError("blend_step: mask/state resolution mismatch");
    if (t < 1 || size_t(t) > trajectory.states.size())
        throw StateError("blend_step: trajectory holds no state for step " + std::to_string(t - 1));

    LatentImage ddim = sample_step(x_t_re, t, cond, predictor, schedule);
    const LatentImage& prev = trajectory.states[size_t(t) - 1];
    require_same_shape(ddim, prev, "blend_step");

    LatentImage out = ddim;
    for (int c = 0; c < out.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x) {
                double mv = mask.at(y, x);
                if (mv <= 0.0)
                    out.at(c, y, x) = prev.at(c, y, x); // exact, not a scaled sum
                else if (mv < 1.0)
                    out.at(c, y, x) = mv * ddim.at(c, y, x) + (1.0 - mv) * prev.at(c, y, x);
            }
    return out;
}

EditMask attention_threshold_mask(const AttentionMap& a) {
    if (a.data.empty()) throw ParameterError("attention_threshold_mask: empty map");
    std::vector<double> sorted = a.data;
    std::sort(sorted.begin(), sorted.end());
    size_t n = sorted.size();
    double median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    EditMask m(a.height, a.width);
    for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = a.data[i] > median ? 1.0 : 0.0;
    return m;
}

EditResult edit(const LatentImage& x_org, const PromptText& target_prompt, const EditConfig& cfg,
                const EditorDeps& deps) {
    auto wall_start = std::chrono::steady_clock::now();

    if (deps.invert_predictor == nullptr || deps.sample_predictor == nullptr)
        throw ConfigError("edit: invert and sample predictors are required");
    if (deps.attention == nullptr) throw ConfigError("edit: attention provider is required");
    const NoisePredictor& blend_pred =
        deps.blend_predictor ? *deps.blend_predictor : *deps.invert_predictor;
    static const EncoderDecoder identity_codec;
    const EncoderDecoder& codec = deps.codec ? *deps.codec : identity_codec;

    NoiseSchedule schedule = run_stage("schedule", [&] {
        NoiseSchedule s = build_schedule(cfg.raw_steps, cfg.beta_min, cfg.beta_max);
        s = with_stride(s, cfg.stride);
        if (cfg.inversion_depth < 1 || cfg.inversion_depth >= s.total_steps())
            throw ConfigError("edit: inversion depth " + std::to_string(cfg.inversion_depth) +
                              " must lie in [1, " + std::to_string(s.total_steps()) +
                              ") so the sampling branch has at least one step");
        return with_inversion_depth(s, cfg.inversion_depth);
    });
    const int total = schedule.total_steps();
    const int depth = schedule.inversion_depth;

    // conditioning: an explicit embedding wins, otherwise embed the prompt
    PromptEmbedding local_cond;
    const PromptEmbedding* cond = deps.cond;
    if (cond == nullptr) {
        EmbeddingTable table = default_embedding_table();
        local_cond = embed_prompt(MaskPrompt{tokenize(target_prompt.text)}, table);
        cond = &local_cond;
    }

    EditResult result;

    LatentImage latent = run_stage("encode", [&] {
        require_finite(x_org, "edit input");
        return codec.encode(x_org);
    });

    result.trajectory =
        run_stage("invert", [&] { return invert(latent, *deps.invert_predictor, schedule); });
    result.x_s = result.trajectory.final_noise;

    uint64_t init_seed = seed_split(cfg.seed, "init-noise");
    uint64_t substitution_seed = seed_split(cfg.seed, "substitution");

    std::vector<AttentionMap> maps;
    std::tie(result.x_s_no, maps) = run_stage("sample", [&] {
        LatentImage x_t_no = gaussian_image(latent.channels, latent.height, latent.width, init_seed);
        return sample(x_t_no, total, depth, cond, *deps.sample_predictor, deps.attention, schedule);
    });

    result.attention = run_stage("average-attention", [&] { return average_attention(maps); });
    AttentionMap attention_resized = result.attention;
    if (attention_resized.height != latent.height || attention_resized.width != latent.width)
        attention_resized = resize_attention(result.attention, latent.height, latent.width);

    run_stage("mask", [&] {
        if (deps.mask_override != nullptr) {
            result.soft_mask = *deps.mask_override;
            result.mask = *deps.mask_override;
            return;
        }
        switch (cfg.mask_source) {
        case MaskSource::masknet:
            if (deps.masknet == nullptr || deps.mask_input == nullptr)
                throw ConfigError("edit: masknet mask source needs a model and its input");
            result.soft_mask = deps.masknet->predict(*deps.mask_input);
            result.mask = binarize(result.soft_mask, cfg.binarize_threshold);
            break;
        case MaskSource::foreground:
            if (deps.foreground == nullptr)
                throw ConfigError("edit: foreground mask source needs a foreground mask");
            result.soft_mask = *deps.foreground;
            result.mask = *deps.foreground;
            break;
        case MaskSource::attention_threshold:
            result.soft_mask = attention_threshold_mask(attention_resized);
            result.mask = result.soft_mask;
            break;
        }
        if (result.mask.height != latent.height || result.mask.width != latent.width)
            throw ParameterError("edit: mask resolution does not match the latent");
    });

    result.x_s_re = run_stage("attention-process", [&] {
        if (!cfg.attention_processor) return result.x_s;
        return attention_process(result.x_s, result.x_s_no, attention_resized, result.mask,
                                 substitution_seed);
    });

    result.x_out = run_stage("blend", [&] {
        LatentImage x = result.x_s_re;
        for (int t = depth; t >= 1; --t)
            x = blend_step(x, t, result.mask, result.trajectory, cond, blend_pred, schedule);
        return codec.decode(x);
    });

    result.provenance = {
        {"command", "edit"},
        {"config", cfg.to_json()},
        {"prompt", target_prompt.text},
        {"derived_seeds",
         {{"init_noise", init_seed}, {"substitution", substitution_seed}}},
        {"schedule",
         {{"total_steps", total},
          {"alpha_bar_start", schedule.alpha_at(0)},
          {"alpha_bar_end", schedule.alpha_at(total)}}},
        {"stages",
         {{"blend_steps", depth},
          {"attention_maps", int(maps.size())},
          {"mask_pixels", count_positive(result.mask)},
          {"mask_forced", deps.mask_override != nullptr},
          {"attention_processed", cfg.attention_processor}}},
        {"version", "madiff 0.1.0"},
    };

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return result;
}

} // namespace madiff
