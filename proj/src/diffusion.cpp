#include "madiff/diffusion.hpp"

#include "madiff/errors.hpp"

#include <cmath>
#include <string>

namespace madiff {

namespace {
constexpr double kAlphaFloor = 1e-300;
}

LatentImage predict_x0(const LatentImage& x_t, const LatentImage& eps, double alpha_bar_t) {
    require_same_shape(x_t, eps, "predict_x0");
    if (alpha_bar_t > 1.0)
        throw ParameterError("predict_x0: alpha_bar > 1");
    if (!(alpha_bar_t > kAlphaFloor))
        throw SingularityError("predict_x0: alpha_bar too close to zero (" +
                               std::to_string(alpha_bar_t) + ")");
    double sa = std::sqrt(alpha_bar_t);
    double sn = std::sqrt(1.0 - alpha_bar_t);
    LatentImage out = x_t;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = (x_t.data[i] - sn * eps.data[i]) / sa;
    return out;
}

LatentImage invert_step(const LatentImage& x_t, int step, const NoisePredictor& pred,
                        const NoiseSchedule& sched) {
    if (step < 0 || step + 1 > sched.total_steps())
        throw ParameterError("invert_step: step " + std::to_string(step) + " out of range");
    double a_t = sched.alpha_at(step);
    double a_next = sched.alpha_at(step + 1);
    LatentImage eps = pred.predict(x_t, step, nullptr);
    LatentImage f = predict_x0(x_t, eps, a_t);
    return lincomb(eps, std::sqrt(1.0 - a_next), f, std::sqrt(a_next));
}

Trajectory invert(const LatentImage& x0, const NoisePredictor& pred, const NoiseSchedule& sched) {
    int depth = sched.inversion_depth;
    if (depth < 0 || depth > sched.total_steps())
        throw ParameterError("invert: inversion depth " + std::to_string(depth) + " out of range");
    Trajectory tr;
    tr.states.reserve(size_t(depth));
    LatentImage x = x0;
    for (int step = 0; step < depth; ++step) {
        tr.states.push_back(x);
        x = invert_step(x, step, pred, sched);
    }
    tr.final_noise = std::move(x);
    return tr;
}

LatentImage sample_step(const LatentImage& x_t, int step, const PromptEmbedding* cond,
                        const NoisePredictor& pred, const NoiseSchedule& sched) {
    if (step < 1 || step > sched.total_steps())
        throw ParameterError("sample_step: step " + std::to_string(step) + " out of range");
    double a_t = sched.alpha_at(step);
    double a_prev = sched.alpha_at(step - 1);
    LatentImage eps = pred.predict(x_t, step, cond);
    LatentImage f = predict_x0(x_t, eps, a_t);
    return lincomb(f, std::sqrt(a_prev), eps, std::sqrt(1.0 - a_prev));
}

std::pair<LatentImage, std::vector<AttentionMap>>
sample(const LatentImage& x_start, int from, int to, const PromptEmbedding* cond,
       const NoisePredictor& pred, AttentionProvider* provider, const NoiseSchedule& sched) {
    if (to < 0 || from < to || from > sched.total_steps())
        throw ParameterError("sample: bad step range [" + std::to_string(to) + ", " +
                             std::to_string(from) + "]");
    std::vector<AttentionMap> maps;
    maps.reserve(size_t(from - to));
    LatentImage x = x_start;
    for (int step = from; step > to; --step) {
        if (provider) maps.push_back(provider->emit(x, step, cond));
        x = sample_step(x, step, cond, pred, sched);
    }
    return {std::move(x), std::move(maps)};
}

} // namespace madiff
