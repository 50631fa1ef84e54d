#include "madiff/denoiser.hpp"

#include "madiff/errors.hpp"
#include "madiff/nn.hpp"
#include "madiff/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace madiff {

void GaussianMixtureModel::validate() const {
    if (components.empty()) throw ConfigError("gmm: no components");
    if (!(sigma0 > 0.0)) throw ConfigError("gmm: sigma0 must be > 0");
    double sum = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0)) throw ConfigError("gmm: component weights must be positive");
        if (!c.mean.same_shape(components.front().mean))
            throw ConfigError("gmm: component mean shapes differ");
        sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("gmm: component weights sum to " + std::to_string(sum) + ", want 1");
    for (const auto& [name, members] : classes) {
        if (members.empty()) throw ConfigError("gmm: class '" + name + "' is empty");
        for (auto [idx, w] : members) {
            if (idx < 0 || idx >= int(components.size()))
                throw ConfigError("gmm: class '" + name + "' references component " +
                                  std::to_string(idx));
            if (!(w > 0.0))
                throw ConfigError("gmm: class '" + name + "' has non-positive weight");
        }
    }
}

namespace {

// Active (component index, normalized weight) pairs for a class selection.
std::vector<std::pair<int, double>> active_components(const GaussianMixtureModel& gmm,
                                                      const std::string* cls) {
    std::vector<std::pair<int, double>> out;
    if (cls == nullptr) {
        for (int i = 0; i < int(gmm.components.size()); ++i)
            out.emplace_back(i, gmm.components[size_t(i)].weight);
    } else {
        auto it = gmm.classes.find(*cls);
        if (it == gmm.classes.end())
            throw ConfigError("gmm: unknown class '" + *cls + "'");
        out = it->second;
    }
    double sum = 0.0;
    for (auto& [idx, w] : out) sum += w;
    for (auto& [idx, w] : out) w /= sum;
    return out;
}

double noised_variance(const GaussianMixtureModel& gmm, double alpha_bar) {
    if (!(alpha_bar >= 0.0) || !(alpha_bar <= 1.0))
        throw ParameterError("gmm: alpha_bar outside [0, 1]");
    double v = alpha_bar * gmm.sigma0 * gmm.sigma0 + (1.0 - alpha_bar);
    if (!(v > 0.0))
        throw SingularityError("gmm: degenerate noised variance (alpha_bar=1 with sigma0=0)");
    return v;
}

} // namespace

double gm_log_density(const GaussianMixtureModel& gmm, const LatentImage& x, double alpha_bar,
                      const std::string* cls) {
    gmm.validate();
    auto active = active_components(gmm, cls);
    double v = noised_variance(gmm, alpha_bar);
    double sa = std::sqrt(alpha_bar);
    double dims = double(x.size());

    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(active.size());
    for (auto [idx, w] : active) {
        const LatentImage& mu = gmm.components[size_t(idx)].mean;
        require_same_shape(x, mu, "gm_log_density");
        double d2 = 0.0;
        for (size_t i = 0; i < x.data.size(); ++i) {
            double d = x.data[i] - sa * mu.data[i];
            d2 += d * d;
        }
        double t = std::log(w) - d2 / (2.0 * v);
        terms.push_back(t);
        max_term = std::max(max_term, t);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    return max_term + std::log(acc) - 0.5 * dims * std::log(2.0 * M_PI * v);
}

LatentImage analytic_eps(const GaussianMixtureModel& gmm, const LatentImage& x, double alpha_bar,
                         const std::string* cls) {
    gmm.validate();
    auto active = active_components(gmm, cls);
    double v = noised_variance(gmm, alpha_bar);
    double sa = std::sqrt(alpha_bar);

    // responsibilities, log-sum-exp stabilized
    std::vector<double> logits(active.size());
    double max_l = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < active.size(); ++k) {
        const LatentImage& mu = gmm.components[size_t(active[k].first)].mean;
        require_same_shape(x, mu, "analytic_eps");
        double d2 = 0.0;
        for (size_t i = 0; i < x.data.size(); ++i) {
            double d = x.data[i] - sa * mu.data[i];
            d2 += d * d;
        }
        logits[k] = std::log(active[k].second) - d2 / (2.0 * v);
        max_l = std::max(max_l, logits[k]);
    }
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l - max_l);

    // posterior-weighted mean of the noised component centers
    LatentImage mbar(x.channels, x.height, x.width);
    for (size_t k = 0; k < active.size(); ++k) {
        double gamma = std::exp(logits[k] - max_l) / denom;
        if (gamma == 0.0) continue;
        const LatentImage& mu = gmm.components[size_t(active[k].first)].mean;
        for (size_t i = 0; i < mbar.data.size(); ++i)
            mbar.data[i] += gamma * sa * mu.data[i];
    }

    double scale = std::sqrt(1.0 - alpha_bar) / v;
    LatentImage eps(x.channels, x.height, x.width);
    for (size_t i = 0; i < eps.data.size(); ++i)
        eps.data[i] = scale * (x.data[i] - mbar.data[i]);
    return eps;
}

LatentImage analytic_eps_at(const GaussianMixtureModel& gmm, const LatentImage& x, int step,
                            const std::string* cls, const NoiseSchedule& sched) {
    return analytic_eps(gmm, x, sched.alpha_at(step), cls);
}

GaussianMixturePredictor::GaussianMixturePredictor(GaussianMixtureModel gmm, NoiseSchedule sched,
                                                   std::optional<std::string> cls)
    : gmm_(std::move(gmm)), sched_(std::move(sched)), cls_(std::move(cls)) {
    gmm_.validate();
    if (cls_ && gmm_.classes.find(*cls_) == gmm_.classes.end())
        throw ConfigError("GaussianMixturePredictor: unknown class '" + *cls_ + "'");
}

LatentImage GaussianMixturePredictor::predict(const LatentImage& x_t, int step,
                                              const PromptEmbedding* /*cond*/) const {
    return analytic_eps(gmm_, x_t, sched_.alpha_at(step), cls_ ? &*cls_ : nullptr);
}

nlohmann::json gmm_spec_to_json(const GaussianMixtureModel& gmm) {
    nlohmann::json spec;
    spec["sigma0"] = gmm.sigma0;
    spec["components"] = nlohmann::json::array();
    for (const auto& c : gmm.components)
        spec["components"].push_back({{"weight", c.weight}, {"prototype_id", c.prototype_id}});
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [name, members] : gmm.classes) {
        nlohmann::json arr = nlohmann::json::array();
        for (auto [idx, w] : members) arr.push_back({{"component", idx}, {"weight", w}});
        classes[name] = arr;
    }
    spec["classes"] = classes;
    return spec;
}

GaussianMixtureModel gmm_from_spec_json(
    const nlohmann::json& spec,
    const std::function<LatentImage(const std::string&)>& resolve_prototype) {
    GaussianMixtureModel gmm;
    try {
        gmm.sigma0 = spec.at("sigma0").get<double>();
        for (const auto& c : spec.at("components")) {
            GmComponent comp;
            comp.weight = c.at("weight").get<double>();
            comp.prototype_id = c.at("prototype_id").get<std::string>();
            comp.mean = resolve_prototype(comp.prototype_id);
            gmm.components.push_back(std::move(comp));
        }
        if (spec.contains("classes"))
            for (const auto& [name, members] : spec.at("classes").items()) {
                std::vector<std::pair<int, double>> ms;
                for (const auto& m : members)
                    ms.emplace_back(m.at("component").get<int>(), m.at("weight").get<double>());
                gmm.classes[name] = std::move(ms);
            }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("gmm spec: ") + e.what());
    }
    gmm.validate();
    return gmm;
}

// ---- tiny trainable denoiser ----

namespace {

nn::ConvSpec tiny_conv1(int image_channels, int hidden) {
    return {image_channels + 3, hidden, 3};
}
nn::ConvSpec tiny_conv2(int image_channels, int hidden) {
    return {hidden, image_channels, 3};
}

} // namespace

TinyDenoiser::TinyDenoiser(int image_channels, TinyDenoiserConfig cfg, const NoiseSchedule& sched)
    : image_channels_(image_channels), cfg_(cfg), sched_(sched) {
    if (image_channels < 1) throw ParameterError("TinyDenoiser: need at least one channel");
    if (cfg.cond_dim < 1 || cfg.hidden < 1) throw ConfigError("TinyDenoiser: bad config");
    nn::ConvSpec c1 = tiny_conv1(image_channels_, cfg_.hidden);
    nn::ConvSpec c2 = tiny_conv2(image_channels_, cfg_.hidden);
    params_.assign(size_t(cfg_.cond_dim + c1.param_count() + c2.param_count()), 0.0);

    Rng rng(seed_split(cfg_.seed, "tiny-denoiser-init"));
    auto fan_in_fill = [&](double* w, int count, int fan_in) {
        double bound = 1.0 / std::sqrt(double(fan_in));
        for (int i = 0; i < count; ++i) w[i] = rng.uniform(-bound, bound);
    };
    double* p = params_.data();
    fan_in_fill(p, cfg_.cond_dim, cfg_.cond_dim);
    p += cfg_.cond_dim;
    fan_in_fill(p, c1.out_ch * c1.in_ch * 9, c1.in_ch * 9); // biases stay zero
    p += c1.param_count();
    fan_in_fill(p, c2.out_ch * c2.in_ch * 9, c2.in_ch * 9);
}

namespace {

// Builds the (C+3)-channel input: image, sqrt(abar) plane, sqrt(1-abar)
// plane, conditioning plane.
LatentImage tiny_input(const LatentImage& x, double alpha_bar, const PromptEmbedding* cond,
                       const double* w_cond, int cond_dim) {
    LatentImage in(x.channels + 3, x.height, x.width);
    std::copy(x.data.begin(), x.data.end(), in.data.begin());
    double sa = std::sqrt(alpha_bar), sn = std::sqrt(1.0 - alpha_bar);
    double cval = 0.0;
    if (cond != nullptr) {
        if (cond->dim() != cond_dim)
            throw ParameterError("TinyDenoiser: conditioning dim " + std::to_string(cond->dim()) +
                                 ", model expects " + std::to_string(cond_dim));
        for (int i = 0; i < cond_dim; ++i) cval += w_cond[i] * cond->values[size_t(i)];
    }
    size_t plane = size_t(x.height) * size_t(x.width);
    size_t base = x.data.size();
    std::fill_n(in.data.begin() + base, plane, sa);
    std::fill_n(in.data.begin() + base + plane, plane, sn);
    std::fill_n(in.data.begin() + base + 2 * plane, plane, cval);
    return in;
}

} // namespace

LatentImage TinyDenoiser::predict(const LatentImage& x_t, int step,
                                  const PromptEmbedding* cond) const {
    nn::ConvSpec c1 = tiny_conv1(image_channels_, cfg_.hidden);
    nn::ConvSpec c2 = tiny_conv2(image_channels_, cfg_.hidden);
    const double* w_cond = params_.data();
    const double* w1 = w_cond + cfg_.cond_dim;
    const double* w2 = w1 + c1.param_count();

    LatentImage in = tiny_input(x_t, sched_.alpha_at(step), cond, w_cond, cfg_.cond_dim);
    LatentImage h = nn::conv2d_forward(in, w1, c1);
    LatentImage ha = nn::act_forward(h, nn::Act::silu);
    return nn::conv2d_forward(ha, w2, c2);
}

double TinyDenoiser::loss_and_grad(const LatentImage& x0, const PromptEmbedding* cond, int step,
                                   const LatentImage& eps, std::vector<double>* grad) const {
    require_same_shape(x0, eps, "TinyDenoiser::loss_and_grad");
    double abar = sched_.alpha_at(step);
    LatentImage x_t = lincomb(x0, std::sqrt(abar), eps, std::sqrt(1.0 - abar));

    nn::ConvSpec c1 = tiny_conv1(image_channels_, cfg_.hidden);
    nn::ConvSpec c2 = tiny_conv2(image_channels_, cfg_.hidden);
    const double* w_cond = params_.data();
    const double* w1 = w_cond + cfg_.cond_dim;
    const double* w2 = w1 + c1.param_count();

    LatentImage in = tiny_input(x_t, abar, cond, w_cond, cfg_.cond_dim);
    LatentImage h = nn::conv2d_forward(in, w1, c1);
    LatentImage ha = nn::act_forward(h, nn::Act::silu);
    LatentImage pred = nn::conv2d_forward(ha, w2, c2);

    double n = double(pred.size());
    double loss = 0.0;
    LatentImage dpred = pred;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        double d = pred.data[i] - eps.data[i];
        loss += d * d;
        dpred.data[i] = 2.0 * d / n;
    }
    loss /= n;

    if (grad != nullptr) {
        if (grad->size() != params_.size())
            throw ParameterError("TinyDenoiser::loss_and_grad: grad buffer size mismatch");
        double* g_cond = grad->data();
        double* g1 = g_cond + cfg_.cond_dim;
        double* g2 = g1 + c1.param_count();
        LatentImage dha = nn::conv2d_backward(ha, dpred, w2, g2, c2);
        LatentImage dh = nn::act_backward(h, dha, nn::Act::silu);
        LatentImage din = nn::conv2d_backward(in, dh, w1, g1, c1);
        if (cond != nullptr) {
            // conditioning plane: d(cval) = sum of its plane grads
            size_t plane = size_t(x0.height) * size_t(x0.width);
            size_t base = x0.data.size() + 2 * plane;
            double dcval = 0.0;
            for (size_t i = 0; i < plane; ++i) dcval += din.data[base + i];
            for (int i = 0; i < cfg_.cond_dim; ++i)
                g_cond[i] += dcval * cond->values[size_t(i)];
        }
    }
    return loss;
}

std::vector<double> train_tiny_denoiser(TinyDenoiser& model,
                                        const std::vector<std::pair<LatentImage, std::string>>& data,
                                        const NoiseSchedule& sched) {
    if (data.empty()) throw ParameterError("train_tiny_denoiser: empty dataset");
    const TinyDenoiserConfig& cfg = model.config();
    EmbeddingTable table{cfg.cond_dim, seed_split(cfg.seed, "tiny-denoiser-embed")};
    std::vector<PromptEmbedding> conds;
    conds.reserve(data.size());
    for (const auto& [img, cls] : data) {
        require_finite(img, "train_tiny_denoiser input");
        conds.push_back(PromptEmbedding{table.vector_for(cls)});
    }

    Rng rng(seed_split(cfg.seed, "tiny-denoiser-train"));
    std::vector<double> history;
    history.reserve(size_t(cfg.steps));
    std::vector<double> grad(model.params().size(), 0.0);
    for (int step = 0; step < cfg.steps; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            size_t i = size_t(rng.uniform_int(int(data.size())));
            int t = 1 + rng.uniform_int(sched.total_steps());
            const LatentImage& x0 = data[i].first;
            LatentImage eps(x0.channels, x0.height, x0.width);
            for (double& v : eps.data) v = rng.normal();
            loss += model.loss_and_grad(x0, &conds[i], t, eps, &grad);
        }
        loss /= double(cfg.batch);
        if (!std::isfinite(loss))
            throw TrainingError("train_tiny_denoiser: loss became non-finite at step " +
                                std::to_string(step) + " (lr=" + std::to_string(cfg.lr) + ")");
        double scale = cfg.lr / double(cfg.batch);
        for (size_t i = 0; i < grad.size(); ++i) model.params()[i] -= scale * grad[i];
        history.push_back(loss);
    }
    return history;
}

} // namespace madiff
