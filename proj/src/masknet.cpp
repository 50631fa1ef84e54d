#include "madiff/masknet.hpp"

#include "madiff/errors.hpp"
#include "madiff/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace madiff {

using nn::Act;
using nn::ConvSpec;

MaskNetConfig MaskNetConfig::linear_probe() {
    MaskNetConfig cfg;
    cfg.activation = Act::identity;
    cfg.sigmoid_head = false;
    cfg.use_attention = false;
    return cfg;
}

// Parameter block offsets, in order: enc1, enc2, [Wq, Wk, Wv], dec1, dec2, head.
struct MaskNet::Layout {
    ConvSpec enc1, enc2, dec1, dec2, head;
    int wq = 0, wk = 0, wv = 0; // element counts (0 when attention is off)
    int off_enc1 = 0, off_enc2 = 0, off_wq = 0, off_wk = 0, off_wv = 0;
    int off_dec1 = 0, off_dec2 = 0, off_head = 0;
    int total = 0;
};

MaskNet::Layout MaskNet::layout() const {
    const int B = cfg_.base_channels;
    const int C2 = 2 * B;
    Layout l;
    l.enc1 = {1 + cfg_.part_channels, B, 3};
    l.enc2 = {B, C2, 3};
    l.dec1 = {C2 + C2, B, 3};
    l.dec2 = {B + B, B, 3};
    l.head = {B, 1, 1};
    if (cfg_.use_attention) {
        l.wq = cfg_.attn_dim * C2;
        l.wk = cfg_.attn_dim * cfg_.embed_dim;
        l.wv = C2 * cfg_.embed_dim;
    }
    int off = 0;
    l.off_enc1 = off; off += l.enc1.param_count();
    l.off_enc2 = off; off += l.enc2.param_count();
    l.off_wq = off; off += l.wq;
    l.off_wk = off; off += l.wk;
    l.off_wv = off; off += l.wv;
    l.off_dec1 = off; off += l.dec1.param_count();
    l.off_dec2 = off; off += l.dec2.param_count();
    l.off_head = off; off += l.head.param_count();
    l.total = off;
    return l;
}

MaskNet::MaskNet(MaskNetConfig cfg) : cfg_(cfg) {
    if (cfg.base_channels < 1 || cfg.part_channels < 0 || cfg.embed_dim < 1 || cfg.attn_dim < 1)
        throw ConfigError("MaskNet: bad config");
    Layout l = layout();
    params_.assign(size_t(l.total), 0.0);

    Rng rng(seed_split(cfg_.init_seed, "masknet-init"));
    auto fill = [&](int off, int count, int fan_in) {
        double bound = 1.0 / std::sqrt(double(fan_in));
        for (int i = 0; i < count; ++i) params_[size_t(off + i)] = rng.uniform(-bound, bound);
    };
    auto fill_conv = [&](int off, const ConvSpec& s) {
        // weights get fan-in scaling, biases stay zero
        fill(off, s.out_ch * s.in_ch * s.k * s.k, s.in_ch * s.k * s.k);
    };
    fill_conv(l.off_enc1, l.enc1);
    fill_conv(l.off_enc2, l.enc2);
    if (cfg_.use_attention) {
        fill(l.off_wq, l.wq, 2 * cfg_.base_channels);
        fill(l.off_wk, l.wk, cfg_.embed_dim);
        fill(l.off_wv, l.wv, cfg_.embed_dim);
    }
    fill_conv(l.off_dec1, l.dec1);
    fill_conv(l.off_dec2, l.dec2);
    fill_conv(l.off_head, l.head);
}

struct MaskNet::Workspace {
    LatentImage in;
    LatentImage z1, a1, p1;
    LatentImage z2, a2, p2;
    // attention intermediates (valid when use_attention)
    std::vector<double> q;     // attn_dim per position
    std::vector<double> s;     // logits per position
    std::vector<double> alpha; // softmax weights
    std::vector<double> k, v;
    LatentImage mid;
    LatentImage up1, cat1, z3, u1;
    LatentImage up2, cat2, z4, u2;
    LatentImage z5;
    EditMask out;
};

namespace {

LatentImage assemble_input(const MaskInput& input, int part_channels) {
    const EditMask& fg = input.foreground;
    const LatentImage& parts = input.parts;
    if (parts.channels != part_channels)
        throw ParameterError("MaskNet: expected " + std::to_string(part_channels) +
                             " part channels, got " + std::to_string(parts.channels));
    if (parts.height != fg.height || parts.width != fg.width)
        throw ParameterError("MaskNet: foreground/parts resolution mismatch");
    if (fg.height % 4 != 0 || fg.width % 4 != 0)
        throw ParameterError("MaskNet: input size must be divisible by 4");
    LatentImage in(1 + part_channels, fg.height, fg.width);
    std::copy(fg.data.begin(), fg.data.end(), in.data.begin());
    std::copy(parts.data.begin(), parts.data.end(), in.data.begin() + fg.data.size());
    return in;
}

} // namespace

EditMask MaskNet::forward(const MaskInput& input, Workspace* ws) const {
    if (input.embedding.dim() != cfg_.embed_dim)
        throw ParameterError("MaskNet: embedding dim " + std::to_string(input.embedding.dim()) +
                             ", expected " + std::to_string(cfg_.embed_dim));
    Layout l = layout();
    const double* P = params_.data();

    Workspace local;
    Workspace& w = ws ? *ws : local;
    w.in = assemble_input(input, cfg_.part_channels);

    w.z1 = nn::conv2d_forward(w.in, P + l.off_enc1, l.enc1);
    w.a1 = nn::act_forward(w.z1, cfg_.activation);
    w.p1 = nn::avgpool2_forward(w.a1);
    w.z2 = nn::conv2d_forward(w.p1, P + l.off_enc2, l.enc2);
    w.a2 = nn::act_forward(w.z2, cfg_.activation);
    w.p2 = nn::avgpool2_forward(w.a2);

    if (cfg_.use_attention) {
        const int C2 = 2 * cfg_.base_channels;
        const int A = cfg_.attn_dim;
        const int D = cfg_.embed_dim;
        const int npos = w.p2.height * w.p2.width;
        const double* wq = P + l.off_wq;
        const double* wk = P + l.off_wk;
        const double* wv = P + l.off_wv;
        const double inv_sqrt_a = 1.0 / std::sqrt(double(A));

        w.k.assign(size_t(A), 0.0);
        w.v.assign(size_t(C2), 0.0);
        for (int i = 0; i < A; ++i)
            for (int j = 0; j < D; ++j)
                w.k[size_t(i)] += wk[i * D + j] * input.embedding.values[size_t(j)];
        for (int i = 0; i < C2; ++i)
            for (int j = 0; j < D; ++j)
                w.v[size_t(i)] += wv[i * D + j] * input.embedding.values[size_t(j)];

        w.q.assign(size_t(A) * size_t(npos), 0.0);
        w.s.assign(size_t(npos), 0.0);
        for (int p = 0; p < npos; ++p) {
            double dot = 0.0;
            for (int i = 0; i < A; ++i) {
                double qi = 0.0;
                for (int c = 0; c < C2; ++c)
                    qi += wq[i * C2 + c] * w.p2.data[size_t(c) * size_t(npos) + size_t(p)];
                w.q[size_t(i) * size_t(npos) + size_t(p)] = qi;
                dot += qi * w.k[size_t(i)];
            }
            w.s[size_t(p)] = dot * inv_sqrt_a;
        }
        // softmax over positions, scaled to unit mean (not unit sum) so the
        // injected prompt signal and its gradients do not shrink with the
        // number of bottleneck positions
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : w.s) mx = std::max(mx, v);
        double denom = 0.0;
        w.alpha.assign(size_t(npos), 0.0);
        for (int p = 0; p < npos; ++p) {
            w.alpha[size_t(p)] = std::exp(w.s[size_t(p)] - mx);
            denom += w.alpha[size_t(p)];
        }
        for (double& av : w.alpha) av *= double(npos) / denom;

        w.mid = w.p2;
        for (int c = 0; c < C2; ++c)
            for (int p = 0; p < npos; ++p)
                w.mid.data[size_t(c) * size_t(npos) + size_t(p)] +=
                    w.alpha[size_t(p)] * w.v[size_t(c)];
    } else {
        w.mid = w.p2;
    }

    w.up1 = nn::upsample2_forward(w.mid);
    w.cat1 = nn::concat_channels(w.up1, w.a2);
    w.z3 = nn::conv2d_forward(w.cat1, P + l.off_dec1, l.dec1);
    w.u1 = nn::act_forward(w.z3, cfg_.activation);
    w.up2 = nn::upsample2_forward(w.u1);
    w.cat2 = nn::concat_channels(w.up2, w.a1);
    w.z4 = nn::conv2d_forward(w.cat2, P + l.off_dec2, l.dec2);
    w.u2 = nn::act_forward(w.z4, cfg_.activation);
    w.z5 = nn::conv2d_forward(w.u2, P + l.off_head, l.head);

    w.out = EditMask(w.z5.height, w.z5.width);
    for (size_t i = 0; i < w.out.data.size(); ++i)
        w.out.data[i] = cfg_.sigmoid_head ? nn::sigmoid(w.z5.data[i]) : w.z5.data[i];
    return w.out;
}

EditMask MaskNet::predict(const MaskInput& input) const { return forward(input, nullptr); }

double MaskNet::loss(const MaskInput& input, const EditMask& truth) const {
    EditMask pred = forward(input, nullptr);
    if (pred.height != truth.height || pred.width != truth.width)
        throw ParameterError("MaskNet::loss: truth resolution mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        double d = pred.data[i] - truth.data[i];
        acc += d * d;
    }
    return acc / double(pred.data.size());
}

double MaskNet::loss_and_grad(const MaskInput& input, const EditMask& truth,
                              std::vector<double>* grad) const {
    if (grad == nullptr || grad->size() != params_.size())
        throw ParameterError("MaskNet::loss_and_grad: bad gradient buffer");
    Layout l = layout();
    const double* P = params_.data();
    double* G = grad->data();

    Workspace w;
    forward(input, &w);
    if (w.out.height != truth.height || w.out.width != truth.width)
        throw ParameterError("MaskNet::loss_and_grad: truth resolution mismatch");

    const double n = double(w.out.data.size());
    double loss = 0.0;
    LatentImage dz5(1, w.z5.height, w.z5.width);
    for (size_t i = 0; i < w.out.data.size(); ++i) {
        double d = w.out.data[i] - truth.data[i];
        loss += d * d;
        double g = 2.0 * d / n;
        if (cfg_.sigmoid_head) {
            double s = w.out.data[i];
            g *= s * (1.0 - s);
        }
        dz5.data[i] = g;
    }
    loss /= n;

    LatentImage du2 = nn::conv2d_backward(w.u2, dz5, P + l.off_head, G + l.off_head, l.head);
    LatentImage dz4 = nn::act_backward(w.z4, du2, cfg_.activation);
    LatentImage dcat2 = nn::conv2d_backward(w.cat2, dz4, P + l.off_dec2, G + l.off_dec2, l.dec2);
    LatentImage dup2, da1_skip;
    nn::split_channels_grad(dcat2, w.up2.channels, &dup2, &da1_skip);
    LatentImage du1 = nn::upsample2_backward(dup2);
    LatentImage dz3 = nn::act_backward(w.z3, du1, cfg_.activation);
    LatentImage dcat1 = nn::conv2d_backward(w.cat1, dz3, P + l.off_dec1, G + l.off_dec1, l.dec1);
    LatentImage dup1, da2_skip;
    nn::split_channels_grad(dcat1, w.up1.channels, &dup1, &da2_skip);
    LatentImage dmid = nn::upsample2_backward(dup1);

    LatentImage dp2;
    if (cfg_.use_attention) {
        const int C2 = 2 * cfg_.base_channels;
        const int A = cfg_.attn_dim;
        const int D = cfg_.embed_dim;
        const int npos = w.p2.height * w.p2.width;
        const double* wq = P + l.off_wq;
        double* gq = G + l.off_wq;
        double* gk = G + l.off_wk;
        double* gv = G + l.off_wv;
        const double inv_sqrt_a = 1.0 / std::sqrt(double(A));

        // out(:,p) = p2(:,p) + alpha(p) * v
        std::vector<double> dalpha(size_t(npos), 0.0);
        std::vector<double> dv(size_t(C2), 0.0);
        for (int p = 0; p < npos; ++p)
            for (int c = 0; c < C2; ++c) {
                double g = dmid.data[size_t(c) * size_t(npos) + size_t(p)];
                dalpha[size_t(p)] += g * w.v[size_t(c)];
                dv[size_t(c)] += g * w.alpha[size_t(p)];
            }
        double dot_adal = 0.0;
        for (int p = 0; p < npos; ++p) dot_adal += w.alpha[size_t(p)] * dalpha[size_t(p)];
        std::vector<double> ds(size_t(npos), 0.0);
        for (int p = 0; p < npos; ++p)
            ds[size_t(p)] = w.alpha[size_t(p)] * (dalpha[size_t(p)] - dot_adal);

        std::vector<double> dk(size_t(A), 0.0);
        dp2 = dmid; // residual path
        for (int p = 0; p < npos; ++p) {
            double dsp = ds[size_t(p)] * inv_sqrt_a;
            for (int i = 0; i < A; ++i) {
                double dqi = dsp * w.k[size_t(i)];
                dk[size_t(i)] += dsp * w.q[size_t(i) * size_t(npos) + size_t(p)];
                for (int c = 0; c < C2; ++c) {
                    gq[i * C2 + c] += dqi * w.p2.data[size_t(c) * size_t(npos) + size_t(p)];
                    dp2.data[size_t(c) * size_t(npos) + size_t(p)] += dqi * wq[i * C2 + c];
                }
            }
        }
        for (int i = 0; i < A; ++i)
            for (int j = 0; j < D; ++j)
                gk[i * D + j] += dk[size_t(i)] * input.embedding.values[size_t(j)];
        for (int i = 0; i < C2; ++i)
            for (int j = 0; j < D; ++j)
                gv[i * D + j] += dv[size_t(i)] * input.embedding.values[size_t(j)];
    } else {
        dp2 = dmid;
    }

    LatentImage da2_pool = nn::avgpool2_backward(dp2);
    LatentImage da2 = add(da2_pool, da2_skip);
    LatentImage dz2 = nn::act_backward(w.z2, da2, cfg_.activation);
    LatentImage dp1 = nn::conv2d_backward(w.p1, dz2, P + l.off_enc2, G + l.off_enc2, l.enc2);
    LatentImage da1_pool = nn::avgpool2_backward(dp1);
    LatentImage da1 = add(da1_pool, da1_skip);
    LatentImage dz1 = nn::act_backward(w.z1, da1, cfg_.activation);
    nn::conv2d_backward(w.in, dz1, P + l.off_enc1, G + l.off_enc1, l.enc1);
    return loss;
}

double mean_val_iou(const MaskNet& model, const std::vector<MaskExample>& examples,
                    double threshold) {
    if (examples.empty()) throw ParameterError("mean_val_iou: no examples");
    double acc = 0.0;
    for (const MaskExample& ex : examples) {
        EditMask pred = binarize(model.predict(ex.input), threshold);
        acc += mask_iou(pred, binarize(ex.truth, 0.5));
    }
    return acc / double(examples.size());
}

nlohmann::json TrainingReport::to_json() const {
    return {
        {"initial_loss", initial_loss},
        {"final_loss", final_loss},
        {"epoch_loss", epoch_loss},
        {"val_iou", val_iou},
        {"best_epoch", best_epoch},
        {"best_val_iou", best_val_iou},
        {"steps_run", steps_run},
        {"step_loss", step_loss},
    };
}

TrainingReport train_masknet(MaskNet& model, const std::vector<MaskExample>& train,
                             const std::vector<MaskExample>& val, const MaskTrainConfig& cfg) {
    if (train.empty()) throw ParameterError("train_masknet: empty training set");
    if (!(cfg.lr > 0.0) || cfg.batch < 1 || cfg.epochs < 0)
        throw ConfigError("train_masknet: bad lr/batch/epochs");

    TrainingReport report;
    const size_t probe = std::min<size_t>(train.size(), 64);
    auto probe_loss = [&] {
        double acc = 0.0;
        for (size_t i = 0; i < probe; ++i) acc += model.loss(train[i].input, train[i].truth);
        return acc / double(probe);
    };
    report.initial_loss = probe_loss();

    std::vector<double> best_params = model.params();
    std::vector<double> grad(model.params().size(), 0.0);
    std::vector<size_t> order(train.size());
    const int batch = std::min<int>(cfg.batch, int(train.size()));
    bool capped = false;

    for (int epoch = 0; epoch < cfg.epochs && !capped; ++epoch) {
        // seeded Fisher-Yates; self-contained so runs reproduce bit for bit
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(seed_split(cfg.seed, "masknet-shuffle", uint64_t(epoch)));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[size_t(shuffle_rng.uniform_int(int(i)))]);

        double epoch_acc = 0.0;
        int epoch_batches = 0;
        for (size_t start = 0; start + size_t(batch) <= order.size(); start += size_t(batch)) {
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (int b = 0; b < batch; ++b) {
                const MaskExample& ex = train[order[start + size_t(b)]];
                batch_loss += model.loss_and_grad(ex.input, ex.truth, &grad);
            }
            batch_loss /= double(batch);
            if (!std::isfinite(batch_loss))
                throw TrainingError("train_masknet: non-finite loss at step " +
                                    std::to_string(report.steps_run) +
                                    " (epoch " + std::to_string(epoch) + ")");
            double scale = cfg.lr / double(batch);
            for (size_t i = 0; i < grad.size(); ++i) model.params()[i] -= scale * grad[i];

            report.step_loss.push_back(batch_loss);
            epoch_acc += batch_loss;
            ++epoch_batches;
            ++report.steps_run;
            if (cfg.max_steps > 0 && report.steps_run >= cfg.max_steps) {
                capped = true;
                break;
            }
        }
        if (epoch_batches > 0) report.epoch_loss.push_back(epoch_acc / double(epoch_batches));

        if (!val.empty()) {
            double iou = mean_val_iou(model, val, cfg.binarize_threshold);
            report.val_iou.push_back(iou);
            if (iou > report.best_val_iou || report.best_epoch < 0) {
                report.best_val_iou = iou;
                report.best_epoch = epoch;
                best_params = model.params();
            }
        }
    }

    report.final_loss = probe_loss();
    if (!val.empty()) model.params() = best_params;
    return report;
}

GradCheckResult gradient_check(const MaskNet& model, const MaskExample& example, double h,
                               int max_params, uint64_t seed) {
    if (!(h > 0.0)) throw ParameterError("gradient_check: h must be positive");
    MaskNet probe = model; // own the parameters we perturb
    std::vector<double> grad(probe.params().size(), 0.0);
    probe.loss_and_grad(example.input, example.truth, &grad);

    // pick a random parameter subset (partial Fisher-Yates)
    const int total = probe.param_count();
    int count = (max_params <= 0 || max_params >= total) ? total : max_params;
    std::vector<int> idx(size_t(total), 0);
    for (int i = 0; i < total; ++i) idx[size_t(i)] = i;
    Rng rng(seed_split(seed, "gradient-check"));
    for (int i = 0; i < count; ++i)
        std::swap(idx[size_t(i)], idx[size_t(i + rng.uniform_int(total - i))]);

    GradCheckResult result;
    result.checked = count;
    for (int i = 0; i < count; ++i) {
        int p = idx[size_t(i)];
        double saved = probe.params()[size_t(p)];
        probe.params()[size_t(p)] = saved + h;
        double up = probe.loss(example.input, example.truth);
        probe.params()[size_t(p)] = saved - h;
        double down = probe.loss(example.input, example.truth);
        probe.params()[size_t(p)] = saved;
        double numeric = (up - down) / (2.0 * h);
        double analytic = grad[size_t(p)];
        double denom = std::max(std::abs(numeric) + std::abs(analytic), 1e-6);
        result.max_rel_error = std::max(result.max_rel_error,
                                        std::abs(numeric - analytic) / denom);
    }
    return result;
}

// ---- checkpoint io ----

namespace {

constexpr char kMagic[8] = {'M', 'D', 'F', 'C', 'K', 'P', 'T', '1'};

nlohmann::json config_to_json(const MaskNetConfig& cfg) {
    const char* act = cfg.activation == Act::silu       ? "silu"
                      : cfg.activation == Act::identity ? "identity"
                                                        : "sigmoid";
    return {
        {"base_channels", cfg.base_channels}, {"part_channels", cfg.part_channels},
        {"embed_dim", cfg.embed_dim},         {"attn_dim", cfg.attn_dim},
        {"activation", act},                  {"sigmoid_head", cfg.sigmoid_head},
        {"use_attention", cfg.use_attention}, {"init_seed", cfg.init_seed},
    };
}

MaskNetConfig config_from_json(const nlohmann::json& j) {
    MaskNetConfig cfg;
    cfg.base_channels = j.at("base_channels").get<int>();
    cfg.part_channels = j.at("part_channels").get<int>();
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.attn_dim = j.at("attn_dim").get<int>();
    std::string act = j.at("activation").get<std::string>();
    if (act == "silu")
        cfg.activation = Act::silu;
    else if (act == "identity")
        cfg.activation = Act::identity;
    else if (act == "sigmoid")
        cfg.activation = Act::sigmoid;
    else
        throw FormatError("checkpoint: unknown activation '" + act + "'");
    cfg.sigmoid_head = j.at("sigmoid_head").get<bool>();
    cfg.use_attention = j.at("use_attention").get<bool>();
    cfg.init_seed = j.at("init_seed").get<uint64_t>();
    return cfg;
}

} // namespace

void save_masknet(const std::string& path, const MaskNet& model, const nlohmann::json& meta) {
    nlohmann::json header = {
        {"format", "masknet-checkpoint"},
        {"version", 1},
        {"config", config_to_json(model.config())},
        {"param_count", model.param_count()},
        {"meta", meta},
    };
    std::string hs = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    uint32_t len = uint32_t(hs.size());
    unsigned char lenb[4] = {
        (unsigned char)(len & 0xff), (unsigned char)((len >> 8) & 0xff),
        (unsigned char)((len >> 16) & 0xff), (unsigned char)((len >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(lenb), 4);
    out.write(hs.data(), std::streamsize(hs.size()));
    // parameters as raw float64; this build targets little-endian hosts
    out.write(reinterpret_cast<const char*>(model.params().data()),
              std::streamsize(model.params().size() * sizeof(double)));
    if (!out) throw IoError("short write on checkpoint: " + path);
}

MaskNet load_masknet(const std::string& path, nlohmann::json* meta_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("checkpoint: bad magic in " + path);
    unsigned char lenb[4];
    in.read(reinterpret_cast<char*>(lenb), 4);
    if (!in) throw FormatError("checkpoint: truncated header length in " + path);
    uint32_t len = uint32_t(lenb[0]) | uint32_t(lenb[1]) << 8 | uint32_t(lenb[2]) << 16 |
                   uint32_t(lenb[3]) << 24;
    if (len > (1u << 20)) throw FormatError("checkpoint: implausible header size in " + path);
    std::string hs(len, '\0');
    in.read(hs.data(), std::streamsize(len));
    if (!in) throw FormatError("checkpoint: truncated header in " + path);

    nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
    if (header.is_discarded()) throw FormatError("checkpoint: header is not valid JSON in " + path);
    MaskNetConfig cfg;
    int param_count = 0;
    try {
        if (header.at("format").get<std::string>() != "masknet-checkpoint")
            throw FormatError("checkpoint: wrong format field in " + path);
        cfg = config_from_json(header.at("config"));
        param_count = header.at("param_count").get<int>();
        if (meta_out != nullptr && header.contains("meta")) *meta_out = header.at("meta");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad header: ") + e.what());
    }

    MaskNet model(cfg);
    if (model.param_count() != param_count)
        throw FormatError("checkpoint: parameter count " + std::to_string(param_count) +
                          " does not match architecture (" + std::to_string(model.param_count()) +
                          ") in " + path);
    in.read(reinterpret_cast<char*>(model.params().data()),
            std::streamsize(model.params().size() * sizeof(double)));
    if (!in) throw FormatError("checkpoint: truncated parameter block in " + path);
    char extra;
    if (in.read(&extra, 1)) throw FormatError("checkpoint: trailing bytes in " + path);
    return model;
}

} // namespace madiff
