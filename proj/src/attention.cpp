#include "madiff/attention.hpp"

#include "madiff/errors.hpp"
#include "madiff/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace madiff {

bool EditMask::empty_region() const {
    for (double v : data)
        if (v > 0.0) return false;
    return true;
}

EditMask binarize(const EditMask& soft, double threshold) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw ParameterError("binarize: threshold must lie in (0, 1)");
    EditMask out = soft;
    for (double& v : out.data) v = (v >= threshold) ? 1.0 : 0.0;
    return out;
}

double mask_iou(const EditMask& a, const EditMask& b) {
    if (a.height != b.height || a.width != b.width)
        throw ParameterError("mask_iou: resolution mismatch");
    int inter = 0, uni = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        bool pa = a.data[i] > 0.0, pb = b.data[i] > 0.0;
        inter += (pa && pb) ? 1 : 0;
        uni += (pa || pb) ? 1 : 0;
    }
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

AttentionMap average_attention(const std::vector<AttentionMap>& maps) {
    if (maps.empty()) throw ParameterError("average_attention: no maps");
    const AttentionMap& first = maps.front();
    AttentionMap out(first.height, first.width);
    for (const AttentionMap& m : maps) {
        if (m.height != first.height || m.width != first.width)
            throw ParameterError("average_attention: mixed resolutions");
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += m.data[i];
    }
    double inv = 1.0 / double(maps.size());
    for (double& v : out.data) v *= inv;
    return out;
}

AttentionMap resize_attention(const AttentionMap& a, int out_h, int out_w) {
    if (a.height < 1 || a.width < 1) throw ParameterError("resize_attention: empty input");
    if (out_h < 1 || out_w < 1) throw ParameterError("resize_attention: empty output");
    AttentionMap out(out_h, out_w);
    double sy = double(a.height) / double(out_h);
    double sx = double(a.width) / double(out_w);
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = int(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, a.height - 1);
        int y1c = std::clamp(y0 + 1, 0, a.height - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = int(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, a.width - 1);
            int x1c = std::clamp(x0 + 1, 0, a.width - 1);
            out.at(y, x) = (1.0 - wy) * ((1.0 - wx) * a.at(y0c, x0c) + wx * a.at(y0c, x1c)) +
                           wy * ((1.0 - wx) * a.at(y1c, x0c) + wx * a.at(y1c, x1c));
        }
    }
    return out;
}

PixelSets build_pixel_sets(const AttentionMap& a, const EditMask& mask) {
    if (a.height != mask.height || a.width != mask.width)
        throw ParameterError("build_pixel_sets: map/mask resolution mismatch");
    PixelSets sets;
    int n = a.height * a.width;
    for (int i = 0; i < n; ++i)
        if (mask.data[size_t(i)] > 0.0) sets.edited.push_back(i);
    if (sets.edited.empty()) return sets; // nothing to edit, nothing preferred

    // top ceil(N/2) attention pixels over the whole map; stable sort keeps
    // row-major order among equal weights
    std::vector<PixelIndex> order(static_cast<size_t>(n), 0);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](PixelIndex l, PixelIndex r) {
        return a.data[size_t(l)] > a.data[size_t(r)];
    });
    size_t take = (sets.edited.size() + 1) / 2;
    sets.preferred.assign(order.begin(), order.begin() + take);
    sets.v_min = a.data[size_t(sets.preferred.back())];
    return sets;
}

LatentImage attention_process(const LatentImage& x_inv, const LatentImage& x_no,
                              const AttentionMap& a, const EditMask& mask, uint64_t seed) {
    require_same_shape(x_inv, x_no, "attention_process");
    if (a.height != x_inv.height || a.width != x_inv.width)
        throw ParameterError("attention_process: map resolution mismatch");
    PixelSets sets = build_pixel_sets(a, mask);

    LatentImage out = x_inv;
    Rng rng(seed);
    auto copy_pixel = [&](PixelIndex dst, PixelIndex src) {
        int dy = dst / out.width, dx = dst % out.width;
        int sy = src / out.width, sx = src % out.width;
        for (int c = 0; c < out.channels; ++c) out.at(c, dy, dx) = x_no.at(c, sy, sx);
    };
    for (size_t i = 0; i < sets.edited.size(); ++i) {
        PixelIndex src = (i < sets.preferred.size())
                             ? sets.preferred[i]
                             : sets.preferred[size_t(rng.uniform_int(int(sets.preferred.size())))];
        copy_pixel(sets.edited[i], src);
    }
    return out;
}

SyntheticAttention::SyntheticAttention(EditMask region, double noise_level, uint64_t seed)
    : region_(std::move(region)), noise_level_(noise_level), seed_(seed) {
    if (!(noise_level >= 0.0) || !(noise_level <= 1.0))
        throw ParameterError("SyntheticAttention: noise_level must lie in [0, 1]");
}

AttentionMap SyntheticAttention::emit(const LatentImage& /*x_t*/, int step,
                                      const PromptEmbedding* /*cond*/) {
    // keyed by the step index, not a call counter, so reruns are identical
    Rng rng(seed_split(seed_, "synthetic-attention", uint64_t(step)));
    AttentionMap map(region_.height, region_.width);
    for (size_t i = 0; i < map.data.size(); ++i) {
        double signal = region_.data[i] > 0.0 ? 1.0 : 0.0;
        double v = (1.0 - noise_level_) * signal;
        if (noise_level_ > 0.0) v += noise_level_ * rng.normal();
        map.data[i] = std::max(0.0, v);
    }
    return map;
}

} // namespace madiff
