#include "madiff/latent.hpp"

#include "madiff/errors.hpp"

#include <cmath>
#include <string>

namespace madiff {

LatentImage::LatentImage(int c, int h, int w, double fill)
    : channels(c), height(h), width(w) {
    if (c < 0 || h < 0 || w < 0)
        throw ParameterError("LatentImage: negative dimension");
    data.assign(size_t(c) * size_t(h) * size_t(w), fill);
}

void require_same_shape(const LatentImage& a, const LatentImage& b, const char* what) {
    if (!a.same_shape(b))
        throw ParameterError(std::string(what) + ": shape mismatch (" +
                             std::to_string(a.channels) + "x" + std::to_string(a.height) + "x" +
                             std::to_string(a.width) + " vs " + std::to_string(b.channels) + "x" +
                             std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
}

LatentImage add(const LatentImage& a, const LatentImage& b) {
    require_same_shape(a, b, "add");
    LatentImage out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

LatentImage sub(const LatentImage& a, const LatentImage& b) {
    require_same_shape(a, b, "sub");
    LatentImage out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

LatentImage scaled(const LatentImage& a, double s) {
    LatentImage out = a;
    for (double& v : out.data) v *= s;
    return out;
}

LatentImage lincomb(const LatentImage& a, double sa, const LatentImage& b, double sb) {
    require_same_shape(a, b, "lincomb");
    LatentImage out = a;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = sa * a.data[i] + sb * b.data[i];
    return out;
}

double l2_norm(const LatentImage& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double squared_distance(const LatentImage& a, const LatentImage& b) {
    require_same_shape(a, b, "squared_distance");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s;
}

double rel_l2_error(const LatentImage& a, const LatentImage& b) {
    double denom = l2_norm(b);
    if (denom < 1e-300) denom = 1e-300;
    return std::sqrt(squared_distance(a, b)) / denom;
}

void require_finite(const LatentImage& a, const char* what) {
    for (double v : a.data)
        if (!std::isfinite(v))
            throw ParameterError(std::string(what) + ": non-finite value");
}

} // namespace madiff
