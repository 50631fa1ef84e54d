#include "madiff/nn.hpp"

#include "madiff/errors.hpp"

#include <algorithm>
#include <cmath>

namespace madiff::nn {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
double silu(double v) { return v * sigmoid(v); }

LatentImage conv2d_forward(const LatentImage& x, const double* w, const ConvSpec& spec) {
    if (x.channels != spec.in_ch) throw ParameterError("conv2d_forward: channel mismatch");
    if (spec.k % 2 == 0) throw ParameterError("conv2d_forward: kernel size must be odd");
    const int H = x.height, W = x.width, K = spec.k, P = K / 2;
    const double* bias = w + spec.out_ch * spec.in_ch * K * K;
    LatentImage out(spec.out_ch, H, W);
    for (int oc = 0; oc < spec.out_ch; ++oc) {
        for (int y = 0; y < H; ++y) {
            for (int xx = 0; xx < W; ++xx) {
                double acc = bias[oc];
                for (int ic = 0; ic < spec.in_ch; ++ic) {
                    const double* wk = w + ((oc * spec.in_ch + ic) * K) * K;
                    for (int ky = 0; ky < K; ++ky) {
                        int sy = y + ky - P;
                        if (sy < 0 || sy >= H) continue;
                        for (int kx = 0; kx < K; ++kx) {
                            int sx = xx + kx - P;
                            if (sx < 0 || sx >= W) continue;
                            acc += wk[ky * K + kx] * x.at(ic, sy, sx);
                        }
                    }
                }
                out.at(oc, y, xx) = acc;
            }
        }
    }
    return out;
}

LatentImage conv2d_backward(const LatentImage& x, const LatentImage& dout, const double* w,
                            double* dw, const ConvSpec& spec) {
    const int H = x.height, W = x.width, K = spec.k, P = K / 2;
    double* dbias = dw + spec.out_ch * spec.in_ch * K * K;
    LatentImage dx(x.channels, H, W);
    for (int oc = 0; oc < spec.out_ch; ++oc) {
        for (int y = 0; y < H; ++y) {
            for (int xx = 0; xx < W; ++xx) {
                double g = dout.at(oc, y, xx);
                if (g == 0.0) continue;
                dbias[oc] += g;
                for (int ic = 0; ic < spec.in_ch; ++ic) {
                    const double* wk = w + ((oc * spec.in_ch + ic) * K) * K;
                    double* dwk = dw + ((oc * spec.in_ch + ic) * K) * K;
                    for (int ky = 0; ky < K; ++ky) {
                        int sy = y + ky - P;
                        if (sy < 0 || sy >= H) continue;
                        for (int kx = 0; kx < K; ++kx) {
                            int sx = xx + kx - P;
                            if (sx < 0 || sx >= W) continue;
                            dwk[ky * K + kx] += g * x.at(ic, sy, sx);
                            dx.at(ic, sy, sx) += g * wk[ky * K + kx];
                        }
                    }
                }
            }
        }
    }
    return dx;
}

LatentImage avgpool2_forward(const LatentImage& x) {
    if (x.height % 2 != 0 || x.width % 2 != 0)
        throw ParameterError("avgpool2_forward: odd spatial size");
    LatentImage out(x.channels, x.height / 2, x.width / 2);
    for (int c = 0; c < x.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int xx = 0; xx < out.width; ++xx)
                out.at(c, y, xx) = 0.25 * (x.at(c, 2 * y, 2 * xx) + x.at(c, 2 * y, 2 * xx + 1) +
                                           x.at(c, 2 * y + 1, 2 * xx) +
                                           x.at(c, 2 * y + 1, 2 * xx + 1));
    return out;
}

LatentImage avgpool2_backward(const LatentImage& dout) {
    LatentImage dx(dout.channels, dout.height * 2, dout.width * 2);
    for (int c = 0; c < dout.channels; ++c)
        for (int y = 0; y < dout.height; ++y)
            for (int xx = 0; xx < dout.width; ++xx) {
                double g = 0.25 * dout.at(c, y, xx);
                dx.at(c, 2 * y, 2 * xx) = g;
                dx.at(c, 2 * y, 2 * xx + 1) = g;
                dx.at(c, 2 * y + 1, 2 * xx) = g;
                dx.at(c, 2 * y + 1, 2 * xx + 1) = g;
            }
    return dx;
}

LatentImage upsample2_forward(const LatentImage& x) {
    LatentImage out(x.channels, x.height * 2, x.width * 2);
    for (int c = 0; c < x.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int xx = 0; xx < out.width; ++xx)
                out.at(c, y, xx) = x.at(c, y / 2, xx / 2);
    return out;
}

LatentImage upsample2_backward(const LatentImage& dout) {
    if (dout.height % 2 != 0 || dout.width % 2 != 0)
        throw ParameterError("upsample2_backward: odd spatial size");
    LatentImage dx(dout.channels, dout.height / 2, dout.width / 2);
    for (int c = 0; c < dout.channels; ++c)
        for (int y = 0; y < dout.height; ++y)
            for (int xx = 0; xx < dout.width; ++xx)
                dx.at(c, y / 2, xx / 2) += dout.at(c, y, xx);
    return dx;
}

LatentImage act_forward(const LatentImage& x, Act a) {
    if (a == Act::identity) return x;
    LatentImage out = x;
    for (double& v : out.data) v = (a == Act::silu) ? silu(v) : sigmoid(v);
    return out;
}

LatentImage act_backward(const LatentImage& x_pre, const LatentImage& dout, Act a) {
    if (a == Act::identity) return dout;
    LatentImage dx = dout;
    for (size_t i = 0; i < dx.data.size(); ++i) {
        double v = x_pre.data[i];
        double s = sigmoid(v);
        double d = (a == Act::silu) ? s * (1.0 + v * (1.0 - s)) : s * (1.0 - s);
        dx.data[i] *= d;
    }
    return dx;
}

LatentImage concat_channels(const LatentImage& a, const LatentImage& b) {
    if (a.height != b.height || a.width != b.width)
        throw ParameterError("concat_channels: spatial mismatch");
    LatentImage out(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
}

void split_channels_grad(const LatentImage& dout, int ca, LatentImage* da, LatentImage* db) {
    *da = LatentImage(ca, dout.height, dout.width);
    *db = LatentImage(dout.channels - ca, dout.height, dout.width);
    std::copy(dout.data.begin(), dout.data.begin() + da->data.size(), da->data.begin());
    std::copy(dout.data.begin() + da->data.size(), dout.data.end(), db->data.begin());
}

} // namespace madiff::nn
