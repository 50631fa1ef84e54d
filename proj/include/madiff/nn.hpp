#pragma once

#include "madiff/latent.hpp"

namespace madiff::nn {

// Minimal layer kit for the hand-trained models in this project. Parameters
// live in flat double arrays owned by the model; each op reads weights from a
// raw pointer and its backward accumulates into a parallel gradient buffer.
// Everything is stride-1, zero-padded to keep spatial size.

enum class Act { identity, silu, sigmoid };

struct ConvSpec {
    int in_ch = 0;
    int out_ch = 0;
    int k = 3; // odd kernel size

    // weights [out][in][k][k] followed by bias [out]
    int param_count() const { return out_ch * in_ch * k * k + out_ch; }
};

LatentImage conv2d_forward(const LatentImage& x, const double* w, const ConvSpec& spec);

// Returns grad wrt x; accumulates parameter grads into dw (same layout as w).
LatentImage conv2d_backward(const LatentImage& x, const LatentImage& dout, const double* w,
                            double* dw, const ConvSpec& spec);

// 2x2 mean pooling; height/width must be even.
LatentImage avgpool2_forward(const LatentImage& x);
LatentImage avgpool2_backward(const LatentImage& dout);

// 2x nearest-neighbour upsampling.
LatentImage upsample2_forward(const LatentImage& x);
LatentImage upsample2_backward(const LatentImage& dout);

LatentImage act_forward(const LatentImage& x, Act a);
// x_pre is the activation input that was saved on the forward pass.
LatentImage act_backward(const LatentImage& x_pre, const LatentImage& dout, Act a);

double silu(double v);
double sigmoid(double v);

LatentImage concat_channels(const LatentImage& a, const LatentImage& b);
// Splits dout back into the two concat inputs (first ca channels -> da).
void split_channels_grad(const LatentImage& dout, int ca, LatentImage* da, LatentImage* db);

} // namespace madiff::nn
