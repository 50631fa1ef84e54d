#pragma once

#include <cstddef>
#include <vector>

namespace madiff {

// Dense C x H x W grid of doubles, channel-major. This is the working image
// format everywhere: renders and edit outputs keep values in [-1, 1], while
// intermediate diffusion states range freely.
struct LatentImage {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    LatentImage() = default;
    LatentImage(int c, int h, int w, double fill = 0.0);

    double& at(int c, int y, int x) { return data[size_t((c * height + y) * width + x)]; }
    double at(int c, int y, int x) const { return data[size_t((c * height + y) * width + x)]; }

    size_t size() const { return data.size(); }
    bool same_shape(const LatentImage& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// Elementwise helpers; shapes must match.
LatentImage add(const LatentImage& a, const LatentImage& b);
LatentImage sub(const LatentImage& a, const LatentImage& b);
LatentImage scaled(const LatentImage& a, double s);
// a*sa + b*sb
LatentImage lincomb(const LatentImage& a, double sa, const LatentImage& b, double sb);

double l2_norm(const LatentImage& a);
double squared_distance(const LatentImage& a, const LatentImage& b);
// ||a - b|| / ||b||, with a tiny floor on the denominator
double rel_l2_error(const LatentImage& a, const LatentImage& b);

// Throws ParameterError if any entry is NaN or infinite.
void require_finite(const LatentImage& a, const char* what);
void require_same_shape(const LatentImage& a, const LatentImage& b, const char* what);

} // namespace madiff
