#pragma once

#include <vector>

namespace madiff {

// H x W mask. Soft values live in [0, 1]; binarize() snaps them to {0, 1}.
struct EditMask {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    EditMask() = default;
    EditMask(int h, int w, double fill = 0.0)
        : height(h), width(w), data(size_t(h) * size_t(w), fill) {}

    double& at(int y, int x) { return data[size_t(y) * width + x]; }
    double at(int y, int x) const { return data[size_t(y) * width + x]; }

    bool empty_region() const; // true if no strictly positive entry
};

// Thresholds a soft mask: value >= threshold -> 1, else 0.
EditMask binarize(const EditMask& soft, double threshold);

// Intersection-over-union of two binary masks; masks of all zeros give 0.
double mask_iou(const EditMask& a, const EditMask& b);

} // namespace madiff
