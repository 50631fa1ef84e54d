#pragma once

#include "madiff/attention.hpp"
#include "madiff/latent.hpp"
#include "madiff/mask.hpp"

#include <string>
#include <vector>

namespace madiff::io {

// Whole-file text helpers. Both throw IoError on failure.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// 3-channel image in [-1, 1] to 8-bit RGB and back. Values are clamped and
// quantized on write, so a roundtrip is exact only up to 1/255 per channel.
void write_rgb_png(const LatentImage& img, const std::string& path);
LatentImage read_rgb_png(const std::string& path);

// Binary mask as 8-bit grayscale (0 or 255). Reading maps >= 128 to 1, so
// binary masks roundtrip exactly.
void write_mask_png(const EditMask& mask, const std::string& path);
EditMask read_mask_png(const std::string& path);

// Single-channel image in [0, 1] as 8-bit grayscale (for soft mask
// predictions); quantized like write_rgb_png.
void write_gray_png(const LatentImage& channel, const std::string& path);
LatentImage read_gray_png(const std::string& path);

// Attention map as 16-bit grayscale plus a JSON sidecar holding the value
// range, so arbitrary non-negative weights survive the quantization.
void write_attention_png(const AttentionMap& map, const std::string& png_path,
                         const std::string& json_path);
AttentionMap read_attention_png(const std::string& png_path, const std::string& json_path);

// Body-part masks as one palette-indexed PNG: index 0 is background, index
// 1 + k is part k. Parts must be disjoint and share one resolution.
void write_parts_png(const std::vector<EditMask>& parts, const std::string& path);
std::vector<EditMask> read_parts_png(const std::string& path, int expected_parts = -1);

} // namespace madiff::io
