#pragma once

#include "madiff/datagen.hpp"
#include "madiff/editor.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace madiff::io {

nlohmann::json garment_spec_to_json(const GarmentSpec& spec);
GarmentSpec garment_spec_from_json(const nlohmann::json& j);

// On-disk dataset layout under one directory:
//   images/NNNNNN.png   source image (8-bit RGB)
//   masks/NNNNNN.png    truth mask (training) or editing region (eval)
//   parts/NNNNNN.png    body parts, palette indexed
//   display/NNNNNN.png  4x nearest-neighbor upscale for inspection
//   meta.jsonl          one JSON object per sample, training lines first
// Line order defines NNNNNN. Masks and meta roundtrip exactly; images are
// 8-bit quantized, so the loader re-renders samples from their specs.
void write_dataset(const std::string& dir, const std::vector<TrainTriple>& train,
                   const std::vector<EditTask>& eval_tasks);

struct Dataset {
    std::vector<TrainTriple> train;
    std::vector<EditTask> eval;
};

// Rebuilds the dataset from meta.jsonl, re-deriving images, masks, and
// prompt embeddings from the stored specs and captions. With `verify_files`
// the stored mask and part PNGs are read back and checked against the
// re-derived ones (FormatError on mismatch).
Dataset load_dataset(const std::string& dir, bool verify_files = false,
                     const ShapeVocabulary& vocab = default_shape_vocabulary(),
                     const EmbeddingTable& table = default_embedding_table());

// Persists one edit as a run directory. provenance.json is written before
// anything else; timings go to a separate timings.json so every other file
// is byte-stable across reruns. Layout:
//   provenance.json, x_out.png, mask.png, soft_mask.png, attention.png +
//   attention.json, x_s.png, x_s_no.png, x_s_re.png, result.json (optional
//   scores), timings.json
void write_run_dir(const std::string& dir, const EditResult& result,
                   const nlohmann::json* result_json = nullptr);

} // namespace madiff::io
