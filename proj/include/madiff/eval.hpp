#pragma once

#include "madiff/datagen.hpp"
#include "madiff/editor.hpp"

#include "json.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace madiff {

// How well x_out realizes the requested change, in [0, 1]. The measure
// depends on the task type:
//   color          fraction of editing-region pixels within 0.25 (euclidean
//                  RGB) of the target color
//   detail         IoU, inside the editing region, between the pixels that
//                  took on the target color and the garment pixels of a
//                  fresh render of the target spec (1 when both are empty)
//   material       exp(-2 * L1) between neighbor-difference signatures of
//                  x_out and the target render, measured inside the region
//   comprehensive  mean of the color and detail scores
double alignment_score(const EditResult& result, const EditTask& task);

// How much of the image outside the editing region survived untouched:
// 1 - mean |x_out - input| / 2 over out-of-region pixels (1 if the region
// covers everything).
double preservation_score(const EditResult& result, const EditTask& task);

// Patch-statistics distance between two images of identical shape: for every
// 4x4 patch and channel, |d mean| + |d variance| + |d gradient magnitude|,
// averaged over patches and channels. 0 for identical images; symmetric.
double perceptual_distance(const LatentImage& a, const LatentImage& b);

// Outcome of one benchmark task. `seconds` is wall time for the edit and is
// excluded from reproducibility comparisons.
struct TaskScore {
    int task_id = 0;
    TaskType type = TaskType::color;
    double alignment = 0.0;
    double preservation = 0.0;
    double perceptual = 0.0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;

    nlohmann::json to_json(bool with_timings) const;
};

// Aggregate over a task list. Per-type and overall means cover the tasks
// that completed; `failures` counts the rest.
struct MetricReport {
    std::string name;
    EditConfig config;
    std::string config_digest;
    std::vector<TaskScore> tasks;
    int failures = 0;
    double mean_alignment = 0.0;
    double mean_preservation = 0.0;
    double mean_perceptual = 0.0;
    std::map<std::string, double> type_alignment;
    std::map<std::string, double> type_preservation;
    std::map<std::string, double> type_perceptual;

    nlohmann::json to_json(bool with_timings) const;
    std::string to_markdown() const;
};

// Hex digest of the parts of the config that affect results (timings and
// output paths do not enter).
std::string config_digest(const EditConfig& cfg);

// Runs every task through the editing pipeline and scores it. Tasks are
// processed by up to `jobs` worker threads; results keep task order and are
// identical for any job count. A task that throws is recorded as failed
// without aborting the rest. Each task edits with seed
// seed_split(cfg.seed, "task-seed", task.id) so repeats vary across tasks
// but reruns reproduce exactly.
MetricReport run_benchmark(const std::vector<EditTask>& tasks, const EditConfig& cfg,
                           const MaskNet* masknet, int jobs = 1,
                           const std::string& name = "benchmark");

// The four mask-source / attention-processor combinations, evaluated on the
// same tasks: base (threshold mask, processor off), masknet_only, ap_only
// (threshold mask, processor on), full.
struct AblationReport {
    std::vector<MetricReport> variants;

    nlohmann::json to_json(bool with_timings) const;
    std::string to_markdown() const;
    const MetricReport& variant(const std::string& name) const;
};

AblationReport run_ablation(const std::vector<EditTask>& tasks, const EditConfig& cfg,
                            const MaskNet* masknet, int jobs = 1);

// Mean attention map over each side of a partition of edit results. A side
// with no members yields an all-zero map and sets its `*_empty` flag.
struct AttentionStats {
    AttentionMap success_mean;
    AttentionMap failure_mean;
    int success_count = 0;
    int failure_count = 0;
    bool success_empty = false;
    bool failure_empty = false;
};

AttentionStats attention_stats(const std::vector<const AttentionMap*>& maps,
                               const std::function<bool(size_t)>& is_success);

} // namespace madiff
