#include "madiff/eval.hpp"

#include "madiff/errors.hpp"

#include "json.hpp"
#include "madiff/pipeline.hpp"
#include "madiff/rng.hpp"


#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace madiff {

namespace {

double color_distance(const LatentImage& img, int y, int x, const std::array<double, 3>& rgb) {
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) {
        double d = img.at(c, y, x) - rgb[size_t(c)];
        d2 += d * d;
    }
    return std::sqrt(d2);
}

constexpr double kColorTol = 0.25;

// Fraction of region pixels whose color lies within kColorTol of rgb.
double color_match_fraction(const LatentImage& img, const EditMask& region,
                            const std::array<double, 3>& rgb) {
    int total = 0;
    int hit = 0;
    for (int y = 0; y < region.height; ++y) {
        for (int x = 0; x < region.width; ++x) {
            if (region.at(y, x) == 0) continue;
            ++total;
            if (color_distance(img, y, x, rgb) <= kColorTol) ++hit;
        }
    }
    if (total == 0) return 1.0;
    return double(hit) / double(total);
}

// IoU between the in-region pixels of x_out that took on the target color
// and the in-region garment pixels of the target render. Both empty counts
// as a perfect match (a correct sleeve removal leaves nothing behind).
double shape_match(const LatentImage& x_out, const EditMask& region, const EditMask& target_cloth,
                   const std::array<double, 3>& rgb) {
    int inter = 0;
    int uni = 0;
    for (int y = 0; y < region.height; ++y) {
        for (int x = 0; x < region.width; ++x) {
            if (region.at(y, x) == 0) continue;
            bool recovered = color_distance(x_out, y, x, rgb) <= kColorTol;
            bool expected = target_cloth.at(y, x) != 0;
            if (recovered && expected) ++inter;
            if (recovered || expected) ++uni;
        }
    }
    if (uni == 0) return 1.0;
    return double(inter) / double(uni);
}

// Mean absolute channel difference between vertically and horizontally
// adjacent pixel pairs that both lie in the region. Stripes and dots leave a
// distinctive footprint here while staying robust to small color shifts.
std::array<double, 2> texture_signature(const LatentImage& img, const EditMask& region) {
    double vsum = 0.0;
    double hsum = 0.0;
    int vcount = 0;
    int hcount = 0;
    for (int y = 0; y < region.height; ++y) {
        for (int x = 0; x < region.width; ++x) {
            if (region.at(y, x) == 0) continue;
            if (y + 1 < region.height && region.at(y + 1, x) != 0) {
                double d = 0.0;
                for (int c = 0; c < img.channels; ++c)
                    d += std::abs(img.at(c, y + 1, x) - img.at(c, y, x));
                vsum += d / double(img.channels);
                ++vcount;
            }
            if (x + 1 < region.width && region.at(y, x + 1) != 0) {
                double d = 0.0;
                for (int c = 0; c < img.channels; ++c)
                    d += std::abs(img.at(c, y, x + 1) - img.at(c, y, x));
                hsum += d / double(img.channels);
                ++hcount;
            }
        }
    }
    return {vcount > 0 ? vsum / double(vcount) : 0.0, hcount > 0 ? hsum / double(hcount) : 0.0};
}

double texture_match(const LatentImage& x_out, const LatentImage& target, const EditMask& region) {
    auto a = texture_signature(x_out, region);
    auto b = texture_signature(target, region);
    return std::exp(-2.0 * (std::abs(a[0] - b[0]) + std::abs(a[1] - b[1])));
}

void check_region(const EditResult& result, const EditTask& task) {
    if (task.region.height != result.x_out.height || task.region.width != result.x_out.width)
        throw ParameterError("alignment_score: editing region and output resolution differ");
    if (result.x_out.channels != 3)
        throw ParameterError("alignment_score: expected a 3-channel output image");
}

} // namespace

double alignment_score(const EditResult& result, const EditTask& task) {
    check_region(result, task);
    Sample target = render(task.target, task.input.body_seed);
    auto rgb = color_rgb(task.target.color);
    switch (task.type) {
    case TaskType::color:
        return color_match_fraction(result.x_out, task.region, rgb);
    case TaskType::detail:
        return shape_match(result.x_out, task.region, target.cloth_mask, rgb);
    case TaskType::material:
        return texture_match(result.x_out, target.image, task.region);
    case TaskType::comprehensive: {
        double color = color_match_fraction(result.x_out, task.region, rgb);
        double shape = shape_match(result.x_out, task.region, target.cloth_mask, rgb);
        return 0.5 * (color + shape);
    }
    }
    throw ParameterError("alignment_score: unknown task type");
}

double preservation_score(const EditResult& result, const EditTask& task) {
    const LatentImage& in = task.input.image;
    const LatentImage& out = result.x_out;
    if (in.channels != out.channels || in.height != out.height || in.width != out.width)
        throw ParameterError("preservation_score: input and output shapes differ");
    if (task.region.height != in.height || task.region.width != in.width)
        throw ParameterError("preservation_score: editing region resolution mismatch");
    double sum = 0.0;
    int64_t count = 0;
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            if (task.region.at(y, x) != 0) continue;
            for (int c = 0; c < in.channels; ++c) sum += std::abs(out.at(c, y, x) - in.at(c, y, x));
            count += in.channels;
        }
    }
    if (count == 0) return 1.0;
    return 1.0 - sum / (2.0 * double(count));
}

namespace {

constexpr int kPatch = 4;

struct PatchStats {
    double mean = 0.0;
    double var = 0.0;
    double grad = 0.0;
};

PatchStats patch_stats(const LatentImage& img, int c, int y0, int x0) {
    PatchStats s;
    double sum = 0.0;
    for (int y = y0; y < y0 + kPatch; ++y)
        for (int x = x0; x < x0 + kPatch; ++x) sum += img.at(c, y, x);
    s.mean = sum / double(kPatch * kPatch);
    double sq = 0.0;
    for (int y = y0; y < y0 + kPatch; ++y)
        for (int x = x0; x < x0 + kPatch; ++x) {
            double d = img.at(c, y, x) - s.mean;
            sq += d * d;
        }
    s.var = sq / double(kPatch * kPatch);
    double gsum = 0.0;
    int gcount = 0;
    for (int y = y0; y < y0 + kPatch; ++y)
        for (int x = x0; x < x0 + kPatch; ++x) {
            if (x + 1 < x0 + kPatch) {
                gsum += std::abs(img.at(c, y, x + 1) - img.at(c, y, x));
                ++gcount;
            }
            if (y + 1 < y0 + kPatch) {
                gsum += std::abs(img.at(c, y + 1, x) - img.at(c, y, x));
                ++gcount;
            }
        }
    s.grad = gsum / double(gcount);
    return s;
}

} // namespace

double perceptual_distance(const LatentImage& a, const LatentImage& b) {
    if (a.channels != b.channels || a.height != b.height || a.width != b.width)
        throw ParameterError("perceptual_distance: image shapes differ");
    if (a.height < kPatch || a.width < kPatch)
        throw ParameterError("perceptual_distance: images smaller than one 4x4 patch");
    double sum = 0.0;
    int terms = 0;
    for (int c = 0; c < a.channels; ++c) {
        for (int y0 = 0; y0 + kPatch <= a.height; y0 += kPatch) {
            for (int x0 = 0; x0 + kPatch <= a.width; x0 += kPatch) {
                PatchStats pa = patch_stats(a, c, y0, x0);
                PatchStats pb = patch_stats(b, c, y0, x0);
                sum += std::abs(pa.mean - pb.mean) + std::abs(pa.var - pb.var) +
                       std::abs(pa.grad - pb.grad);
                ++terms;
            }
        }
    }
    return sum / double(terms);
}

nlohmann::json TaskScore::to_json(bool with_timings) const {
    nlohmann::json j{{"task_id", task_id},
                     {"type", task_type_name(type)},
                     {"alignment", alignment},
                     {"preservation", preservation},
                     {"perceptual", perceptual},
                     {"failed", failed}};
    if (failed) j["error"] = error;
    if (with_timings) j["seconds"] = seconds;
    return j;
}

std::string config_digest(const EditConfig& cfg) {
    uint64_t h = fnv1a64(cfg.to_json().dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json MetricReport::to_json(bool with_timings) const {
    nlohmann::json task_list = nlohmann::json::array();
    for (const auto& t : tasks) task_list.push_back(t.to_json(with_timings));
    return nlohmann::json{{"name", name},
                          {"config", config.to_json()},
                          {"config_digest", config_digest},
                          {"failures", failures},
                          {"mean_alignment", mean_alignment},
                          {"mean_preservation", mean_preservation},
                          {"mean_perceptual", mean_perceptual},
                          {"type_alignment", type_alignment},
                          {"type_preservation", type_preservation},
                          {"type_perceptual", type_perceptual},
                          {"tasks", task_list}};
}

namespace {

std::string format3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

std::string MetricReport::to_markdown() const {
    std::ostringstream os;
    os << "## " << name << "\n\n";
    os << "- tasks: " << tasks.size() << " (" << failures << " failed)\n";
    os << "- config: `" << config_digest << "`\n\n";
    os << "| scope | alignment | preservation | perceptual |\n";
    os << "|---|---|---|---|\n";
    os << "| overall | " << format3(mean_alignment) << " | " << format3(mean_preservation)
       << " | " << format3(mean_perceptual) << " |\n";
    for (const auto& [type, align] : type_alignment) {
        os << "| " << type << " | " << format3(align) << " | "
           << format3(type_preservation.at(type)) << " | " << format3(type_perceptual.at(type))
           << " |\n";
    }
    return os.str();
}

MetricReport run_benchmark(const std::vector<EditTask>& tasks, const EditConfig& cfg,
                           const MaskNet* masknet, int jobs, const std::string& name) {
    if (jobs < 1) throw ParameterError("run_benchmark: jobs must be >= 1");
    MetricReport report;
    report.name = name;
    report.config = cfg;
    report.config_digest = madiff::config_digest(cfg);
    report.tasks.resize(tasks.size());

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const EditTask& task = tasks[i];
            TaskScore& score = report.tasks[i];
            score.task_id = task.id;
            score.type = task.type;
            try {
                EditConfig task_cfg = cfg;
                task_cfg.seed = seed_split(cfg.seed, "task-seed", uint64_t(task.id));
                EditResult result = run_task(task, task_cfg, masknet);
                score.alignment = alignment_score(result, task);
                score.preservation = preservation_score(result, task);
                score.perceptual = perceptual_distance(result.x_out, task.input.image);
                score.seconds = result.wall_seconds;
            } catch (const std::exception& e) {
                score.failed = true;
                score.error = e.what();
            }
        }
    };

    size_t threads = std::min(size_t(jobs), std::max<size_t>(tasks.size(), 1));
    std::vector<std::thread> pool;
    for (size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Aggregate plain means over the tasks that completed, overall and per
    // task type.
    double asum = 0.0, psum = 0.0, dsum = 0.0;
    int done = 0;
    std::map<std::string, std::array<double, 3>> type_sum;
    std::map<std::string, int> type_count;
    for (const auto& s : report.tasks) {
        if (s.failed) {
            ++report.failures;
            continue;
        }
        asum += s.alignment;
        psum += s.preservation;
        dsum += s.perceptual;
        ++done;
        auto key = std::string(task_type_name(s.type));
        auto& sums = type_sum[key];
        sums[0] += s.alignment;
        sums[1] += s.preservation;
        sums[2] += s.perceptual;
        ++type_count[key];
    }
    if (done > 0) {
        report.mean_alignment = asum / double(done);
        report.mean_preservation = psum / double(done);
        report.mean_perceptual = dsum / double(done);
    }
    for (const auto& [key, sums] : type_sum) {
        double n = double(type_count.at(key));
        report.type_alignment[key] = sums[0] / n;
        report.type_preservation[key] = sums[1] / n;
        report.type_perceptual[key] = sums[2] / n;
    }
    return report;
}

nlohmann::json AblationReport::to_json(bool with_timings) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : variants) j.push_back(v.to_json(with_timings));
    return nlohmann::json{{"variants", j}};
}

std::string AblationReport::to_markdown() const {
    std::ostringstream os;
    os << "# Ablation\n\n";
    os << "| variant | alignment | preservation | perceptual | failures |\n";
    os << "|---|---|---|---|---|\n";
    for (const auto& v : variants) {
        os << "| " << v.name << " | " << format3(v.mean_alignment) << " | "
           << format3(v.mean_preservation) << " | " << format3(v.mean_perceptual) << " | "
           << v.failures << " |\n";
    }
    return os.str();
}

const MetricReport& AblationReport::variant(const std::string& name) const {
    for (const auto& v : variants)
        if (v.name == name) return v;
    throw ParameterError("AblationReport: no variant named '" + name + "'");
}

AblationReport run_ablation(const std::vector<EditTask>& tasks, const EditConfig& cfg,
                            const MaskNet* masknet, int jobs) {
    if (masknet == nullptr)
        throw ConfigError("run_ablation: the masknet variants need a trained mask model");
    struct Variant {
        const char* name;
        MaskSource source;
        bool processor;
    };
    // 2x2 grid over mask source and attention processor.
    const Variant grid[] = {
        {"base", MaskSource::attention_threshold, false},
        {"masknet_only", MaskSource::masknet, false},
        {"ap_only", MaskSource::attention_threshold, true},
        {"full", MaskSource::masknet, true},
    };
    AblationReport report;
    for (const auto& v : grid) {
        EditConfig variant_cfg = cfg;
        variant_cfg.mask_source = v.source;
        variant_cfg.attention_processor = v.processor;
        report.variants.push_back(run_benchmark(tasks, variant_cfg, masknet, jobs, v.name));
    }
    return report;
}

AttentionStats attention_stats(const std::vector<const AttentionMap*>& maps,
                               const std::function<bool(size_t)>& is_success) {
    if (maps.empty()) throw ParameterError("attention_stats: no attention maps given");
    for (const auto* m : maps)
        if (m == nullptr) throw ParameterError("attention_stats: null attention map");
    int h = maps[0]->height;
    int w = maps[0]->width;
    for (const auto* m : maps)
        if (m->height != h || m->width != w)
            throw ParameterError("attention_stats: attention maps differ in resolution");

    AttentionStats stats;
    stats.success_mean = AttentionMap(h, w);
    stats.failure_mean = AttentionMap(h, w);
    for (size_t i = 0; i < maps.size(); ++i) {
        AttentionMap& dst = is_success(i) ? stats.success_mean : stats.failure_mean;
        int& count = is_success(i) ? stats.success_count : stats.failure_count;
        for (size_t p = 0; p < dst.data.size(); ++p) dst.data[p] += maps[i]->data[p];
        ++count;
    }
    if (stats.success_count > 0) {
        for (auto& v : stats.success_mean.data) v /= double(stats.success_count);
    } else {
        stats.success_empty = true;
    }
    if (stats.failure_count > 0) {
        for (auto& v : stats.failure_mean.data) v /= double(stats.failure_count);
    } else {
        stats.failure_empty = true;
    }
    return stats;
}

} // namespace madiff
