#include "madiff/eval.hpp"
#include "madiff/errors.hpp"
#include "madiff/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace madiff;

namespace {

GarmentSpec spec_of(Kind k, Color c, Sleeve sl, Collar co, Pattern p) {
    GarmentSpec s;
    s.kind = k;
    s.color = c;
    s.sleeve = sl;
    s.collar = co;
    s.pattern = p;
    return s;
}

EditTask make_task(TaskType type, const GarmentSpec& src, const GarmentSpec& tgt,
                   uint64_t body_seed) {
    EditTask t;
    t.id = 0;
    t.type = type;
    t.input = render(src, body_seed);
    t.target_prompt = PromptText{caption(tgt)};
    t.target = tgt;
    t.region = editing_region(src, tgt, body_seed);
    return t;
}

EditResult result_with(LatentImage x_out) {
    EditResult r;
    r.x_out = std::move(x_out);
    return r;
}

std::vector<int> region_pixels(const EditMask& region) {
    std::vector<int> px;
    for (int i = 0; i < int(region.data.size()); ++i)
        if (region.data[size_t(i)] > 0.0) px.push_back(i);
    return px;
}

LatentImage random_image(int c, int h, int w, uint64_t seed) {
    LatentImage img(c, h, w);
    Rng rng(seed);
    for (auto& v : img.data) v = rng.normal();
    return img;
}

// Independent reimplementation of the patch-statistics distance, kept apart
// from the library code on purpose.
double perceptual_oracle(const LatentImage& a, const LatentImage& b) {
    auto patch = [](const LatentImage& img, int c, int py, int px) {
        double mean = 0.0;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) mean += img.at(c, py + y, px + x);
        mean /= 16.0;
        double var = 0.0;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                double d = img.at(c, py + y, px + x) - mean;
                var += d * d;
            }
        var /= 16.0;
        double grad = 0.0;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 3; ++x)
                grad += std::abs(img.at(c, py + y, px + x + 1) - img.at(c, py + y, px + x));
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x)
                grad += std::abs(img.at(c, py + y + 1, px + x) - img.at(c, py + y, px + x));
        grad /= 24.0;
        return std::array<double, 3>{mean, var, grad};
    };
    double total = 0.0;
    int terms = 0;
    for (int c = 0; c < a.channels; ++c)
        for (int py = 0; py + 4 <= a.height; py += 4)
            for (int px = 0; px + 4 <= a.width; px += 4) {
                auto pa = patch(a, c, py, px);
                auto pb = patch(b, c, py, px);
                total += std::abs(pa[0] - pb[0]) + std::abs(pa[1] - pb[1]) +
                         std::abs(pa[2] - pb[2]);
                ++terms;
            }
    return total / double(terms);
}

} // namespace

TEST_CASE("color alignment counts recolored region pixels") {
    GarmentSpec src = spec_of(Kind::tshirt, Color::red, Sleeve::short_, Collar::round,
                              Pattern::solid);
    GarmentSpec tgt = src;
    tgt.color = Color::blue;
    EditTask task = make_task(TaskType::color, src, tgt, 3);

    Sample target = render(tgt, 3);
    CHECK(alignment_score(result_with(target.image), task) == 1.0);
    CHECK(alignment_score(result_with(task.input.image), task) == 0.0);

    // revert a prefix of the region back to the source color
    std::vector<int> px = region_pixels(task.region);
    REQUIRE(px.size() == 52);
    LatentImage partial = target.image;
    for (int i = 0; i < 20; ++i) {
        int y = px[size_t(i)] / kImageSize, x = px[size_t(i)] % kImageSize;
        for (int c = 0; c < 3; ++c) partial.at(c, y, x) = task.input.image.at(c, y, x);
    }
    CHECK(alignment_score(result_with(partial), task) == doctest::Approx(32.0 / 52.0));
}

TEST_CASE("detail alignment is the shape IoU against the target render") {
    // sleeve removal: a perfect edit leaves nothing in the region, which
    // counts as a full match
    GarmentSpec src = spec_of(Kind::tshirt, Color::green, Sleeve::short_, Collar::round,
                              Pattern::solid);
    GarmentSpec tgt = src;
    tgt.sleeve = Sleeve::none;
    EditTask removal = make_task(TaskType::detail, src, tgt, 5);
    CHECK(alignment_score(result_with(render(tgt, 5).image), removal) == 1.0);

    // sleeve growth: the perfect edit fills the region, the null edit misses
    // all of it
    GarmentSpec src2 = tgt;
    GarmentSpec tgt2 = src2;
    tgt2.sleeve = Sleeve::long_;
    EditTask growth = make_task(TaskType::detail, src2, tgt2, 5);
    CHECK(alignment_score(result_with(render(tgt2, 5).image), growth) == 1.0);
    CHECK(alignment_score(result_with(growth.input.image), growth) == 0.0);
}

TEST_CASE("material alignment compares texture signatures") {
    GarmentSpec src = spec_of(Kind::dress, Color::yellow, Sleeve::short_, Collar::round,
                              Pattern::solid);
    GarmentSpec tgt = src;
    tgt.pattern = Pattern::striped;
    EditTask task = make_task(TaskType::material, src, tgt, 7);

    CHECK(alignment_score(result_with(render(tgt, 7).image), task) == 1.0);
    double unedited = alignment_score(result_with(task.input.image), task);
    CHECK(unedited < 1.0);
    CHECK(unedited > 0.0);
}

TEST_CASE("comprehensive alignment averages color and shape") {
    GarmentSpec src = spec_of(Kind::dress, Color::white, Sleeve::none, Collar::round,
                              Pattern::solid);
    GarmentSpec tgt = src;
    tgt.color = Color::black;
    tgt.sleeve = Sleeve::long_;
    EditTask task = make_task(TaskType::comprehensive, src, tgt, 9);
    CHECK(alignment_score(result_with(render(tgt, 9).image), task) == 1.0);
    CHECK(alignment_score(result_with(task.input.image), task) == 0.0);
}

TEST_CASE("alignment validates the output image") {
    GarmentSpec src;
    GarmentSpec tgt = src;
    tgt.color = Color::blue;
    EditTask task = make_task(TaskType::color, src, tgt, 1);
    CHECK_THROWS_AS(alignment_score(result_with(LatentImage(3, 8, 8)), task), ParameterError);
    CHECK_THROWS_AS(alignment_score(result_with(LatentImage(1, 16, 16)), task), ParameterError);
}

TEST_CASE("preservation measures damage outside the region") {
    GarmentSpec src;
    GarmentSpec tgt = src;
    tgt.color = Color::green;
    EditTask task = make_task(TaskType::color, src, tgt, 11);

    CHECK(preservation_score(result_with(task.input.image), task) == 1.0);

    // corrupt channel 0 of every out-of-region pixel by 0.5
    LatentImage damaged = task.input.image;
    int outside = 0;
    for (int y = 0; y < kImageSize; ++y)
        for (int x = 0; x < kImageSize; ++x)
            if (task.region.at(y, x) == 0.0) {
                damaged.at(0, y, x) += 0.5;
                ++outside;
            }
    double expect = 1.0 - (0.5 * double(outside)) / (2.0 * double(outside) * 3.0);
    CHECK(preservation_score(result_with(damaged), task) == doctest::Approx(expect).epsilon(1e-15));

    // a region that covers everything leaves nothing to damage
    EditTask full = task;
    full.region = EditMask(kImageSize, kImageSize, 1.0);
    LatentImage wrecked = random_image(3, kImageSize, kImageSize, 1);
    CHECK(preservation_score(result_with(wrecked), full) == 1.0);

    CHECK_THROWS_AS(preservation_score(result_with(LatentImage(3, 8, 8)), task), ParameterError);
}

TEST_CASE("perceptual distance matches an independent reimplementation") {
    LatentImage a = random_image(3, 16, 16, 2);
    LatentImage b = random_image(3, 16, 16, 3);
    CHECK(perceptual_distance(a, b) == doctest::Approx(perceptual_oracle(a, b)).epsilon(1e-12));
    CHECK(perceptual_distance(a, a) == 0.0);
    CHECK(perceptual_distance(a, b) == perceptual_distance(b, a));
    CHECK(perceptual_distance(a, b) > 0.0);

    // ragged sizes drop the partial patches, still matching the oracle
    LatentImage c = random_image(2, 10, 13, 4);
    LatentImage d = random_image(2, 10, 13, 5);
    CHECK(perceptual_distance(c, d) == doctest::Approx(perceptual_oracle(c, d)).epsilon(1e-12));

    CHECK_THROWS_AS(perceptual_distance(a, LatentImage(3, 8, 8)), ParameterError);
    CHECK_THROWS_AS(perceptual_distance(LatentImage(1, 3, 3), LatentImage(1, 3, 3)),
                    ParameterError);
}

TEST_CASE("attention stats split means by the partition") {
    Rng rng(6);
    std::vector<AttentionMap> maps(6, AttentionMap(3, 3));
    for (auto& m : maps)
        for (auto& v : m.data) v = rng.uniform();
    std::vector<const AttentionMap*> ptrs;
    for (const auto& m : maps) ptrs.push_back(&m);

    AttentionStats stats = attention_stats(ptrs, [](size_t i) { return i % 2 == 0; });
    CHECK(stats.success_count == 3);
    CHECK(stats.failure_count == 3);
    CHECK_FALSE(stats.success_empty);
    CHECK_FALSE(stats.failure_empty);
    for (size_t p = 0; p < 9; ++p) {
        double s = maps[0].data[p] + maps[2].data[p] + maps[4].data[p];
        double f = maps[1].data[p] + maps[3].data[p] + maps[5].data[p];
        CHECK(stats.success_mean.data[p] == s / 3.0);
        CHECK(stats.failure_mean.data[p] == f / 3.0);
    }
}

TEST_CASE("attention stats flag empty partitions") {
    AttentionMap only(2, 2, 0.4);
    AttentionStats stats = attention_stats({&only}, [](size_t) { return true; });
    CHECK(stats.success_mean.data == only.data);
    CHECK(stats.failure_empty);
    CHECK(stats.failure_count == 0);
    CHECK(stats.failure_mean.data == std::vector<double>(4, 0.0));
}

TEST_CASE("attention stats validate their input") {
    CHECK_THROWS_AS(attention_stats({}, [](size_t) { return true; }), ParameterError);
    AttentionMap m(2, 2);
    CHECK_THROWS_AS(attention_stats({&m, nullptr}, [](size_t) { return true; }), ParameterError);
    AttentionMap other(2, 3);
    CHECK_THROWS_AS(attention_stats({&m, &other}, [](size_t) { return true; }), ParameterError);
}

TEST_CASE("config digests are stable fingerprints") {
    EditConfig cfg;
    std::string d1 = config_digest(cfg);
    CHECK(d1.size() == 16);
    CHECK(config_digest(cfg) == d1);
    EditConfig other = cfg;
    other.seed += 1;
    CHECK(config_digest(other) != d1);
}

TEST_CASE("benchmarks reproduce across thread counts") {
    std::vector<EditTask> tasks = gen_eval_set(1, 51);
    EditConfig cfg;
    cfg.seed = 51;
    cfg.mask_source = MaskSource::foreground;

    MetricReport serial = run_benchmark(tasks, cfg, nullptr, 1);
    MetricReport parallel = run_benchmark(tasks, cfg, nullptr, 4);
    CHECK(serial.failures == 0);
    CHECK(serial.to_json(false).dump() == parallel.to_json(false).dump());
    REQUIRE(serial.tasks.size() == 4);
    CHECK(serial.type_alignment.size() == 4);

    // a task scores the same alone as in a batch: the edit seed depends only
    // on the benchmark seed and the task id
    std::vector<EditTask> one{tasks[2]};
    MetricReport solo = run_benchmark(one, cfg, nullptr, 1);
    CHECK(solo.tasks[0].alignment == serial.tasks[2].alignment);
    CHECK(solo.tasks[0].preservation == serial.tasks[2].preservation);
    CHECK(solo.tasks[0].perceptual == serial.tasks[2].perceptual);

    CHECK_THROWS_AS(run_benchmark(tasks, cfg, nullptr, 0), ParameterError);
}

TEST_CASE("benchmark failures are recorded, not fatal") {
    std::vector<EditTask> tasks = gen_eval_set(1, 53);
    EditConfig cfg;
    cfg.seed = 53;
    cfg.mask_source = MaskSource::masknet; // no model given: every task fails
    MetricReport report = run_benchmark(tasks, cfg, nullptr, 2);
    CHECK(report.failures == int(tasks.size()));
    for (const auto& t : report.tasks) {
        CHECK(t.failed);
        CHECK_FALSE(t.error.empty());
    }
    CHECK(report.mean_alignment == 0.0);
    nlohmann::json j = report.to_json(false);
    CHECK(j["failures"] == int(tasks.size()));
    CHECK(j["tasks"][0].contains("error"));
}

TEST_CASE("metric reports serialize with optional timings") {
    std::vector<EditTask> tasks = gen_eval_set(1, 55);
    EditConfig cfg;
    cfg.seed = 55;
    cfg.mask_source = MaskSource::foreground;
    MetricReport report = run_benchmark(tasks, cfg, nullptr, 2, "smoke");
    nlohmann::json without = report.to_json(false);
    nlohmann::json with = report.to_json(true);
    CHECK_FALSE(without["tasks"][0].contains("seconds"));
    CHECK(with["tasks"][0].contains("seconds"));
    CHECK(without["name"] == "smoke");
    CHECK(without["config_digest"] == config_digest(cfg));

    std::string md = report.to_markdown();
    CHECK(md.find("## smoke") != std::string::npos);
    CHECK(md.find("| overall |") != std::string::npos);
    CHECK(md.find("| color |") != std::string::npos);
}

TEST_CASE("the ablation grid covers all four variants") {
    std::vector<EditTask> tasks = gen_eval_set(1, 57);
    EditConfig cfg;
    cfg.seed = 57;
    CHECK_THROWS_AS(run_ablation(tasks, cfg, nullptr), ConfigError);

    MaskNet masknet{MaskNetConfig{}}; // untrained is fine for the plumbing
    AblationReport report = run_ablation(tasks, cfg, &masknet, 2);
    REQUIRE(report.variants.size() == 4);
    CHECK(report.variant("base").config.mask_source == MaskSource::attention_threshold);
    CHECK_FALSE(report.variant("base").config.attention_processor);
    CHECK(report.variant("masknet_only").config.mask_source == MaskSource::masknet);
    CHECK(report.variant("ap_only").config.attention_processor);
    CHECK(report.variant("full").config.mask_source == MaskSource::masknet);
    CHECK(report.variant("full").config.attention_processor);
    CHECK_THROWS_AS(report.variant("nope"), ParameterError);

    std::string md = report.to_markdown();
    CHECK(md.find("| full |") != std::string::npos);
    CHECK(report.to_json(false)["variants"].size() == 4);
}
