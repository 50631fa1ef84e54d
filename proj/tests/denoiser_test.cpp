#include "madiff/denoiser.hpp"
#include "madiff/errors.hpp"
#include "madiff/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace madiff;

namespace {

LatentImage random_image(int c, int h, int w, uint64_t seed, double scale = 1.0) {
    LatentImage img(c, h, w);
    Rng rng(seed);
    for (auto& v : img.data) v = scale * rng.normal();
    return img;
}

GaussianMixtureModel two_blob_mixture(double w0 = 0.5, double sigma0 = 0.05) {
    GaussianMixtureModel gmm;
    gmm.sigma0 = sigma0;
    gmm.components.push_back({w0, random_image(1, 2, 2, 31, 0.6), "a"});
    gmm.components.push_back({1.0 - w0, random_image(1, 2, 2, 32, 0.6), "b"});
    gmm.classes["both"] = {{0, 0.5}, {1, 0.5}};
    gmm.classes["first"] = {{0, 1.0}};
    return gmm;
}

} // namespace

TEST_CASE("mixture validation catches broken specs") {
    GaussianMixtureModel gmm = two_blob_mixture();
    CHECK_NOTHROW(gmm.validate());

    GaussianMixtureModel bad = gmm;
    bad.components[0].weight = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = gmm;
    bad.components.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = gmm;
    bad.classes["oops"] = {{5, 1.0}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = gmm;
    bad.components[1].mean = LatentImage(1, 3, 3);
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = gmm;
    bad.sigma0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("single-component noise prediction matches the closed form") {
    GaussianMixtureModel gmm;
    gmm.sigma0 = 0.1;
    LatentImage mu(1, 1, 1);
    mu.data[0] = 0.4;
    gmm.components.push_back({1.0, mu, "only"});

    double a = 0.5;
    double v = a * 0.01 + (1.0 - a);
    LatentImage x(1, 1, 1);
    x.data[0] = 1.0;
    LatentImage eps = analytic_eps(gmm, x, a, nullptr);
    double expect = std::sqrt(1.0 - a) * (1.0 - std::sqrt(a) * 0.4) / v;
    CHECK(eps.data[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("noise prediction equals the density gradient numerically") {
    GaussianMixtureModel gmm = two_blob_mixture(0.3);
    double a = 0.3;
    LatentImage x = random_image(1, 2, 2, 33, 0.8);
    LatentImage eps = analytic_eps(gmm, x, a, nullptr);

    const double h = 1e-5;
    for (size_t i = 0; i < x.data.size(); ++i) {
        LatentImage xp = x;
        LatentImage xm = x;
        xp.data[i] += h;
        xm.data[i] -= h;
        double grad =
            (gm_log_density(gmm, xp, a, nullptr) - gm_log_density(gmm, xm, a, nullptr)) / (2 * h);
        double expect = -std::sqrt(1.0 - a) * grad;
        CHECK(eps.data[i] == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("class subsets reweight the mixture") {
    GaussianMixtureModel gmm = two_blob_mixture();
    double a = 0.6;
    LatentImage x = random_image(1, 2, 2, 34, 0.5);

    // class "first" is a single component, so the closed form applies
    GaussianMixtureModel solo;
    solo.sigma0 = gmm.sigma0;
    solo.components.push_back({1.0, gmm.components[0].mean, "a"});
    std::string cls = "first";
    LatentImage via_class = analytic_eps(gmm, x, a, &cls);
    LatentImage direct = analytic_eps(solo, x, a, nullptr);
    for (size_t i = 0; i < x.data.size(); ++i)
        CHECK(via_class.data[i] == doctest::Approx(direct.data[i]).epsilon(1e-13));

    std::string missing = "nope";
    CHECK_THROWS_AS(analytic_eps(gmm, x, a, &missing), ConfigError);
}

TEST_CASE("equidistant points get the symmetric pull") {
    // equal weights, x at the midpoint of the two noised means: the
    // responsibilities cancel and the prediction points at the blend
    GaussianMixtureModel gmm = two_blob_mixture();
    double a = 0.7;
    double sa = std::sqrt(a);
    LatentImage x = lincomb(gmm.components[0].mean, 0.5 * sa, gmm.components[1].mean, 0.5 * sa);
    double v = a * gmm.sigma0 * gmm.sigma0 + (1.0 - a);
    LatentImage eps = analytic_eps(gmm, x, a, nullptr);
    LatentImage blend =
        lincomb(gmm.components[0].mean, 0.5 * sa, gmm.components[1].mean, 0.5 * sa);
    for (size_t i = 0; i < x.data.size(); ++i) {
        double expect = std::sqrt(1.0 - a) * (x.data[i] - blend.data[i]) / v;
        CHECK(eps.data[i] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(std::abs(eps.data[i]) < 1e-12); // midpoint: zero net pull
    }
}

TEST_CASE("far-away states keep the prediction finite") {
    GaussianMixtureModel gmm = two_blob_mixture();
    LatentImage x(1, 2, 2, 1e6);
    LatentImage eps = analytic_eps(gmm, x, 0.5, nullptr);
    for (double v : eps.data) CHECK(std::isfinite(v));
}

TEST_CASE("alpha_bar one collapses the variance to sigma0 squared") {
    GaussianMixtureModel gmm;
    gmm.sigma0 = 0.2;
    LatentImage mu(1, 1, 1);
    mu.data[0] = -0.3;
    gmm.components.push_back({1.0, mu, "only"});
    LatentImage x(1, 1, 1);
    x.data[0] = 0.5;
    // v = sigma0^2, sqrt(1 - a) = 0: prediction is exactly zero
    LatentImage eps = analytic_eps(gmm, x, 1.0, nullptr);
    CHECK(eps.data[0] == 0.0);
}

TEST_CASE("mixture spec JSON roundtrip preserves structure") {
    GaussianMixtureModel gmm = two_blob_mixture(0.25, 0.07);
    nlohmann::json spec = gmm_spec_to_json(gmm);

    GaussianMixtureModel back = gmm_from_spec_json(spec, [&](const std::string& id) {
        for (const auto& c : gmm.components)
            if (c.prototype_id == id) return c.mean;
        throw ParameterError("unknown prototype " + id);
    });
    REQUIRE(back.components.size() == gmm.components.size());
    CHECK(back.sigma0 == gmm.sigma0);
    for (size_t k = 0; k < gmm.components.size(); ++k) {
        CHECK(back.components[k].weight == gmm.components[k].weight);
        CHECK(back.components[k].prototype_id == gmm.components[k].prototype_id);
        for (size_t i = 0; i < gmm.components[k].mean.data.size(); ++i)
            CHECK(back.components[k].mean.data[i] == gmm.components[k].mean.data[i]);
    }
    CHECK(back.classes == gmm.classes);
}

TEST_CASE("mixture spec loader rejects malformed JSON") {
    nlohmann::json bad{{"sigma0", 0.05}};
    CHECK_THROWS_AS(gmm_from_spec_json(bad, [](const std::string&) { return LatentImage(); }),
                    FormatError);
}

TEST_CASE("predictor indexes alpha_bar through the schedule") {
    GaussianMixtureModel gmm = two_blob_mixture();
    NoiseSchedule sched = with_stride(build_schedule(100, 1e-4, 0.02), 10);
    GaussianMixturePredictor pred(gmm, sched, std::string("both"));
    LatentImage x = random_image(1, 2, 2, 35, 0.4);

    std::string cls = "both";
    LatentImage direct = analytic_eps(gmm, x, sched.alpha_at(3), &cls);
    LatentImage via = pred.predict(x, 3, nullptr);
    for (size_t i = 0; i < x.data.size(); ++i) CHECK(via.data[i] == direct.data[i]);
}

TEST_CASE("tiny denoiser overfits a single blob") {
    GaussianMixtureModel gmm;
    gmm.sigma0 = 0.05;
    gmm.components.push_back({1.0, random_image(1, 4, 4, 40, 0.5), "only"});

    NoiseSchedule sched = with_stride(build_schedule(40, 1e-3, 0.05), 4);
    TinyDenoiserConfig cfg;
    cfg.hidden = 8;
    cfg.steps = 150;
    cfg.lr = 2e-2;
    cfg.seed = 5;
    TinyDenoiser model(1, cfg, sched);

    std::vector<std::pair<LatentImage, std::string>> data;
    data.emplace_back(gmm.components[0].mean, "only");
    auto history = train_tiny_denoiser(model, data, sched);
    REQUIRE(history.size() == size_t(cfg.steps));
    // averaged tail should sit well under the starting loss
    double head = history[0];
    double tail = 0.0;
    for (size_t i = history.size() - 10; i < history.size(); ++i) tail += history[i];
    tail /= 10.0;
    CHECK(tail < 0.5 * head);
}

TEST_CASE("tiny denoiser training is reproducible") {
    NoiseSchedule sched = with_stride(build_schedule(40, 1e-3, 0.05), 4);
    TinyDenoiserConfig cfg;
    cfg.hidden = 4;
    cfg.steps = 30;
    cfg.seed = 9;

    auto run = [&]() {
        TinyDenoiser model(1, cfg, sched);
        std::vector<std::pair<LatentImage, std::string>> data;
        data.emplace_back(random_image(1, 4, 4, 41, 0.5), "x");
        train_tiny_denoiser(model, data, sched);
        return model.params();
    };
    auto p1 = run();
    auto p2 = run();
    REQUIRE(p1.size() == p2.size());
    for (size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
}

TEST_CASE("tiny denoiser rejects an empty dataset") {
    NoiseSchedule sched = build_schedule(10, 1e-3, 0.05);
    TinyDenoiserConfig cfg;
    TinyDenoiser model(1, cfg, sched);
    std::vector<std::pair<LatentImage, std::string>> data;
    CHECK_THROWS_AS(train_tiny_denoiser(model, data, sched), ParameterError);
}
