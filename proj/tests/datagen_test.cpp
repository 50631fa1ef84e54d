#include "madiff/datagen.hpp"
#include "madiff/errors.hpp"

#include <doctest.h>

#include <set>

using namespace madiff;

namespace {

int count_on(const EditMask& m) {
    int n = 0;
    for (double v : m.data)
        if (v > 0.0) ++n;
    return n;
}

// Horizontal body jitter recovered from the rendered head position.
int jitter_of(const Sample& s) {
    for (int x = 0; x < kImageSize; ++x)
        if (s.parts.at(part_head, 2, x) > 0.0) return x - 7;
    FAIL("no head pixels found");
    return 0;
}

GarmentSpec spec_of(Kind k, Color c, Sleeve sl, Collar co, Pattern p) {
    GarmentSpec s;
    s.kind = k;
    s.color = c;
    s.sleeve = sl;
    s.collar = co;
    s.pattern = p;
    return s;
}

bool subset(const EditMask& inner, const EditMask& outer) {
    for (size_t i = 0; i < inner.data.size(); ++i)
        if (inner.data[i] > 0.0 && !(outer.data[i] > 0.0)) return false;
    return true;
}

} // namespace

TEST_CASE("renders are deterministic in spec and body seed") {
    GarmentSpec spec = spec_of(Kind::dress, Color::blue, Sleeve::long_, Collar::v,
                               Pattern::striped);
    Sample a = render(spec, 42);
    Sample b = render(spec, 42);
    CHECK(a.image.data == b.image.data);
    CHECK(a.cloth_mask.data == b.cloth_mask.data);
    CHECK(a.foreground.data == b.foreground.data);
    CHECK(a.parts.data == b.parts.data);
    CHECK(a.caption.text == b.caption.text);
}

TEST_CASE("body jitter covers all three offsets") {
    GarmentSpec spec;
    std::set<int> seen;
    for (uint64_t seed = 0; seed < 30; ++seed) seen.insert(jitter_of(render(spec, seed)));
    CHECK(seen == std::set<int>{-1, 0, 1});
}

TEST_CASE("cloth pixel counts match the layout arithmetic") {
    // torso 6x6 = 36 minus the round collar notch (2 px) plus short sleeves
    // (3 rows x 3 cols per side)
    Sample tshirt = render(
        spec_of(Kind::tshirt, Color::red, Sleeve::short_, Collar::round, Pattern::solid), 1);
    CHECK(count_on(tshirt.cloth_mask) == 36 - 2 + 18);

    // the v collar removes the second neckline row as well
    Sample vneck = render(
        spec_of(Kind::tshirt, Color::red, Sleeve::short_, Collar::v, Pattern::solid), 1);
    CHECK(count_on(vneck.cloth_mask) == 36 - 4 + 18);

    // long sleeves run the full arm height (6 rows x 3 cols per side)
    Sample longs = render(
        spec_of(Kind::tshirt, Color::red, Sleeve::long_, Collar::round, Pattern::solid), 1);
    CHECK(count_on(longs.cloth_mask) == 36 - 2 + 36);

    Sample sleeveless = render(
        spec_of(Kind::tshirt, Color::red, Sleeve::none, Collar::round, Pattern::solid), 1);
    CHECK(count_on(sleeveless.cloth_mask) == 36 - 2);

    // a dress adds the 3x6 skirt block
    Sample dress = render(
        spec_of(Kind::dress, Color::red, Sleeve::short_, Collar::round, Pattern::solid), 1);
    CHECK(count_on(dress.cloth_mask) == 36 - 2 + 18 + 18);

    // pants are the 5x6 leg rectangle, sleeves and collar do not apply
    Sample pants = render(
        spec_of(Kind::pants, Color::red, Sleeve::none, Collar::round, Pattern::solid), 1);
    CHECK(count_on(pants.cloth_mask) == 30);
}

TEST_CASE("rendered pixels hit the palette exactly") {
    GarmentSpec spec = spec_of(Kind::tshirt, Color::red, Sleeve::short_, Collar::round,
                               Pattern::solid);
    Sample s = render(spec, 3);
    int dx = jitter_of(s);

    // garment body: pure red
    CHECK(s.image.at(0, 6, 6 + dx) == 1.0);
    CHECK(s.image.at(1, 6, 6 + dx) == -1.0);
    CHECK(s.image.at(2, 6, 6 + dx) == -1.0);
    // head: skin
    CHECK(s.image.at(0, 2, 8 + dx) == 0.6);
    CHECK(s.image.at(1, 2, 8 + dx) == 0.2);
    CHECK(s.image.at(2, 2, 8 + dx) == -0.2);
    // corner: background
    CHECK(s.image.at(0, 0, 0) == 0.7);
    CHECK(s.image.at(1, 0, 0) == 0.7);
    CHECK(s.image.at(2, 0, 0) == 0.7);

    // stripes dim odd rows toward black
    spec.pattern = Pattern::striped;
    Sample striped = render(spec, 3);
    CHECK(striped.image.at(0, 5, 6 + dx) == 0.0);
    CHECK(striped.image.at(1, 5, 6 + dx) == -1.0);
    CHECK(striped.image.at(0, 6, 6 + dx) == 1.0); // even rows keep the base color

    // dots invert the color on the 3x3 lattice
    spec.pattern = Pattern::dotted;
    Sample dotted = render(spec, 3);
    CHECK(dotted.image.at(0, 7, 7 + dx) == -1.0);
    CHECK(dotted.image.at(1, 7, 7 + dx) == 1.0);
    CHECK(dotted.image.at(2, 7, 7 + dx) == 1.0);
    CHECK(dotted.image.at(0, 7, 6 + dx) == 1.0); // off-lattice keeps the base
}

TEST_CASE("cloth is always contained in the foreground") {
    Rng rng(17);
    for (int i = 0; i < 40; ++i) {
        auto [src, tgt] = sample_task_specs(TaskType(rng.uniform_int(4)), rng);
        Sample s = render(src, uint64_t(i));
        CHECK(subset(s.cloth_mask, s.foreground));
        Sample t = render(tgt, uint64_t(i) + 1000);
        CHECK(subset(t.cloth_mask, t.foreground));
    }
}

TEST_CASE("captions name every attribute") {
    GarmentSpec spec = spec_of(Kind::dress, Color::yellow, Sleeve::long_, Collar::v,
                               Pattern::dotted);
    CHECK(caption(spec) == "a yellow long sleeve v collar dotted dress");
    spec = spec_of(Kind::pants, Color::black, Sleeve::none, Collar::round, Pattern::solid);
    CHECK(caption(spec) == "a black sleeveless round collar solid pants");
}

TEST_CASE("caption parsing inverts caption rendering for every spec") {
    for (int k = 0; k < 3; ++k)
        for (int c = 0; c < 6; ++c)
            for (int sl = 0; sl < 3; ++sl)
                for (int co = 0; co < 2; ++co)
                    for (int p = 0; p < 3; ++p) {
                        GarmentSpec spec =
                            spec_of(Kind(k), Color(c), Sleeve(sl), Collar(co), Pattern(p));
                        CHECK(parse_caption(caption(spec)) == spec);
                    }
}

TEST_CASE("off-template captions are rejected") {
    CHECK_THROWS_AS(parse_caption("the red short sleeve round collar solid t-shirt"),
                    FormatError);
    CHECK_THROWS_AS(parse_caption("a crimson short sleeve round collar solid t-shirt"),
                    FormatError);
    CHECK_THROWS_AS(parse_caption("a red short round collar solid t-shirt"), FormatError);
    CHECK_THROWS_AS(parse_caption("a red short sleeve round collar solid"), FormatError);
    CHECK_THROWS_AS(parse_caption("a red short sleeve round collar solid t-shirt extra"),
                    FormatError);
    CHECK_THROWS_AS(parse_caption(""), FormatError);
}

TEST_CASE("attribute names round-trip through their parsers") {
    for (int i = 0; i < 3; ++i) CHECK(parse_kind(kind_name(Kind(i))) == Kind(i));
    for (int i = 0; i < 6; ++i) CHECK(parse_color(color_name(Color(i))) == Color(i));
    for (int i = 0; i < 3; ++i) CHECK(parse_sleeve(sleeve_name(Sleeve(i))) == Sleeve(i));
    for (int i = 0; i < 2; ++i) CHECK(parse_collar(collar_name(Collar(i))) == Collar(i));
    for (int i = 0; i < 3; ++i) CHECK(parse_pattern(pattern_name(Pattern(i))) == Pattern(i));
    for (int i = 0; i < 4; ++i)
        CHECK(parse_task_type(task_type_name(TaskType(i))) == TaskType(i));
    CHECK_THROWS_AS(parse_kind("jacket"), FormatError);
    CHECK_THROWS_AS(parse_color("mauve"), FormatError);
    CHECK_THROWS_AS(parse_task_type("style"), FormatError);
}

TEST_CASE("identical specs have no editing region") {
    GarmentSpec spec;
    CHECK_THROWS_AS(editing_region(spec, spec, 0), ParameterError);
}

TEST_CASE("color changes claim the whole garment") {
    GarmentSpec src = spec_of(Kind::tshirt, Color::red, Sleeve::short_, Collar::round,
                              Pattern::solid);
    GarmentSpec tgt = src;
    tgt.color = Color::blue;
    Sample s = render(src, 5);
    EditMask region = editing_region(src, tgt, 5);
    // same geometry on both sides, so the union is the cloth mask itself
    CHECK(region.data == s.cloth_mask.data);

    // pattern changes behave the same way
    tgt = src;
    tgt.pattern = Pattern::dotted;
    CHECK(editing_region(src, tgt, 5).data == s.cloth_mask.data);
}

TEST_CASE("kind changes claim the union of both garments") {
    GarmentSpec src = spec_of(Kind::tshirt, Color::red, Sleeve::short_, Collar::round,
                              Pattern::solid);
    GarmentSpec tgt = src;
    tgt.kind = Kind::dress;
    EditMask region = editing_region(src, tgt, 5);
    Sample s = render(src, 5);
    Sample t = render(tgt, 5);
    CHECK(subset(s.cloth_mask, region));
    CHECK(subset(t.cloth_mask, region));
    CHECK(count_on(region) == count_on(t.cloth_mask)); // dress cloth is the superset
}

TEST_CASE("sleeve changes touch only the sleeve zones") {
    GarmentSpec src = spec_of(Kind::tshirt, Color::red, Sleeve::short_, Collar::round,
                              Pattern::solid);
    GarmentSpec tgt = src;
    tgt.sleeve = Sleeve::long_;
    EditMask region = editing_region(src, tgt, 7);
    // long sleeves: rows 4-9, three columns per side
    CHECK(count_on(region) == 36);

    GarmentSpec none_src = src;
    none_src.sleeve = Sleeve::none;
    GarmentSpec short_tgt = none_src;
    short_tgt.sleeve = Sleeve::short_;
    CHECK(count_on(editing_region(none_src, short_tgt, 7)) == 18);

    // the torso must stay out of a sleeve-only region
    Sample s = render(none_src, 7);
    int dx = jitter_of(s);
    CHECK(region.at(6, 6 + dx) == 0.0);
    CHECK(region.at(5, 3 + dx) == 1.0);
}

TEST_CASE("collar changes touch only the exposed neckline") {
    GarmentSpec src = spec_of(Kind::tshirt, Color::red, Sleeve::short_, Collar::round,
                              Pattern::solid);
    GarmentSpec tgt = src;
    tgt.collar = Collar::v;
    EditMask region = editing_region(src, tgt, 9);
    int dx = jitter_of(render(src, 9));
    // the top neckline row is bare under both collars; only the second row
    // flips between cloth and skin
    CHECK(count_on(region) == 2);
    CHECK(region.at(5, 7 + dx) == 1.0);
    CHECK(region.at(5, 8 + dx) == 1.0);
}

TEST_CASE("task spec sampling respects the per-type design") {
    Rng rng(23);
    for (int draw = 0; draw < 200; ++draw) {
        TaskType type = TaskType(draw % 4);
        auto [src, tgt] = sample_task_specs(type, rng);
        CHECK(src != tgt);
        CHECK_NOTHROW(editing_region(src, tgt, 0));

        // pants never carry sleeve or collar variation
        for (const GarmentSpec& s : {src, tgt})
            if (s.kind == Kind::pants) {
                CHECK(s.sleeve == Sleeve::none);
                CHECK(s.collar == Collar::round);
            }

        switch (type) {
        case TaskType::color:
            CHECK(src.pattern == Pattern::solid);
            CHECK(src.color != tgt.color);
            CHECK(src.kind == tgt.kind);
            CHECK(src.sleeve == tgt.sleeve);
            CHECK(src.collar == tgt.collar);
            CHECK(src.pattern == tgt.pattern);
            break;
        case TaskType::detail: {
            CHECK(src.kind != Kind::pants);
            CHECK(src.pattern == Pattern::solid);
            CHECK(src.color == tgt.color);
            CHECK(src.kind == tgt.kind);
            bool sleeve_changed = src.sleeve != tgt.sleeve;
            bool collar_changed = src.collar != tgt.collar;
            CHECK(sleeve_changed != collar_changed); // exactly one detail moves
            break;
        }
        case TaskType::material:
            CHECK(src.pattern != tgt.pattern);
            CHECK(src.color == tgt.color);
            CHECK(src.kind == tgt.kind);
            CHECK(src.sleeve == tgt.sleeve);
            CHECK(src.collar == tgt.collar);
            break;
        case TaskType::comprehensive: {
            CHECK(src.kind != Kind::pants);
            CHECK(src.pattern == Pattern::solid);
            CHECK(src.color != tgt.color);
            bool sleeve_changed = src.sleeve != tgt.sleeve;
            bool collar_changed = src.collar != tgt.collar;
            CHECK(sleeve_changed != collar_changed);
            break;
        }
        }
    }
}

TEST_CASE("training set generation is seeded and audited") {
    std::vector<TrainTriple> a = gen_training_set(20, 11);
    std::vector<TrainTriple> b = gen_training_set(20, 11);
    REQUIRE(a.size() == 20);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].input.embedding.values == b[i].input.embedding.values);
        CHECK(a[i].truth.data == b[i].truth.data);
        CHECK(a[i].source == b[i].source);
        CHECK(a[i].target == b[i].target);
        // the stored specs reproduce the stored truth
        EditMask again = editing_region(a[i].source, a[i].target, a[i].body_seed);
        CHECK(again.data == a[i].truth.data);
        CHECK(a[i].target_prompt.text == caption(a[i].target));
        CHECK(a[i].input.embedding.dim() == 32);
    }
    // a different seed moves at least one spec
    std::vector<TrainTriple> c = gen_training_set(20, 12);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i)
        any_diff = any_diff || !(a[i].source == c[i].source) || !(a[i].target == c[i].target);
    CHECK(any_diff);
    CHECK_THROWS_AS(gen_training_set(0, 1), ParameterError);
}

TEST_CASE("eval set generation groups tasks by type") {
    std::vector<EditTask> tasks = gen_eval_set(3, 31);
    REQUIRE(tasks.size() == 12);
    for (size_t i = 0; i < tasks.size(); ++i) {
        const EditTask& t = tasks[i];
        CHECK(t.id == int(i));
        CHECK(t.type == TaskType(int(i) / 3));
        CHECK(t.target_prompt.text == caption(t.target));
        CHECK(caption(t.input.spec) == t.input.caption.text);
        EditMask again = editing_region(t.input.spec, t.target, t.input.body_seed);
        CHECK(again.data == t.region.data);
    }
    std::vector<EditTask> rerun = gen_eval_set(3, 31);
    for (size_t i = 0; i < tasks.size(); ++i) {
        CHECK(rerun[i].input.image.data == tasks[i].input.image.data);
        CHECK(rerun[i].target == tasks[i].target);
    }
    CHECK_THROWS_AS(gen_eval_set(0, 1), ParameterError);
}

TEST_CASE("task mask inputs reuse the sample geometry") {
    Sample s = render(spec_of(Kind::tshirt, Color::green, Sleeve::long_, Collar::round,
                              Pattern::solid), 13);
    PromptText prompt{"a red long sleeve round collar solid t-shirt"};
    MaskInput in = task_mask_input(s, prompt, default_shape_vocabulary(),
                                   default_embedding_table());
    CHECK(in.foreground.data == s.foreground.data);
    CHECK(in.parts.data == s.parts.data);
    MaskPrompt mp = extract_mask_prompt(prompt, default_shape_vocabulary());
    PromptEmbedding expect = embed_prompt(mp, default_embedding_table());
    CHECK(in.embedding.values == expect.values);
}

TEST_CASE("display upscaling repeats pixels") {
    Sample s = render(GarmentSpec{}, 2);
    LatentImage big = render_display(s.image, 3);
    CHECK(big.height == 48);
    CHECK(big.width == 48);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < big.height; ++y)
            for (int x = 0; x < big.width; ++x)
                CHECK(big.at(c, y, x) == s.image.at(c, y / 3, x / 3));
    CHECK_THROWS_AS(render_display(s.image, 0), ParameterError);
}
