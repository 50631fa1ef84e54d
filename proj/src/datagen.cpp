#include "madiff/datagen.hpp"

#include "madiff/errors.hpp"

#include <algorithm>
#include <utility>

namespace madiff {

namespace {

// Fixed 16x16 layout (all bounds inclusive, columns before jitter):
//   head   rows 1-3,   cols 7-9
//   torso  rows 4-9,   cols 5-10
//   arms   rows 4-9,   cols 3-4 and 11-12
//   legs   rows 10-14, cols 5-7 and 8-10
// Sleeves cover the arm columns plus one extra column outside the body
// (cols 2 / 13), so sleeve length stays readable from the foreground
// silhouette alone; the mask predictor has no other view of the garment.
constexpr int kHeadTop = 1, kHeadBottom = 3, kHeadLeft = 7, kHeadRight = 9;
constexpr int kTorsoTop = 4, kTorsoBottom = 9, kTorsoLeft = 5, kTorsoRight = 10;
constexpr int kArmTop = 4, kArmBottom = 9;
constexpr int kLeftArmLeft = 3, kLeftArmRight = 4, kRightArmLeft = 11, kRightArmRight = 12;
constexpr int kLegTop = 10, kLegBottom = 14;
constexpr int kLeftLegLeft = 5, kLeftLegRight = 7, kRightLegLeft = 8, kRightLegRight = 10;
constexpr int kSleeveShortBottom = 6;
constexpr int kLeftSleeveLeft = 2, kRightSleeveRight = 13;
constexpr int kCollarLeft = 7, kCollarRight = 8, kCollarTop = 4, kCollarBottom = 5;
constexpr int kSkirtTop = 10, kSkirtBottom = 12;

constexpr std::array<double, 3> kBackground = {0.7, 0.7, 0.7};
constexpr std::array<double, 3> kSkin = {0.6, 0.2, -0.2};

int body_jitter(uint64_t body_seed) {
    Rng rng(seed_split(body_seed, "body-jitter"));
    return rng.uniform_int(3) - 1;
}

void fill(EditMask& m, int y0, int y1, int x0, int x1) {
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) m.at(y, x) = 1.0;
}

std::array<EditMask, part_count> body_part_masks(int dx) {
    std::array<EditMask, part_count> parts;
    for (EditMask& p : parts) p = EditMask(kImageSize, kImageSize);
    fill(parts[part_head], kHeadTop, kHeadBottom, kHeadLeft + dx, kHeadRight + dx);
    fill(parts[part_torso], kTorsoTop, kTorsoBottom, kTorsoLeft + dx, kTorsoRight + dx);
    fill(parts[part_left_arm], kArmTop, kArmBottom, kLeftArmLeft + dx, kLeftArmRight + dx);
    fill(parts[part_right_arm], kArmTop, kArmBottom, kRightArmLeft + dx, kRightArmRight + dx);
    fill(parts[part_left_leg], kLegTop, kLegBottom, kLeftLegLeft + dx, kLeftLegRight + dx);
    fill(parts[part_right_leg], kLegTop, kLegBottom, kRightLegLeft + dx, kRightLegRight + dx);
    return parts;
}

int sleeve_bottom(Sleeve s) { return s == Sleeve::short_ ? kSleeveShortBottom : kArmBottom; }

EditMask sleeve_area(const GarmentSpec& spec, int dx) {
    EditMask m(kImageSize, kImageSize);
    if (spec.kind == Kind::pants || spec.sleeve == Sleeve::none) return m;
    int bottom = sleeve_bottom(spec.sleeve);
    fill(m, kArmTop, bottom, kLeftSleeveLeft + dx, kLeftArmRight + dx);
    fill(m, kArmTop, bottom, kRightArmLeft + dx, kRightSleeveRight + dx);
    return m;
}

EditMask cloth_mask_for(const GarmentSpec& spec, int dx) {
    EditMask m(kImageSize, kImageSize);
    if (spec.kind == Kind::pants) {
        fill(m, kLegTop, kLegBottom, kLeftLegLeft + dx, kRightLegRight + dx);
        return m;
    }
    fill(m, kTorsoTop, kTorsoBottom, kTorsoLeft + dx, kTorsoRight + dx);
    // collar notch: round exposes the top row of the neckline, v both rows
    m.at(kCollarTop, kCollarLeft + dx) = 0.0;
    m.at(kCollarTop, kCollarRight + dx) = 0.0;
    if (spec.collar == Collar::v) {
        m.at(kCollarBottom, kCollarLeft + dx) = 0.0;
        m.at(kCollarBottom, kCollarRight + dx) = 0.0;
    }
    if (spec.sleeve != Sleeve::none) {
        int bottom = sleeve_bottom(spec.sleeve);
        fill(m, kArmTop, bottom, kLeftSleeveLeft + dx, kLeftArmRight + dx);
        fill(m, kArmTop, bottom, kRightArmLeft + dx, kRightSleeveRight + dx);
    }
    if (spec.kind == Kind::dress)
        fill(m, kSkirtTop, kSkirtBottom, kTorsoLeft + dx, kTorsoRight + dx);
    return m;
}

EditMask mask_union(const EditMask& a, const EditMask& b) {
    EditMask out = a;
    for (size_t i = 0; i < out.data.size(); ++i)
        if (b.data[i] > 0.0) out.data[i] = 1.0;
    return out;
}

std::array<double, 3> garment_pixel(const GarmentSpec& spec, int y, int x) {
    std::array<double, 3> c = color_rgb(spec.color);
    switch (spec.pattern) {
    case Pattern::solid:
        return c;
    case Pattern::striped:
        if (y % 2 == 1)
            return {(c[0] - 1.0) / 2.0, (c[1] - 1.0) / 2.0, (c[2] - 1.0) / 2.0};
        return c;
    case Pattern::dotted:
        if (y % 3 == 1 && x % 3 == 1) return {-c[0], -c[1], -c[2]};
        return c;
    }
    throw ParameterError("garment_pixel: bad pattern value");
}

GarmentSpec canonical_pants(GarmentSpec spec) {
    if (spec.kind == Kind::pants) {
        spec.sleeve = Sleeve::none;
        spec.collar = Collar::round;
    }
    return spec;
}

} // namespace

std::array<double, 3> color_rgb(Color c) {
    switch (c) {
    case Color::red: return {1.0, -1.0, -1.0};
    case Color::green: return {-1.0, 1.0, -1.0};
    case Color::blue: return {-1.0, -1.0, 1.0};
    case Color::yellow: return {1.0, 1.0, -1.0};
    case Color::white: return {1.0, 1.0, 1.0};
    case Color::black: return {-1.0, -1.0, -1.0};
    }
    throw ParameterError("color_rgb: bad color value");
}

std::string kind_name(Kind k) {
    switch (k) {
    case Kind::tshirt: return "t-shirt";
    case Kind::dress: return "dress";
    case Kind::pants: return "pants";
    }
    throw ParameterError("kind_name: bad kind value");
}

std::string color_name(Color c) {
    switch (c) {
    case Color::red: return "red";
    case Color::green: return "green";
    case Color::blue: return "blue";
    case Color::yellow: return "yellow";
    case Color::white: return "white";
    case Color::black: return "black";
    }
    throw ParameterError("color_name: bad color value");
}

std::string sleeve_name(Sleeve s) {
    switch (s) {
    case Sleeve::none: return "sleeveless";
    case Sleeve::short_: return "short sleeve";
    case Sleeve::long_: return "long sleeve";
    }
    throw ParameterError("sleeve_name: bad sleeve value");
}

std::string collar_name(Collar c) {
    switch (c) {
    case Collar::round: return "round collar";
    case Collar::v: return "v collar";
    }
    throw ParameterError("collar_name: bad collar value");
}

std::string pattern_name(Pattern p) {
    switch (p) {
    case Pattern::solid: return "solid";
    case Pattern::striped: return "striped";
    case Pattern::dotted: return "dotted";
    }
    throw ParameterError("pattern_name: bad pattern value");
}

namespace {

template <typename E>
E parse_name(const std::string& name, const char* what, int count, std::string (*render)(E)) {
    for (int i = 0; i < count; ++i)
        if (render(E(i)) == name) return E(i);
    throw FormatError(std::string("unknown ") + what + " '" + name + "'");
}

} // namespace

Kind parse_kind(const std::string& name) { return parse_name<Kind>(name, "kind", 3, kind_name); }

Color parse_color(const std::string& name) {
    return parse_name<Color>(name, "color", 6, color_name);
}

Sleeve parse_sleeve(const std::string& name) {
    return parse_name<Sleeve>(name, "sleeve", 3, sleeve_name);
}

Collar parse_collar(const std::string& name) {
    return parse_name<Collar>(name, "collar", 2, collar_name);
}

Pattern parse_pattern(const std::string& name) {
    return parse_name<Pattern>(name, "pattern", 3, pattern_name);
}

std::string caption(const GarmentSpec& spec) {
    return "a " + color_name(spec.color) + " " + sleeve_name(spec.sleeve) + " " +
           collar_name(spec.collar) + " " + pattern_name(spec.pattern) + " " +
           kind_name(spec.kind);
}

GarmentSpec parse_caption(const std::string& text) {
    std::vector<std::string> tokens = tokenize(text);
    size_t pos = 0;
    auto next = [&]() -> const std::string& {
        if (pos >= tokens.size()) throw FormatError("caption '" + text + "': truncated");
        return tokens[pos++];
    };
    auto fail = [&](const std::string& what, const std::string& got) -> GarmentSpec {
        throw FormatError("caption '" + text + "': expected " + what + ", got '" + got + "'");
    };

    GarmentSpec spec;
    if (const std::string& t = next(); t != "a") return fail("article 'a'", t);

    const std::string& color = next();
    if (color == "red") spec.color = Color::red;
    else if (color == "green") spec.color = Color::green;
    else if (color == "blue") spec.color = Color::blue;
    else if (color == "yellow") spec.color = Color::yellow;
    else if (color == "white") spec.color = Color::white;
    else if (color == "black") spec.color = Color::black;
    else return fail("a color word", color);

    const std::string& sleeve = next();
    if (sleeve == "sleeveless") {
        spec.sleeve = Sleeve::none;
    } else if (sleeve == "short" || sleeve == "long") {
        spec.sleeve = sleeve == "short" ? Sleeve::short_ : Sleeve::long_;
        if (const std::string& t = next(); t != "sleeve") return fail("'sleeve'", t);
    } else {
        return fail("a sleeve phrase", sleeve);
    }

    const std::string& collar = next();
    if (collar == "round") spec.collar = Collar::round;
    else if (collar == "v") spec.collar = Collar::v;
    else return fail("a collar shape", collar);
    if (const std::string& t = next(); t != "collar") return fail("'collar'", t);

    const std::string& pattern = next();
    if (pattern == "solid") spec.pattern = Pattern::solid;
    else if (pattern == "striped") spec.pattern = Pattern::striped;
    else if (pattern == "dotted") spec.pattern = Pattern::dotted;
    else return fail("a pattern word", pattern);

    const std::string& kind = next();
    if (kind == "t-shirt") spec.kind = Kind::tshirt;
    else if (kind == "dress") spec.kind = Kind::dress;
    else if (kind == "pants") spec.kind = Kind::pants;
    else return fail("a garment kind", kind);

    if (pos != tokens.size())
        throw FormatError("caption '" + text + "': trailing token '" + tokens[pos] + "'");
    return spec;
}

Sample render(const GarmentSpec& spec, uint64_t body_seed) {
    int dx = body_jitter(body_seed);
    std::array<EditMask, part_count> parts = body_part_masks(dx);

    Sample s;
    s.spec = spec;
    s.body_seed = body_seed;
    s.caption = PromptText{caption(spec)};
    s.cloth_mask = cloth_mask_for(spec, dx);

    EditMask body(kImageSize, kImageSize);
    for (const EditMask& p : parts) body = mask_union(body, p);
    s.foreground = mask_union(body, s.cloth_mask);

    s.parts = LatentImage(part_count, kImageSize, kImageSize);
    for (int p = 0; p < part_count; ++p)
        std::copy(parts[size_t(p)].data.begin(), parts[size_t(p)].data.end(),
                  s.parts.data.begin() + size_t(p) * parts[size_t(p)].data.size());

    s.image = LatentImage(3, kImageSize, kImageSize);
    for (int y = 0; y < kImageSize; ++y)
        for (int x = 0; x < kImageSize; ++x) {
            std::array<double, 3> px = kBackground;
            if (body.at(y, x) > 0.0) px = kSkin;
            if (s.cloth_mask.at(y, x) > 0.0) px = garment_pixel(spec, y, x);
            for (int c = 0; c < 3; ++c) s.image.at(c, y, x) = px[size_t(c)];
        }
    return s;
}

LatentImage render_display(const LatentImage& image, int scale) {
    if (scale < 1) throw ParameterError("render_display: scale must be >= 1");
    LatentImage out(image.channels, image.height * scale, image.width * scale);
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x)
                out.at(c, y, x) = image.at(c, y / scale, x / scale);
    return out;
}

EditMask editing_region(const GarmentSpec& src, const GarmentSpec& tgt, uint64_t body_seed) {
    if (src == tgt) throw ParameterError("editing_region: source and target specs are identical");
    int dx = body_jitter(body_seed);

    // any appearance-wide change claims the whole garment on both sides
    if (src.color != tgt.color || src.pattern != tgt.pattern || src.kind != tgt.kind)
        return mask_union(cloth_mask_for(src, dx), cloth_mask_for(tgt, dx));

    EditMask region(kImageSize, kImageSize);
    if (src.sleeve != tgt.sleeve)
        region = mask_union(sleeve_area(src, dx), sleeve_area(tgt, dx));
    if (src.collar != tgt.collar) {
        EditMask cloth = mask_union(cloth_mask_for(src, dx), cloth_mask_for(tgt, dx));
        for (int y = kCollarTop; y <= kCollarBottom; ++y)
            for (int x = kCollarLeft + dx; x <= kCollarRight + dx; ++x)
                if (cloth.at(y, x) > 0.0) region.at(y, x) = 1.0;
    }
    return region;
}

std::string task_type_name(TaskType t) {
    switch (t) {
    case TaskType::color: return "color";
    case TaskType::detail: return "detail";
    case TaskType::material: return "material";
    case TaskType::comprehensive: return "comprehensive";
    }
    throw ParameterError("task_type_name: bad task type value");
}

TaskType parse_task_type(const std::string& name) {
    if (name == "color") return TaskType::color;
    if (name == "detail") return TaskType::detail;
    if (name == "material") return TaskType::material;
    if (name == "comprehensive") return TaskType::comprehensive;
    throw FormatError("unknown task type '" + name + "'");
}

std::pair<GarmentSpec, GarmentSpec> sample_task_specs(TaskType type, Rng& rng) {
    auto other_color = [&](Color c) {
        int v = rng.uniform_int(5);
        if (v >= int(c)) ++v;
        return Color(v);
    };
    auto other_sleeve = [&](Sleeve s) {
        int v = rng.uniform_int(2);
        if (v >= int(s)) ++v;
        return Sleeve(v);
    };
    auto other_pattern = [&](Pattern p) {
        int v = rng.uniform_int(2);
        if (v >= int(p)) ++v;
        return Pattern(v);
    };

    GarmentSpec src;
    bool garment_only = type == TaskType::detail || type == TaskType::comprehensive;
    src.kind = garment_only ? Kind(rng.uniform_int(2)) : Kind(rng.uniform_int(3));
    src.color = Color(rng.uniform_int(6));
    src.sleeve = Sleeve(rng.uniform_int(3));
    src.collar = Collar(rng.uniform_int(2));
    src.pattern = type == TaskType::material ? Pattern(rng.uniform_int(3)) : Pattern::solid;
    src = canonical_pants(src);

    GarmentSpec tgt = src;
    switch (type) {
    case TaskType::color:
        tgt.color = other_color(src.color);
        break;
    case TaskType::material:
        tgt.pattern = other_pattern(src.pattern);
        break;
    case TaskType::comprehensive:
        tgt.color = other_color(src.color);
        [[fallthrough]];
    case TaskType::detail:
        if (rng.uniform_int(2) == 0)
            tgt.sleeve = other_sleeve(src.sleeve);
        else
            tgt.collar = src.collar == Collar::round ? Collar::v : Collar::round;
        break;
    }
    return {src, tgt};
}

MaskInput task_mask_input(const Sample& source, const PromptText& target_prompt,
                          const ShapeVocabulary& vocab, const EmbeddingTable& table) {
    MaskPrompt mask_prompt = extract_mask_prompt(target_prompt, vocab);
    return MaskInput{source.foreground, source.parts, embed_prompt(mask_prompt, table)};
}

std::vector<TrainTriple> gen_training_set(int n, uint64_t seed, const ShapeVocabulary& vocab,
                                          const EmbeddingTable& table) {
    if (n < 1) throw ParameterError("gen_training_set: n must be >= 1");
    std::vector<TrainTriple> out;
    out.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(seed_split(seed, "train-task", uint64_t(i)));
        TaskType type = TaskType(rng.uniform_int(4));
        auto [src, tgt] = sample_task_specs(type, rng);
        uint64_t body_seed = seed_split(seed, "train-body", uint64_t(i));
        Sample sample = render(src, body_seed);

        TrainTriple triple;
        triple.target_prompt = PromptText{caption(tgt)};
        triple.input = task_mask_input(sample, triple.target_prompt, vocab, table);
        triple.truth = editing_region(src, tgt, body_seed);
        triple.source = src;
        triple.target = tgt;
        triple.type = type;
        triple.body_seed = body_seed;
        out.push_back(std::move(triple));
    }
    return out;
}

std::vector<TrainTriple> gen_training_set(int n, uint64_t seed) {
    return gen_training_set(n, seed, default_shape_vocabulary(), default_embedding_table());
}

std::vector<EditTask> gen_eval_set(int n_per_task, uint64_t seed) {
    if (n_per_task < 1) throw ParameterError("gen_eval_set: n_per_task must be >= 1");
    std::vector<EditTask> out;
    out.reserve(size_t(n_per_task) * 4);
    for (int t = 0; t < 4; ++t)
        for (int j = 0; j < n_per_task; ++j) {
            int id = t * n_per_task + j;
            Rng rng(seed_split(seed, "eval-task", uint64_t(id)));
            auto [src, tgt] = sample_task_specs(TaskType(t), rng);
            uint64_t body_seed = seed_split(seed, "eval-body", uint64_t(id));

            EditTask task;
            task.id = id;
            task.type = TaskType(t);
            task.input = render(src, body_seed);
            task.target_prompt = PromptText{caption(tgt)};
            task.target = tgt;
            task.region = editing_region(src, tgt, body_seed);
            out.push_back(std::move(task));
        }
    return out;
}

} // namespace madiff
