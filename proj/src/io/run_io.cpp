#include "madiff/io/run_io.hpp"

#include "madiff/errors.hpp"

#include "json.hpp"
#include "madiff/io/png_io.hpp"


#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace madiff::io {

nlohmann::json garment_spec_to_json(const GarmentSpec& spec) {
    return nlohmann::json{{"kind", kind_name(spec.kind)},
                          {"color", color_name(spec.color)},
                          {"sleeve", sleeve_name(spec.sleeve)},
                          {"collar", collar_name(spec.collar)},
                          {"pattern", pattern_name(spec.pattern)}};
}

namespace {

template <typename T>
T parse_field(const nlohmann::json& j, const char* key, T (*parse)(const std::string&)) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw FormatError(std::string("garment spec: missing or non-string field '") + key + "'");
    return parse(j.at(key).get<std::string>());
}

} // namespace

GarmentSpec garment_spec_from_json(const nlohmann::json& j) {
    GarmentSpec spec;
    spec.kind = parse_field<Kind>(j, "kind", parse_kind);
    spec.color = parse_field<Color>(j, "color", parse_color);
    spec.sleeve = parse_field<Sleeve>(j, "sleeve", parse_sleeve);
    spec.collar = parse_field<Collar>(j, "collar", parse_collar);
    spec.pattern = parse_field<Pattern>(j, "pattern", parse_pattern);
    return spec;
}

namespace {

std::string stem_for(size_t line) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", line);
    return buf;
}

// The one-hot part planes as binary masks, for the palette PNG.
std::vector<EditMask> part_masks(const LatentImage& parts) {
    std::vector<EditMask> out;
    for (int c = 0; c < parts.channels; ++c) {
        EditMask m(parts.height, parts.width);
        for (int y = 0; y < parts.height; ++y)
            for (int x = 0; x < parts.width; ++x) m.at(y, x) = parts.at(c, y, x) > 0.5 ? 1.0 : 0.0;
        out.push_back(std::move(m));
    }
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_sample_files(const fs::path& dir, const std::string& stem, const Sample& sample,
                        const EditMask& mask) {
    write_rgb_png(sample.image, (dir / "images" / (stem + ".png")).string());
    write_mask_png(mask, (dir / "masks" / (stem + ".png")).string());
    write_parts_png(part_masks(sample.parts), (dir / "parts" / (stem + ".png")).string());
    write_rgb_png(render_display(sample.image), (dir / "display" / (stem + ".png")).string());
}

bool masks_equal(const EditMask& a, const EditMask& b) {
    if (a.height != b.height || a.width != b.width) return false;
    for (size_t i = 0; i < a.data.size(); ++i)
        if ((a.data[i] != 0) != (b.data[i] != 0)) return false;
    return true;
}

} // namespace

void write_dataset(const std::string& dir, const std::vector<TrainTriple>& train,
                   const std::vector<EditTask>& eval_tasks) {
    fs::path root(dir);
    ensure_dir(root / "images");
    ensure_dir(root / "masks");
    ensure_dir(root / "parts");
    ensure_dir(root / "display");

    std::ostringstream meta;
    size_t line = 0;
    for (const auto& triple : train) {
        Sample sample = render(triple.source, triple.body_seed);
        std::string stem = stem_for(line);
        write_sample_files(root, stem, sample, triple.truth);
        nlohmann::json j{{"id", line},
                         {"split", "train"},
                         {"task", task_type_name(triple.type)},
                         {"caption", sample.caption.text},
                         {"target_caption", triple.target_prompt.text},
                         {"source_spec", garment_spec_to_json(triple.source)},
                         {"target_spec", garment_spec_to_json(triple.target)},
                         {"body_seed", triple.body_seed}};
        meta << j.dump() << "\n";
        ++line;
    }
    for (const auto& task : eval_tasks) {
        std::string stem = stem_for(line);
        write_sample_files(root, stem, task.input, task.region);
        nlohmann::json j{{"id", line},
                         {"split", "eval"},
                         {"task", task_type_name(task.type)},
                         {"task_id", task.id},
                         {"caption", task.input.caption.text},
                         {"target_caption", task.target_prompt.text},
                         {"source_spec", garment_spec_to_json(task.input.spec)},
                         {"target_spec", garment_spec_to_json(task.target)},
                         {"body_seed", task.input.body_seed}};
        meta << j.dump() << "\n";
        ++line;
    }
    write_text_file((root / "meta.jsonl").string(), meta.str());
}

Dataset load_dataset(const std::string& dir, bool verify_files, const ShapeVocabulary& vocab,
                     const EmbeddingTable& table) {
    fs::path root(dir);
    std::ifstream in(root / "meta.jsonl");
    if (!in) throw IoError("cannot open '" + (root / "meta.jsonl").string() + "'");

    Dataset data;
    std::string text;
    size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("meta.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
        std::string split = j.value("split", "");
        if (split != "train" && split != "eval")
            throw FormatError("meta.jsonl line " + std::to_string(line_no) +
                              ": unknown split '" + split + "'");
        GarmentSpec source;
        GarmentSpec target;
        TaskType type;
        uint64_t body_seed;
        std::string target_caption;
        try {
            source = garment_spec_from_json(j.at("source_spec"));
            target = garment_spec_from_json(j.at("target_spec"));
            type = parse_task_type(j.at("task").get<std::string>());
            body_seed = j.at("body_seed").get<uint64_t>();
            target_caption = j.at("target_caption").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("meta.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }

        Sample sample = render(source, body_seed);
        EditMask region = editing_region(source, target, body_seed);
        PromptText prompt{target_caption};

        if (verify_files) {
            std::string stem = stem_for(size_t(j.at("id").get<uint64_t>()));
            EditMask stored = read_mask_png((root / "masks" / (stem + ".png")).string());
            if (!masks_equal(stored, region))
                throw FormatError("meta.jsonl line " + std::to_string(line_no) +
                                  ": stored mask does not match the spec-derived region");
            auto stored_parts = read_parts_png((root / "parts" / (stem + ".png")).string(),
                                               sample.parts.channels);
            auto derived = part_masks(sample.parts);
            for (size_t k = 0; k < derived.size(); ++k)
                if (!masks_equal(stored_parts[k], derived[k]))
                    throw FormatError("meta.jsonl line " + std::to_string(line_no) +
                                      ": stored part masks do not match the spec");
        }

        if (split == "train") {
            TrainTriple triple;
            triple.input = task_mask_input(sample, prompt, vocab, table);
            triple.truth = region;
            triple.target_prompt = prompt;
            triple.source = source;
            triple.target = target;
            triple.type = type;
            triple.body_seed = body_seed;
            data.train.push_back(std::move(triple));
        } else {
            EditTask task;
            task.id = j.value("task_id", -1);
            if (task.id < 0)
                throw FormatError("meta.jsonl line " + std::to_string(line_no) +
                                  ": eval sample without task_id");
            task.type = type;
            task.input = std::move(sample);
            task.target_prompt = prompt;
            task.target = target;
            task.region = std::move(region);
            data.eval.push_back(std::move(task));
        }
    }
    if (in.bad()) throw IoError("failed reading '" + (root / "meta.jsonl").string() + "'");
    return data;
}

void write_run_dir(const std::string& dir, const EditResult& result,
                   const nlohmann::json* result_json) {
    fs::path root(dir);
    ensure_dir(root);
    // Provenance goes first so a crash mid-run leaves the config on disk.
    write_text_file((root / "provenance.json").string(), result.provenance.dump(2) + "\n");
    write_rgb_png(result.x_out, (root / "x_out.png").string());
    write_mask_png(result.mask, (root / "mask.png").string());
    LatentImage soft(1, result.soft_mask.height, result.soft_mask.width);
    soft.data = result.soft_mask.data;
    write_gray_png(soft, (root / "soft_mask.png").string());
    write_attention_png(result.attention, (root / "attention.png").string(),
                        (root / "attention.json").string());
    write_rgb_png(result.x_s, (root / "x_s.png").string());
    write_rgb_png(result.x_s_no, (root / "x_s_no.png").string());
    write_rgb_png(result.x_s_re, (root / "x_s_re.png").string());
    if (result_json != nullptr)
        write_text_file((root / "result.json").string(), result_json->dump(2) + "\n");
    nlohmann::json timings{{"wall_seconds", result.wall_seconds}};
    write_text_file((root / "timings.json").string(), timings.dump(2) + "\n");
}

} // namespace madiff::io
