#include "madiff/datagen.hpp"
#include "madiff/errors.hpp"

#include "json.hpp"
#include "madiff/eval.hpp"
#include "madiff/io/png_io.hpp"
#include "madiff/io/run_io.hpp"
#include "madiff/masknet.hpp"
#include "madiff/pipeline.hpp"
#include "madiff/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace madiff;

namespace {

constexpr const char* kVersion = "madiff 0.1.0";

// Exit codes shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;

nlohmann::json provenance_for(const std::string& command, const nlohmann::json& config) {
    return nlohmann::json{{"command", command}, {"config", config}, {"version", kVersion}};
}

void write_provenance(const std::string& dir, const nlohmann::json& prov) {
    io::write_text_file((fs::path(dir) / "provenance.json").string(), prov.dump(2) + "\n");
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

// ---------------------------------------------------------------- gen-data

struct GenDataOpts {
    int train = 2000;
    int eval_per_task = 50;
    uint64_t seed = 0;
    std::string out;
};

int cmd_gen_data(const GenDataOpts& opt) {
    ensure_dir(opt.out);
    nlohmann::json config{{"train", opt.train},
                          {"eval_per_task", opt.eval_per_task},
                          {"seed", opt.seed},
                          {"out", opt.out}};
    write_provenance(opt.out, provenance_for("gen-data", config));

    auto train = gen_training_set(opt.train, opt.seed);
    auto eval_tasks = gen_eval_set(opt.eval_per_task, seed_split(opt.seed, "eval-set"));
    io::write_dataset(opt.out, train, eval_tasks);
    std::printf("wrote %zu training and %zu eval samples to %s\n", train.size(),
                eval_tasks.size(), opt.out.c_str());
    return kExitOk;
}

// ----------------------------------------------------------- train-masknet

struct TrainOpts {
    std::string data;
    std::string out = "masknet-run";
    std::string init_checkpoint;
    int epochs = 40;
    int max_steps = 0;
    double lr = 1e-2;
    int batch = 16;
    uint64_t seed = 0;
    double binarize_threshold = 0.5;
};

std::vector<MaskExample> to_examples(const std::vector<TrainTriple>& triples) {
    std::vector<MaskExample> out;
    out.reserve(triples.size());
    for (const auto& t : triples) out.push_back({t.input, t.truth});
    return out;
}

std::vector<MaskExample> eval_examples(const std::vector<EditTask>& tasks) {
    std::vector<MaskExample> out;
    out.reserve(tasks.size());
    auto vocab = default_shape_vocabulary();
    auto table = default_embedding_table();
    for (const auto& t : tasks)
        out.push_back({task_mask_input(t.input, t.target_prompt, vocab, table), t.region});
    return out;
}

int cmd_train_masknet(const TrainOpts& opt) {
    ensure_dir(opt.out);
    MaskTrainConfig tc;
    tc.lr = opt.lr;
    tc.batch = opt.batch;
    tc.epochs = opt.epochs;
    tc.max_steps = opt.max_steps;
    tc.seed = opt.seed;
    tc.binarize_threshold = opt.binarize_threshold;

    nlohmann::json config{{"data", opt.data},          {"out", opt.out},
                          {"init_checkpoint", opt.init_checkpoint},
                          {"epochs", opt.epochs},      {"max_steps", opt.max_steps},
                          {"lr", opt.lr},              {"batch", opt.batch},
                          {"seed", opt.seed},          {"binarize_threshold", opt.binarize_threshold}};
    write_provenance(opt.out, provenance_for("train-masknet", config));

    io::Dataset data = io::load_dataset(opt.data);
    auto train = to_examples(data.train);
    auto val = eval_examples(data.eval);

    MaskNet model = opt.init_checkpoint.empty()
                        ? MaskNet(MaskNetConfig{})
                        : load_masknet(opt.init_checkpoint);
    TrainingReport report = train_masknet(model, train, val, tc);

    std::string ckpt = (fs::path(opt.out) / "masknet.ckpt").string();
    save_masknet(ckpt, model, nlohmann::json{{"trained_on", opt.data}, {"seed", opt.seed}});
    io::write_text_file((fs::path(opt.out) / "training_report.json").string(),
                        report.to_json().dump(2) + "\n");
    std::printf("steps %d  train loss %.6f -> %.6f  best val IoU %.4f (epoch %d)\n",
                report.steps_run, report.initial_loss, report.final_loss, report.best_val_iou,
                report.best_epoch);
    return kExitOk;
}

// --------------------------------------------------------------------- edit

struct EditOpts {
    std::string image;
    std::string prompt;
    std::string source_caption;
    uint64_t body_seed = 0;
    std::string out;
    std::string checkpoint;
    std::string mask_source = "masknet";
    bool no_attention_processor = false;
    double noise_level = 0.1;
    int raw_steps = 1000;
    int stride = 20;
    int inversion_depth = 35;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    double binarize_threshold = 0.5;
    uint64_t seed = 0;
    std::string llm_endpoint; // config/flag value; env is the fallback
};

EditConfig edit_config_from(const EditOpts& opt) {
    EditConfig cfg;
    cfg.raw_steps = opt.raw_steps;
    cfg.beta_min = opt.beta_min;
    cfg.beta_max = opt.beta_max;
    cfg.stride = opt.stride;
    cfg.inversion_depth = opt.inversion_depth;
    cfg.seed = opt.seed;
    cfg.noise_level = opt.noise_level;
    cfg.mask_source = parse_mask_source(opt.mask_source);
    cfg.binarize_threshold = opt.binarize_threshold;
    cfg.attention_processor = !opt.no_attention_processor;
    return cfg;
}

// Classifies a spec change the way the task generator would, for provenance
// and scoring of hand-built edits.
TaskType infer_task_type(const GarmentSpec& src, const GarmentSpec& tgt) {
    bool color = src.color != tgt.color;
    bool shape = src.sleeve != tgt.sleeve || src.collar != tgt.collar;
    if (src.pattern != tgt.pattern) return TaskType::material;
    if (color && shape) return TaskType::comprehensive;
    if (shape) return TaskType::detail;
    return TaskType::color;
}

std::optional<MaskNet> load_optional_masknet(const std::string& checkpoint,
                                             MaskSource source) {
    if (source != MaskSource::masknet) return std::nullopt;
    if (checkpoint.empty())
        throw ConfigError("--mask-source masknet needs --checkpoint");
    return load_masknet(checkpoint);
}

int cmd_edit(const EditOpts& opt) {
    GarmentSpec source_spec = parse_caption(opt.source_caption);
    GarmentSpec target_spec = parse_caption(opt.prompt);

    EditTask task;
    task.id = 0;
    task.type = infer_task_type(source_spec, target_spec);
    task.input = render(source_spec, opt.body_seed);
    task.input.image = io::read_rgb_png(opt.image);
    if (task.input.image.height != kImageSize || task.input.image.width != kImageSize)
        throw FormatError("edit: input image must be " + std::to_string(kImageSize) + "x" +
                          std::to_string(kImageSize));
    task.target_prompt = PromptText{opt.prompt};
    task.target = target_spec;
    task.region = editing_region(source_spec, target_spec, opt.body_seed);

    EditConfig cfg = edit_config_from(opt);
    auto masknet = load_optional_masknet(opt.checkpoint, cfg.mask_source);

    TaskPipeline pipeline(task, cfg, masknet ? &*masknet : nullptr);
    std::string endpoint = resolve_llm_endpoint(opt.llm_endpoint);
    if (!endpoint.empty()) {
        LlmClient llm{endpoint};
        MaskPrompt mp = mask_prompt_for(task.target_prompt, default_shape_vocabulary(), &llm);
        pipeline.set_mask_embedding(embed_prompt(mp, default_embedding_table()));
    }
    EditResult result = pipeline.run(task, cfg);

    io::write_run_dir(opt.out, result);
    std::printf("edit written to %s (mask %d px)\n", opt.out.c_str(),
                int(std::count_if(result.mask.data.begin(), result.mask.data.end(),
                                  [](double v) { return v != 0; })));
    return kExitOk;
}

// --------------------------------------------------------------------- eval

struct EvalOpts {
    std::string data;
    std::string out = "eval-run";
    std::string checkpoint;
    std::string mask_source = "masknet";
    bool no_attention_processor = false;
    std::vector<std::string> task_filter;
    int limit = 0; // per type, 0 = all
    int jobs = 1;
    bool save_runs = false;
    double noise_level = 0.1;
    uint64_t seed = 0;
};

std::vector<EditTask> filter_tasks(std::vector<EditTask> tasks,
                                   const std::vector<std::string>& filter, int limit) {
    if (!filter.empty()) {
        std::vector<TaskType> keep;
        for (const auto& name : filter) keep.push_back(parse_task_type(name));
        std::vector<EditTask> out;
        for (auto& t : tasks)
            if (std::find(keep.begin(), keep.end(), t.type) != keep.end())
                out.push_back(std::move(t));
        tasks = std::move(out);
    }
    if (limit > 0) {
        std::map<TaskType, int> seen;
        std::vector<EditTask> out;
        for (auto& t : tasks)
            if (seen[t.type]++ < limit) out.push_back(std::move(t));
        tasks = std::move(out);
    }
    return tasks;
}

int cmd_eval(const EvalOpts& opt) {
    ensure_dir(opt.out);
    nlohmann::json config{{"data", opt.data},
                          {"out", opt.out},
                          {"checkpoint", opt.checkpoint},
                          {"mask_source", opt.mask_source},
                          {"attention_processor", !opt.no_attention_processor},
                          {"tasks", opt.task_filter},
                          {"limit", opt.limit},
                          {"jobs", opt.jobs},
                          {"noise_level", opt.noise_level},
                          {"seed", opt.seed}};
    write_provenance(opt.out, provenance_for("eval", config));

    io::Dataset data = io::load_dataset(opt.data);
    std::vector<EditTask> tasks = filter_tasks(std::move(data.eval), opt.task_filter, opt.limit);
    if (tasks.empty()) throw ConfigError("eval: no tasks left after filtering");

    EditConfig cfg;
    cfg.seed = opt.seed;
    cfg.noise_level = opt.noise_level;
    cfg.mask_source = parse_mask_source(opt.mask_source);
    cfg.attention_processor = !opt.no_attention_processor;
    auto masknet = load_optional_masknet(opt.checkpoint, cfg.mask_source);

    MetricReport report = run_benchmark(tasks, cfg, masknet ? &*masknet : nullptr, opt.jobs);

    if (opt.save_runs) {
        // Per-task run directories for post-hoc attention statistics.
        for (size_t i = 0; i < tasks.size(); ++i) {
            const TaskScore& score = report.tasks[i];
            if (score.failed) continue;
            EditConfig task_cfg = cfg;
            task_cfg.seed = seed_split(cfg.seed, "task-seed", uint64_t(tasks[i].id));
            EditResult result = run_task(tasks[i], task_cfg, masknet ? &*masknet : nullptr);
            nlohmann::json rj = score.to_json(false);
            rj["success"] = score.alignment >= 0.5;
            char stem[16];
            std::snprintf(stem, sizeof stem, "%04d", tasks[i].id);
            io::write_run_dir((fs::path(opt.out) / "runs" / stem).string(), result, &rj);
        }
    }

    io::write_text_file((fs::path(opt.out) / "report.json").string(),
                        report.to_json(true).dump(2) + "\n");
    io::write_text_file((fs::path(opt.out) / "report.md").string(), report.to_markdown());
    std::printf("%zu tasks (%d failed)  alignment %.3f  preservation %.3f  perceptual %.4f\n",
                report.tasks.size(), report.failures, report.mean_alignment,
                report.mean_preservation, report.mean_perceptual);
    return kExitOk;
}

// ------------------------------------------------------------------- ablate

struct AblateOpts {
    std::string out = "ablation-run";
    std::string checkpoint;
    std::vector<std::string> task_filter{"color"};
    int seeds = 50;
    int jobs = 1;
    double noise_level = 0.1;
    uint64_t seed = 0;
};

std::vector<EditTask> make_ablation_tasks(const std::vector<TaskType>& types, int per_type,
                                          uint64_t seed) {
    std::vector<EditTask> tasks;
    int id = 0;
    for (TaskType type : types) {
        for (int i = 0; i < per_type; ++i) {
            Rng rng(seed_split(seed, "ablate-task", uint64_t(id)));
            auto [src, tgt] = sample_task_specs(type, rng);
            uint64_t body_seed = seed_split(seed, "ablate-body", uint64_t(id));
            EditTask task;
            task.id = id;
            task.type = type;
            task.input = render(src, body_seed);
            task.target = tgt;
            task.target_prompt = PromptText{caption(tgt)};
            task.region = editing_region(src, tgt, body_seed);
            tasks.push_back(std::move(task));
            ++id;
        }
    }
    return tasks;
}

int cmd_ablate(const AblateOpts& opt) {
    ensure_dir(opt.out);
    nlohmann::json config{{"out", opt.out},       {"checkpoint", opt.checkpoint},
                          {"tasks", opt.task_filter}, {"seeds", opt.seeds},
                          {"jobs", opt.jobs},     {"noise_level", opt.noise_level},
                          {"seed", opt.seed}};
    write_provenance(opt.out, provenance_for("ablate", config));

    if (opt.checkpoint.empty()) throw ConfigError("ablate needs --checkpoint");
    MaskNet masknet = load_masknet(opt.checkpoint);

    std::vector<TaskType> types;
    for (const auto& name : opt.task_filter) types.push_back(parse_task_type(name));
    auto tasks = make_ablation_tasks(types, opt.seeds, opt.seed);

    EditConfig cfg;
    cfg.seed = opt.seed;
    cfg.noise_level = opt.noise_level;
    AblationReport report = run_ablation(tasks, cfg, &masknet, opt.jobs);

    io::write_text_file((fs::path(opt.out) / "ablation.json").string(),
                        report.to_json(true).dump(2) + "\n");
    io::write_text_file((fs::path(opt.out) / "ablation.md").string(), report.to_markdown());
    for (const auto& v : report.variants)
        std::printf("%-13s alignment %.3f  preservation %.3f  perceptual %.4f\n", v.name.c_str(),
                    v.mean_alignment, v.mean_preservation, v.mean_perceptual);
    return kExitOk;
}

// --------------------------------------------------------------- attn-stats

struct AttnStatsOpts {
    std::vector<std::string> runs;
    std::string out = "attn-stats";
};

int cmd_attn_stats(const AttnStatsOpts& opt) {
    if (opt.runs.empty()) throw ConfigError("attn-stats needs at least one run directory");
    ensure_dir(opt.out);
    nlohmann::json config{{"runs", opt.runs}, {"out", opt.out}};
    write_provenance(opt.out, provenance_for("attn-stats", config));

    std::vector<AttentionMap> maps;
    std::vector<bool> success;
    for (const auto& dir : opt.runs) {
        fs::path run(dir);
        maps.push_back(io::read_attention_png((run / "attention.png").string(),
                                              (run / "attention.json").string()));
        nlohmann::json rj;
        try {
            rj = nlohmann::json::parse(io::read_text_file((run / "result.json").string()));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("attn-stats: bad result.json in '" + dir + "': " + e.what());
        }
        if (!rj.contains("success") || !rj.at("success").is_boolean())
            throw FormatError("attn-stats: '" + dir + "' has no success flag in result.json");
        success.push_back(rj.at("success").get<bool>());
    }

    std::vector<const AttentionMap*> map_ptrs;
    for (const auto& m : maps) map_ptrs.push_back(&m);
    AttentionStats stats =
        attention_stats(map_ptrs, [&](size_t i) { return success[i]; });

    fs::path out(opt.out);
    io::write_attention_png(stats.success_mean, (out / "success_mean.png").string(),
                            (out / "success_mean.json").string());
    io::write_attention_png(stats.failure_mean, (out / "failure_mean.png").string(),
                            (out / "failure_mean.json").string());
    nlohmann::json summary{{"runs", opt.runs.size()},
                           {"success_count", stats.success_count},
                           {"failure_count", stats.failure_count},
                           {"success_empty", stats.success_empty},
                           {"failure_empty", stats.failure_empty}};
    io::write_text_file((out / "stats.json").string(), summary.dump(2) + "\n");
    std::printf("averaged %d success and %d failure runs into %s\n", stats.success_count,
                stats.failure_count, opt.out.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------- roundtrip

struct RoundtripOpts {
    int steps = 50;
    uint64_t seed = 0;
    std::string out; // optional run directory
    double threshold = 0.05;
};

int cmd_roundtrip(const RoundtripOpts& opt) {
    if (opt.steps < 1) throw ConfigError("roundtrip: --steps must be >= 1");
    constexpr int kRaw = 1000;
    if (kRaw % opt.steps != 0)
        throw ConfigError("roundtrip: --steps must divide " + std::to_string(kRaw));

    // A seeded color task supplies the mixture and the clean image.
    Rng rng(seed_split(opt.seed, "roundtrip-task"));
    auto [src, tgt] = sample_task_specs(TaskType::color, rng);
    uint64_t body_seed = seed_split(opt.seed, "roundtrip-body");
    Sample source = render(src, body_seed);
    Sample target = render(tgt, body_seed);

    GaussianMixtureModel gmm = task_mixture(source, target);
    NoiseSchedule schedule = with_inversion_depth(
        with_stride(build_schedule(kRaw, 1e-4, 0.02), kRaw / opt.steps), opt.steps);
    GaussianMixturePredictor predictor(gmm, schedule, std::string("edit"));

    Trajectory traj = invert(source.image, predictor, schedule);
    LatentImage recon =
        sample(traj.final_noise, schedule.total_steps(), 0, nullptr, predictor, nullptr, schedule)
            .first;
    double err = rel_l2_error(recon, source.image);

    nlohmann::json result{{"steps", opt.steps},
                          {"seed", opt.seed},
                          {"relative_error", err},
                          {"threshold", opt.threshold},
                          {"pass", err < opt.threshold}};
    if (!opt.out.empty()) {
        ensure_dir(opt.out);
        write_provenance(opt.out, provenance_for("roundtrip", result));
        io::write_text_file((fs::path(opt.out) / "result.json").string(),
                            result.dump(2) + "\n");
    }
    std::printf("roundtrip %d steps: relative error %.6f (threshold %.3f)\n", opt.steps, err,
                opt.threshold);
    return err < opt.threshold ? kExitOk : kExitCheckFailed;
}

int dispatch(const std::function<int()>& body) {
    try {
        return body();
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheckFailed;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitFormat;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Text-guided garment image editing on a synthetic wardrobe"};
    app.set_config("--config", "", "Read defaults from a TOML file");
    app.require_subcommand(1);

    int rc = kExitOk;

    GenDataOpts gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    gen_cmd->add_option("--train", gen.train, "Training triple count");
    gen_cmd->add_option("--eval", gen.eval_per_task, "Eval tasks per task type");
    gen_cmd->add_option("--seed", gen.seed, "Root seed");
    gen_cmd->add_option("--out", gen.out, "Dataset directory")->required();
    gen_cmd->callback([&] { rc = dispatch([&] { return cmd_gen_data(gen); }); });

    TrainOpts train;
    auto* train_cmd = app.add_subcommand("train-masknet", "Train the mask predictor");
    train_cmd->add_option("--data", train.data, "Dataset directory")->required();
    train_cmd->add_option("--out", train.out, "Output directory");
    train_cmd->add_option("--init-checkpoint", train.init_checkpoint,
                          "Resume from this checkpoint");
    train_cmd->add_option("--epochs", train.epochs, "Training epochs");
    train_cmd->add_option("--max-steps", train.max_steps, "Hard cap on gradient steps");
    train_cmd->add_option("--lr", train.lr, "Learning rate");
    train_cmd->add_option("--batch", train.batch, "Batch size");
    train_cmd->add_option("--seed", train.seed, "Shuffle seed");
    train_cmd->add_option("--binarize-threshold", train.binarize_threshold,
                          "Threshold for validation IoU");
    train_cmd->callback([&] { rc = dispatch([&] { return cmd_train_masknet(train); }); });

    EditOpts edit;
    auto* edit_cmd = app.add_subcommand("edit", "Edit one image from a text prompt");
    edit_cmd->add_option("--image", edit.image, "Input image (PNG)")->required();
    edit_cmd->add_option("--prompt", edit.prompt, "Target caption")->required();
    edit_cmd->add_option("--source-caption", edit.source_caption,
                         "Caption describing the input image")
        ->required();
    edit_cmd->add_option("--body-seed", edit.body_seed, "Body layout seed of the input");
    edit_cmd->add_option("--out", edit.out, "Run directory")->required();
    edit_cmd->add_option("--checkpoint", edit.checkpoint, "Mask predictor checkpoint");
    edit_cmd->add_option("--mask-source", edit.mask_source,
                         "masknet | foreground | attention-threshold");
    edit_cmd->add_flag("--no-attention-processor", edit.no_attention_processor,
                       "Skip the attention-guided substitution");
    edit_cmd->add_option("--noise-level", edit.noise_level, "Synthetic attention noise");
    edit_cmd->add_option("--raw-steps", edit.raw_steps, "Raw diffusion steps");
    edit_cmd->add_option("--stride", edit.stride, "Raw steps per effective step");
    edit_cmd->add_option("--inversion-depth", edit.inversion_depth,
                         "Effective steps kept from inversion");
    edit_cmd->add_option("--beta-min", edit.beta_min, "Schedule beta at t=1");
    edit_cmd->add_option("--beta-max", edit.beta_max, "Schedule beta at t=T");
    edit_cmd->add_option("--binarize-threshold", edit.binarize_threshold,
                         "Soft mask binarization threshold");
    edit_cmd->add_option("--seed", edit.seed, "Run seed");
    edit_cmd->add_option("--llm-endpoint", edit.llm_endpoint,
                         "Mask prompt endpoint (MADIFF_LLM_ENDPOINT as fallback)")
        ->envname("MADIFF_LLM_ENDPOINT");
    edit_cmd->callback([&] { rc = dispatch([&] { return cmd_edit(edit); }); });

    EvalOpts eval;
    auto* eval_cmd = app.add_subcommand("eval", "Score the eval split of a dataset");
    eval_cmd->add_option("--data", eval.data, "Dataset directory")->required();
    eval_cmd->add_option("--out", eval.out, "Report directory");
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "Mask predictor checkpoint");
    eval_cmd->add_option("--mask-source", eval.mask_source,
                         "masknet | foreground | attention-threshold");
    eval_cmd->add_flag("--no-attention-processor", eval.no_attention_processor,
                       "Skip the attention-guided substitution");
    eval_cmd->add_option("--tasks", eval.task_filter, "Task types to keep");
    eval_cmd->add_option("--limit", eval.limit, "Tasks per type (0 = all)");
    eval_cmd->add_option("--jobs", eval.jobs, "Worker threads");
    eval_cmd->add_flag("--save-runs", eval.save_runs, "Write per-task run directories");
    eval_cmd->add_option("--noise-level", eval.noise_level, "Synthetic attention noise");
    eval_cmd->add_option("--seed", eval.seed, "Run seed");
    eval_cmd->callback([&] { rc = dispatch([&] { return cmd_eval(eval); }); });

    AblateOpts ablate;
    auto* ablate_cmd = app.add_subcommand("ablate", "Compare mask and attention variants");
    ablate_cmd->add_option("--out", ablate.out, "Report directory");
    ablate_cmd->add_option("--checkpoint", ablate.checkpoint, "Mask predictor checkpoint")
        ->required();
    ablate_cmd->add_option("--tasks", ablate.task_filter, "Task types to run");
    ablate_cmd->add_option("--seeds", ablate.seeds, "Tasks per type");
    ablate_cmd->add_option("--jobs", ablate.jobs, "Worker threads");
    ablate_cmd->add_option("--noise-level", ablate.noise_level, "Synthetic attention noise");
    ablate_cmd->add_option("--seed", ablate.seed, "Root seed");
    ablate_cmd->callback([&] { rc = dispatch([&] { return cmd_ablate(ablate); }); });

    AttnStatsOpts attn;
    auto* attn_cmd = app.add_subcommand("attn-stats", "Average attention over run directories");
    attn_cmd->add_option("--runs", attn.runs, "Run directories")->required();
    attn_cmd->add_option("--out", attn.out, "Output directory");
    attn_cmd->callback([&] { rc = dispatch([&] { return cmd_attn_stats(attn); }); });

    RoundtripOpts rt;
    auto* rt_cmd = app.add_subcommand("roundtrip", "Invert and resample a clean image");
    rt_cmd->add_option("--steps", rt.steps, "Effective step count");
    rt_cmd->add_option("--seed", rt.seed, "Scene seed");
    rt_cmd->add_option("--out", rt.out, "Optional result directory");
    rt_cmd->add_option("--threshold", rt.threshold, "Pass threshold on relative error");
    rt_cmd->callback([&] { rc = dispatch([&] { return cmd_roundtrip(rt); }); });

    CLI11_PARSE(app, argc, argv);
    return rc;
}
