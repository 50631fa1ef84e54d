#pragma once

#include "madiff/latent.hpp"
#include "madiff/mask.hpp"
#include "madiff/masknet.hpp"
#include "madiff/prompt.hpp"
#include "madiff/rng.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace madiff {

// Closed attribute grammar for the procedural garment renderer. Every value
// set here is small on purpose: the captions, the raster geometry and the
// evaluation proxies all hang off the same enums.

enum class Kind { tshirt, dress, pants };
enum class Sleeve { none, short_, long_ }; // trailing _ dodges the keywords
enum class Collar { round, v };
enum class Pattern { solid, striped, dotted };
enum class Color { red, green, blue, yellow, white, black };

struct GarmentSpec {
    Kind kind = Kind::tshirt;
    Color color = Color::red;
    Sleeve sleeve = Sleeve::short_;
    Collar collar = Collar::round;
    Pattern pattern = Pattern::solid;

    bool operator==(const GarmentSpec&) const = default;
};

// Garment body color on [-1,1] channels. The six palette entries sit on
// RGB-cube corners (minimum pairwise distance 2), far from the fixed
// background and skin tones, so a 0.25-radius color test is unambiguous.
std::array<double, 3> color_rgb(Color c);

std::string kind_name(Kind k);
std::string color_name(Color c);
std::string sleeve_name(Sleeve s);   // "sleeveless" / "short sleeve" / "long sleeve"
std::string collar_name(Collar c);   // "round collar" / "v collar"
std::string pattern_name(Pattern p);

// Inverses of the *_name functions; FormatError on unknown names.
Kind parse_kind(const std::string& name);
Color parse_color(const std::string& name);
Sleeve parse_sleeve(const std::string& name);
Collar parse_collar(const std::string& name);
Pattern parse_pattern(const std::string& name);

// "a {color} {sleeve} {collar} {pattern} {kind}", the one caption template.
std::string caption(const GarmentSpec& spec);

// Exact inverse of caption(); anything off-template throws FormatError.
GarmentSpec parse_caption(const std::string& text);

// One-hot body part planes, in this channel order.
enum BodyPart { part_head = 0, part_torso, part_left_arm, part_right_arm,
                part_left_leg, part_right_leg, part_count };

// A rendered scene: garment on a fixed body template whose horizontal
// placement jitters by -1/0/+1 columns from body_seed.
struct Sample {
    LatentImage image;    // 3 x H x W, values in [-1, 1]
    PromptText caption;
    EditMask cloth_mask;  // garment pixels
    EditMask foreground;  // body plus garment pixels
    LatentImage parts;    // part_count x H x W one-hot body layout
    GarmentSpec spec;
    uint64_t body_seed = 0;
};

inline constexpr int kImageSize = 16;

Sample render(const GarmentSpec& spec, uint64_t body_seed);

// Nearest-neighbour upscale of the image for human inspection only.
LatentImage render_display(const LatentImage& image, int scale = 4);

// The pixels an edit from src to tgt is allowed to touch: the whole-garment
// union when color/pattern/kind changed, otherwise the union of the changed
// sleeve/collar zones. Identical specs throw ParameterError.
EditMask editing_region(const GarmentSpec& src, const GarmentSpec& tgt, uint64_t body_seed);

enum class TaskType { color, detail, material, comprehensive };

std::string task_type_name(TaskType t);
TaskType parse_task_type(const std::string& name); // FormatError on unknown names

// One benchmark item: a rendered source, the prompt describing the desired
// garment, and the ground truth the metrics need.
struct EditTask {
    int id = 0;
    TaskType type = TaskType::color;
    Sample input;
    PromptText target_prompt;
    GarmentSpec target;
    EditMask region; // ground-truth editing region
};

// One mask-predictor training item, plus the specs it was built from so
// datasets can be audited and round-tripped through disk.
struct TrainTriple {
    MaskInput input;
    EditMask truth;
    PromptText target_prompt;
    GarmentSpec source;
    GarmentSpec target;
    TaskType type = TaskType::color;
    uint64_t body_seed = 0;
};

// Draws (source, target) spec pairs from the per-task design:
//   color          any kind, solid pattern, new color
//   detail         t-shirt/dress, solid, new sleeve length or collar
//   material       any kind, new pattern
//   comprehensive  t-shirt/dress, solid, new color plus a detail change
// Pants have no sleeves or collar; their spec always carries the canonical
// (none, round) placeholders and those slots are never mutated.
std::pair<GarmentSpec, GarmentSpec> sample_task_specs(TaskType type, Rng& rng);

// n i.i.d. training triples. The mask prompt is extracted with the rule
// filter and embedded with the given table.
std::vector<TrainTriple> gen_training_set(int n, uint64_t seed, const ShapeVocabulary& vocab,
                                          const EmbeddingTable& table);
std::vector<TrainTriple> gen_training_set(int n, uint64_t seed);

// 4 * n_per_task tasks, grouped by type in enum order, ids 0..4n-1.
std::vector<EditTask> gen_eval_set(int n_per_task, uint64_t seed);

// Rebuilds the MaskNet input for a task (same construction as training
// triples), for pipelines that need one at edit time.
MaskInput task_mask_input(const Sample& source, const PromptText& target_prompt,
                          const ShapeVocabulary& vocab, const EmbeddingTable& table);

} // namespace madiff
