#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bus/core.hpp"
#include "bus/rng.hpp"

namespace bus {

/// Photometric and geometric parameters of one domain.
struct DomainParams {
    double palette_rotation = 0.0;  // degrees, hue rotation about the gray axis
    double brightness = 0.0;        // additive offset
    double noise_sigma = 0.02;      // per-pixel gaussian noise
    int object_min_radius = 5;
    int object_max_radius = 9;
};

/// Synthetic benchmark layout: class ids [0, num_stuff) are horizontal
/// background bands, [num_stuff, num_stuff + num_things) are shape objects
/// (disc, square, triangle, cross, cycling).
struct SceneConfig {
    int width = 64, height = 64;
    int num_stuff = 2;
    int num_things = 3;
    int objects_min = 4;
    int objects_max = 7;
    DomainParams source;
    DomainParams target{25.0, 0.06, 0.03, 4, 11};
    std::vector<int> private_classes = {4};  // original ids, target-only at eval
    bool allow_stuff_private = false;

    int total_classes() const { return num_stuff + num_things; }
    bool is_thing(int class_id) const {
        return class_id >= num_stuff && class_id < total_classes();
    }
    void validate() const;
};

struct ScenePair {
    ImageTensor image;
    LabelMap label;
};

/// Two-domain open-set benchmark. Target ground truth lives only in
/// target_eval_labels and is never handed to the trainer.
struct Benchmark {
    ClassSpace class_space;
    std::vector<int> private_classes;      // original ids collapsed to unknown
    std::vector<int> known_thing_classes;  // re-indexed surviving thing classes
    int width = 0, height = 0;
    std::uint64_t seed = 0;
    std::vector<ImageTensor> source_images;
    std::vector<LabelMap> source_labels;
    std::vector<ImageTensor> target_images;
    std::vector<LabelMap> target_eval_labels;
};

/// Render one scene: stuff bands plus randomly placed non-overlapping shape
/// objects. Labels carry the original class id of every pixel. Placement
/// failures shrink the object count rather than failing.
ScenePair generate_scene(const DomainParams& domain, const SceneConfig& cfg, Rng& rng);

/// Open-set scenario transform: source pixels of private classes become
/// ignore, eval labels collapse them to the single unknown class, and the
/// surviving known classes are re-indexed densely to [0, C).
Benchmark apply_scenario(Benchmark raw, const std::vector<int>& private_ids,
                         const SceneConfig& cfg);

/// Generate both splits with their domain parameters and apply the scenario.
Benchmark build_benchmark(const SceneConfig& cfg, int source_count, int target_count,
                          std::uint64_t seed);

// Benchmark archive: PPM images, PGM labels, and a textual manifest.
void write_benchmark(const std::filesystem::path& dir, const Benchmark& bench);
Benchmark read_benchmark(const std::filesystem::path& dir);

/// FNV-1a over every file (sorted by relative path), for idempotence checks.
std::uint64_t archive_checksum(const std::filesystem::path& dir);

}  // namespace bus
