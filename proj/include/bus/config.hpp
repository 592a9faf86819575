#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bus/dataset.hpp"
#include "bus/trainer.hpp"

namespace bus {

/// Full run configuration, loadable from a textual key=value file. Unknown
/// keys are rejected; every value is validated on load. emit() prints every
/// key explicitly so an effective-config echo round-trips exactly.
struct RunConfig {
    std::string out_dir = "runs/out";
    std::string archive_dir;  // resolved to <out_dir>/benchmark when empty
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::uint64_t scene_seed = 7;
    int source_count = 200;
    int target_count = 200;
    SceneConfig scene;
    TrainerConfig trainer;

    static RunConfig defaults();

    /// Parse from file, then apply key=value override strings.
    static RunConfig load(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

    /// Apply one "key=value" assignment.
    void set(const std::string& key, const std::string& value);

    std::string emit() const;
    void validate() const;
};

}  // namespace bus
