#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bus/config.hpp"

using namespace bus;
namespace fs = std::filesystem;

namespace {

fs::path write_temp_config(const std::string& body, const std::string& name) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("defaults emit explicitly and round-trip exactly") {
    const RunConfig defaults = RunConfig::defaults();
    const std::string emitted = defaults.emit();
    const fs::path path = write_temp_config(emitted, "busseg_cfg_roundtrip.txt");
    const RunConfig loaded = RunConfig::load(path);
    CHECK(loaded.emit() == emitted);
    fs::remove(path);
}

TEST_CASE("values, comments and overrides are honored") {
    const fs::path path = write_temp_config(
        "# comment line\n"
        "trainer.mode = head_expansion  # trailing comment\n"
        "trainer.steps = 17\n"
        "scene.width = 48\n"
        "morph.crop_size = 32\n"
        "seeds = 4,5\n",
        "busseg_cfg_values.txt");
    const RunConfig cfg = RunConfig::load(path, {"trainer.steps=21", "decon.weight=0.5"});
    CHECK(cfg.trainer.mode == TrainMode::kHeadExpansion);
    CHECK(cfg.trainer.steps == 21);  // override wins
    CHECK(cfg.scene.width == 48);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5});
    CHECK(cfg.trainer.decon.weight == 0.5);
    fs::remove(path);
}

TEST_CASE("unknown keys and malformed values are config errors") {
    const fs::path bad_key = write_temp_config("no.such.key = 1\n", "busseg_cfg_badkey.txt");
    CHECK_THROWS_AS(RunConfig::load(bad_key), ConfigError);
    fs::remove(bad_key);

    const fs::path bad_value =
        write_temp_config("trainer.steps = soon\n", "busseg_cfg_badval.txt");
    CHECK_THROWS_AS(RunConfig::load(bad_value), ConfigError);
    fs::remove(bad_value);

    const fs::path bad_line = write_temp_config("just words\n", "busseg_cfg_badline.txt");
    CHECK_THROWS_AS(RunConfig::load(bad_line), ConfigError);
    fs::remove(bad_line);

    RunConfig cfg;
    CHECK_THROWS_AS(cfg.set("trainer.mode", "something_else"), ConfigError);
}

TEST_CASE("thresholds are validated on load") {
    const fs::path path = write_temp_config("trainer.tau_p = 1.5\n", "busseg_cfg_tau.txt");
    CHECK_THROWS_AS(RunConfig::load(path), ConfigError);
    fs::remove(path);

    const fs::path priv = write_temp_config("scene.private_classes = 0,1,2,3,4\n",
                                            "busseg_cfg_priv.txt");
    CHECK_THROWS_AS(RunConfig::load(priv), ConfigError);
    fs::remove(priv);

    const fs::path crop =
        write_temp_config("morph.crop_size = 128\n", "busseg_cfg_crop.txt");
    CHECK_THROWS_AS(RunConfig::load(crop), ConfigError);
    fs::remove(crop);
}

TEST_CASE("missing config file is an io error") {
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/busseg.cfg"), IoError);
}

TEST_CASE("archive_dir resolves relative to out_dir when unset") {
    RunConfig cfg;
    cfg.out_dir = "work";
    const std::string emitted = cfg.emit();
    CHECK(emitted.find("archive_dir = work/benchmark") != std::string::npos);
    cfg.archive_dir = "elsewhere/bench";
    CHECK(cfg.emit().find("archive_dir = elsewhere/bench") != std::string::npos);
}
