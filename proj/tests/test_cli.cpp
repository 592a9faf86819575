// End-to-end CLI tests: drive the built binary (path passed as the last
// argv entry by ctest) and check outputs and exit codes.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string g_bus_binary;
fs::path g_work;

struct CommandResult {
    int exit_code;
    std::string output;
};

CommandResult run_cli(const std::string& args) {
    const fs::path out_file = g_work / "cmd_output.txt";
    const std::string cmd = g_bus_binary + " " + args + " > " + out_file.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    std::ifstream in(out_file);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return {WEXITSTATUS(raw), buffer.str()};
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path write_config(const std::string& name, const std::string& extra = "") {
    const fs::path path = g_work / name;
    std::ofstream out(path);
    out << "out_dir = " << (g_work / "out").string() << "\n"
        << "seeds = 1\n"
        << "scene.width = 24\n"
        << "scene.height = 24\n"
        << "scene.source_count = 4\n"
        << "scene.target_count = 4\n"
        << "scene.objects_min = 1\n"
        << "scene.objects_max = 2\n"
        << "scene.source.object_min_radius = 3\n"
        << "scene.source.object_max_radius = 5\n"
        << "scene.target.object_min_radius = 3\n"
        << "scene.target.object_max_radius = 5\n"
        << "morph.crop_size = 16\n"
        << "trainer.steps = 4\n"
        << "trainer.batch_size = 1\n"
        << "trainer.hidden = 4\n"
        << extra;
    return path;
}

}  // namespace

TEST_CASE("missing subcommand is a usage error") {
    CHECK(run_cli("").exit_code == 1);
}

TEST_CASE("generate is idempotent and prints a checksum") {
    const fs::path cfg = write_config("gen.cfg");
    const CommandResult first = run_cli("generate --config " + cfg.string());
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("checksum") != std::string::npos);
    const CommandResult second = run_cli("generate --config " + cfg.string());
    CHECK(second.exit_code == 0);
    CHECK(second.output == first.output);
    CHECK(fs::exists(g_work / "out" / "benchmark" / "manifest.txt"));
}

TEST_CASE("invalid config values exit 1") {
    const fs::path cfg = write_config("bad.cfg", "scene.private_classes = 0,1,2,3,4\n");
    CHECK(run_cli("generate --config " + cfg.string()).exit_code == 1);
    const fs::path cfg2 = write_config("bad2.cfg");
    CHECK(run_cli("generate --config " + cfg2.string() + " --override no.such=1").exit_code == 1);
}

TEST_CASE("train without an archive exits 2") {
    const fs::path cfg = write_config("noarch.cfg", "archive_dir = " +
                                                        (g_work / "missing_arch").string() +
                                                        "\n");
    CHECK(run_cli("train --config " + cfg.string()).exit_code == 2);
}

TEST_CASE("train, eval and determinism of the full pipeline") {
    const fs::path cfg = write_config("full.cfg");
    REQUIRE(run_cli("generate --config " + cfg.string()).exit_code == 0);

    const fs::path run1 = g_work / "run1";
    const CommandResult train1 = run_cli("train --config " + cfg.string() +
                                         " --mode head_expansion --seed 5 --out " +
                                         run1.string());
    CHECK(train1.exit_code == 0);
    CHECK(fs::exists(run1 / "checkpoint.txt"));
    CHECK(fs::exists(run1 / "train_log.csv"));
    CHECK(fs::exists(run1 / "curves.svg"));
    CHECK(fs::exists(run1 / "effective_config.txt"));

    const fs::path run2 = g_work / "run2";
    REQUIRE(run_cli("train --config " + cfg.string() + " --mode head_expansion --seed 5 --out " +
                    run2.string())
                .exit_code == 0);
    CHECK(read_file(run1 / "checkpoint.txt") == read_file(run2 / "checkpoint.txt"));
    CHECK(read_file(run1 / "train_log.csv") == read_file(run2 / "train_log.csv"));

    const fs::path archive = g_work / "out" / "benchmark";
    const fs::path eval1 = g_work / "eval1";
    const CommandResult ev1 = run_cli("eval " + (run1 / "checkpoint.txt").string() + " " +
                                      archive.string() + " --out " + eval1.string());
    CHECK(ev1.exit_code == 0);
    double common = -1, priv = -1, h = -1;
    CHECK(std::sscanf(ev1.output.c_str(), "%lf %lf %lf", &common, &priv, &h) == 3);
    CHECK(common >= 0.0);
    CHECK(h >= 0.0);
    CHECK(fs::exists(eval1 / "report.json"));
    CHECK(fs::exists(eval1 / "report.csv"));
    CHECK(fs::exists(eval1 / "predictions" / "pred_00000.ppm"));

    const fs::path eval2 = g_work / "eval2";
    const CommandResult ev2 = run_cli("eval " + (run1 / "checkpoint.txt").string() + " " +
                                      archive.string() + " --out " + eval2.string());
    CHECK(ev2.exit_code == 0);
    CHECK(ev2.output == ev1.output);
    CHECK(read_file(eval1 / "report.json") == read_file(eval2 / "report.json"));
}

TEST_CASE("class-space mismatch between checkpoint and archive exits 3") {
    const fs::path cfg = write_config("mismatch.cfg");
    REQUIRE(run_cli("generate --config " + cfg.string()).exit_code == 0);
    const fs::path run_dir = g_work / "mismatch_run";
    REQUIRE(run_cli("train --config " + cfg.string() + " --mode conf_threshold --out " +
                    run_dir.string())
                .exit_code == 0);

    // Second archive with a different private set -> different known count.
    const fs::path cfg2 = write_config(
        "mismatch2.cfg", "scene.private_classes = 3,4\narchive_dir = " +
                             (g_work / "arch2").string() + "\n");
    REQUIRE(run_cli("generate --config " + cfg2.string()).exit_code == 0);

    const CommandResult mismatch = run_cli("eval " + (run_dir / "checkpoint.txt").string() +
                                           " " + (g_work / "arch2").string());
    CHECK(mismatch.exit_code == 3);
    CHECK(mismatch.output.find("class-space mismatch") != std::string::npos);
}

TEST_CASE("ablate on a tiny config writes the five-row summary") {
    const fs::path cfg = write_config("ablate.cfg", "trainer.steps = 2\n");
    const fs::path out = g_work / "ablate_out";
    const CommandResult result =
        run_cli("ablate --config " + cfg.string() + " --out " + out.string());
    CHECK(result.exit_code == 0);
    const std::string csv = read_file(out / "ablation.csv");
    int lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 6);  // header + 5 modes
    CHECK(csv.find("conf_threshold") != std::string::npos);
    CHECK(csv.find("bus_full") != std::string::npos);
    CHECK(fs::exists(out / "runs" / "bus_full_seed1" / "report.json"));
}

int main(int argc, char** argv) {
    if (argc > 1 && argv[argc - 1][0] != '-') {
        g_bus_binary = argv[argc - 1];
        --argc;
    }
    if (g_bus_binary.empty()) {
        std::fprintf(stderr, "usage: test_cli [doctest args] <path-to-bus-binary>\n");
        return 1;
    }
    g_work = fs::temp_directory_path() / "busseg_cli_tests";
    fs::remove_all(g_work);
    fs::create_directories(g_work);
    doctest::Context context(argc, argv);
    const int rc = context.run();
    fs::remove_all(g_work);
    return rc;
}
