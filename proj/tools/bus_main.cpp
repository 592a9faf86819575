#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bus/runner.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes: 0 success, 1 usage/config error, 2 I/O error, 3 validation error.
constexpr int kOk = 0;
constexpr int kConfigExit = 1;
constexpr int kIoExit = 2;
constexpr int kValidationExit = 3;

bus::RunConfig load_config(const std::string& config_path,
                           const std::vector<std::string>& overrides) {
    if (config_path.empty()) {
        bus::RunConfig cfg;
        for (const auto& ov : overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw bus::ConfigError("override must be key=value: '" + ov + "'");
            cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
        }
        cfg.validate();
        return cfg;
    }
    return bus::RunConfig::load(config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"busseg: open-set domain adaptation segmentation lab"};
    app.require_subcommand(1);

    std::string config_path, mode, out_dir, checkpoint, archive;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "configuration file (key = value lines)");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--override", overrides, "config override key=value (repeatable)");
    };

    CLI::App* generate = app.add_subcommand("generate", "write the benchmark archive");
    add_common(generate);

    CLI::App* train = app.add_subcommand("train", "train one model");
    add_common(train);
    train->add_option("--mode", mode, "training mode");
    train->add_option("--seed", seed, "run seed")->each([&](const std::string&) {
        seed_set = true;
    });

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint against an archive");
    eval->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    eval->add_option("archive", archive, "benchmark archive directory")->required();
    eval->add_option("--out", out_dir, "output directory (defaults next to the checkpoint)");

    CLI::App* ablate = app.add_subcommand("ablate", "run all modes x seeds and summarize");
    add_common(ablate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigExit;
    }

    try {
        if (generate->parsed()) {
            const bus::RunConfig cfg = load_config(config_path, overrides);
            const fs::path dir = out_dir.empty()
                                     ? (cfg.archive_dir.empty()
                                            ? fs::path(cfg.out_dir) / "benchmark"
                                            : fs::path(cfg.archive_dir))
                                     : fs::path(out_dir);
            const std::uint64_t checksum = bus::run_generate(cfg, dir);
            std::printf("archive %s checksum %016llx\n", dir.string().c_str(),
                        static_cast<unsigned long long>(checksum));
        } else if (train->parsed()) {
            bus::RunConfig cfg = load_config(config_path, overrides);
            if (!mode.empty()) cfg.trainer.mode = bus::parse_train_mode(mode);
            if (seed_set) cfg.trainer.seed = seed;
            const fs::path dir =
                out_dir.empty() ? fs::path(cfg.out_dir) / "runs" /
                                      (bus::to_string(cfg.trainer.mode) + "_seed" +
                                       std::to_string(cfg.trainer.seed))
                                : fs::path(out_dir);
            const bus::TrainOutputs outputs = bus::run_train(cfg, dir);
            std::printf("checkpoint %s\n", outputs.checkpoint.string().c_str());
        } else if (eval->parsed()) {
            const fs::path dir =
                out_dir.empty() ? fs::path(checkpoint).parent_path() / "eval" : fs::path(out_dir);
            const bus::MetricsReport report = bus::run_eval(checkpoint, archive, dir);
            std::printf("%.4f %.4f %.4f\n", report.common_miou, report.private_iou,
                        report.h_score);
        } else if (ablate->parsed()) {
            const bus::RunConfig cfg = load_config(config_path, overrides);
            const fs::path dir = out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(out_dir);
            const auto rows = bus::run_ablate(cfg, dir);
            for (const auto& row : rows)
                std::printf("%-22s common %.4f +- %.4f  private %.4f +- %.4f  h %.4f +- %.4f\n",
                            row.mode.c_str(), row.common_mean, row.common_std, row.private_mean,
                            row.private_std, row.h_mean, row.h_std);
            std::printf("summary %s\n", (dir / "ablation.csv").string().c_str());
        }
    } catch (const bus::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigExit;
    } catch (const bus::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kIoExit;
    } catch (const bus::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kValidationExit;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kValidationExit;
    }
    return kOk;
}
