#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bus/config.hpp"
#include "bus/metrics.hpp"

namespace bus {

/// Generate the benchmark archive; returns its checksum.
std::uint64_t run_generate(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct TrainOutputs {
    std::filesystem::path run_dir;
    std::filesystem::path checkpoint;
    MetricsReport report;  // filled by run_eval / run_train_eval
};

/// Train one model (mode and seed already applied in cfg.trainer); writes
/// checkpoint.txt, train_log.csv, curves.svg and effective_config.txt.
TrainOutputs run_train(const RunConfig& cfg, const std::filesystem::path& run_dir);

/// Evaluate a checkpoint against an archive; writes report.json, report.csv
/// and prediction renderings, and returns the report.
MetricsReport run_eval(const std::filesystem::path& checkpoint_path,
                       const std::filesystem::path& archive_dir,
                       const std::filesystem::path& out_dir);

struct AblationRow {
    std::string mode;
    int heads = 0;
    bool decon = false;
    bool openremix = false;
    double common_mean = 0.0, common_std = 0.0;
    double private_mean = 0.0, private_std = 0.0;
    double h_mean = 0.0, h_std = 0.0;
    std::vector<MetricsReport> per_seed;
};

/// All five modes x cfg.seeds, runs executed concurrently, aggregated into
/// an ablation table. Reuses (or generates) the benchmark archive.
std::vector<AblationRow> run_ablate(const RunConfig& cfg, const std::filesystem::path& out_dir);

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace bus
