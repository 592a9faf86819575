#include "bus/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "bus/image_io.hpp"
#include "bus/trainer.hpp"

namespace bus {

namespace fs = std::filesystem;

namespace {

fs::path resolved_archive_dir(const RunConfig& cfg) {
    return cfg.archive_dir.empty() ? fs::path(cfg.out_dir) / "benchmark"
                                   : fs::path(cfg.archive_dir);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("short write to " + path.string());
}

/// Minimal SVG line chart of the training curves.
void write_curves_svg(const fs::path& path, const std::vector<StepMetrics>& history) {
    const int w = 720, h = 360, ml = 50, mb = 30, mt = 16, mr = 16;
    struct Series {
        const char* name;
        const char* color;
        double (*get)(const StepMetrics&);
    };
    const Series series[] = {
        {"loss_source", "#d43d2a", [](const StepMetrics& m) { return m.loss_source; }},
        {"loss_target", "#2a61d4", [](const StepMetrics& m) { return m.loss_target; }},
        {"loss_decon", "#7a32a8", [](const StepMetrics& m) { return m.loss_decon; }},
        {"q_t_mean", "#2a8c4a", [](const StepMetrics& m) { return m.q_t_mean; }},
    };
    double lo = 0.0, hi = 1e-9;
    for (const auto& m : history)
        for (const auto& s : series) {
            lo = std::min(lo, s.get(m));
            hi = std::max(hi, s.get(m));
        }

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
        << h - mb << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
        << "\" stroke=\"black\"/>\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"11\">%.3g</text>\n", 4, mt + 10, hi);
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"11\">%.3g</text>\n", 4, h - mb, lo);
    svg << buf;
    const std::size_t n = history.size();
    for (std::size_t si = 0; si < 4; ++si) {
        const auto& s = series[si];
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\" points=\"";
        for (std::size_t i = 0; i < n; ++i) {
            const double fx = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
            const double fy = (s.get(history[i]) - lo) / (hi - lo + 1e-12);
            std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", ml + fx * (w - ml - mr),
                          (h - mb) - fy * (h - mb - mt));
            svg << buf;
        }
        svg << "\"/>\n";
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%d\" font-size=\"11\" fill=\"%s\">%s</text>\n",
                      w - mr - 110, mt + 14 * static_cast<int>(si + 1), s.color, s.name);
        svg << buf;
    }
    svg << "</svg>\n";
    write_text(path, svg.str());
}

double stddev(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace

std::uint64_t run_generate(const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const Benchmark bench =
        build_benchmark(cfg.scene, cfg.source_count, cfg.target_count, cfg.scene_seed);
    ensure_dir(out_dir);
    write_benchmark(out_dir, bench);
    return archive_checksum(out_dir);
}

TrainOutputs run_train(const RunConfig& cfg, const fs::path& run_dir) {
    cfg.validate();
    const fs::path archive = resolved_archive_dir(cfg);
    if (!fs::exists(archive / "manifest.txt"))
        throw IoError("benchmark archive not found at " + archive.string() +
                      " (run the generate command first)");
    const Benchmark bench = read_benchmark(archive);

    ensure_dir(run_dir);
    write_text(run_dir / "effective_config.txt", cfg.emit());

    Trainer trainer(bench, cfg.trainer);
    {
        std::ofstream log(run_dir / "train_log.csv");
        if (!log) throw IoError("cannot write training log in " + run_dir.string());
        trainer.run(&log);
    }
    write_curves_svg(run_dir / "curves.svg", trainer.history());

    TrainOutputs out;
    out.run_dir = run_dir;
    out.checkpoint = run_dir / "checkpoint.txt";
    write_checkpoint(out.checkpoint, trainer.student(), cfg.trainer, bench.class_space,
                     trainer.step_count());
    return out;
}

MetricsReport run_eval(const fs::path& checkpoint_path, const fs::path& archive_dir,
                       const fs::path& out_dir) {
    const Checkpoint ckpt = read_checkpoint(checkpoint_path);
    const Benchmark bench = read_benchmark(archive_dir);
    if (ckpt.num_known != bench.class_space.num_known)
        throw ValidationError("class-space mismatch: checkpoint has " +
                              std::to_string(ckpt.num_known) + " known classes, archive has " +
                              std::to_string(bench.class_space.num_known));

    SegNet net(ckpt.net);
    net.set_params(ckpt.params);
    const MetricsReport report = evaluate_model(net, ckpt.mode, ckpt.tau_inf, bench);

    ensure_dir(out_dir);
    write_text(out_dir / "report.json", report.to_json());
    write_text(out_dir / "report.csv", report.csv_header() + "\n" + report.csv_row() + "\n");
    const fs::path pred_dir = out_dir / "predictions";
    ensure_dir(pred_dir);
    for (std::size_t i = 0; i < bench.target_images.size(); ++i) {
        const LabelMap pred =
            predict(net, bench.target_images[i], ckpt.mode, ckpt.tau_inf, bench.class_space);
        char name[32];
        std::snprintf(name, sizeof(name), "pred_%05zu.ppm", i);
        write_ppm(pred_dir / name, render_prediction(pred, bench.class_space));
    }
    return report;
}

std::vector<AblationRow> run_ablate(const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const fs::path archive = resolved_archive_dir(cfg);
    if (!fs::exists(archive / "manifest.txt")) run_generate(cfg, archive);

    static constexpr TrainMode kModes[] = {
        TrainMode::kConfThreshold, TrainMode::kHeadExpansion, TrainMode::kHeadExpansionDecon,
        TrainMode::kHeadExpansionRemix, TrainMode::kBusFull,
    };

    struct Job {
        TrainMode mode;
        std::uint64_t seed;
        fs::path run_dir;
    };
    std::vector<Job> jobs;
    for (TrainMode mode : kModes)
        for (std::uint64_t seed : cfg.seeds)
            jobs.push_back({mode, seed,
                            out_dir / "runs" / (to_string(mode) + "_seed" +
                                                std::to_string(seed))});

    // Independent runs fan out across a fixed-size pool; each run is
    // internally sequential and deterministic.
    const unsigned pool =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(jobs.size())));
    std::vector<MetricsReport> reports(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            RunConfig run_cfg = cfg;
            run_cfg.trainer.mode = jobs[i].mode;
            run_cfg.trainer.seed = jobs[i].seed;
            const TrainOutputs outputs = run_train(run_cfg, jobs[i].run_dir);
            reports[i] = run_eval(outputs.checkpoint, archive, jobs[i].run_dir);
        }
    };
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    std::vector<AblationRow> rows;
    std::size_t job = 0;
    for (TrainMode mode : kModes) {
        AblationRow row;
        row.mode = to_string(mode);
        row.heads = mode_uses_unknown_head(mode) ? 1 : 0;
        row.decon = mode_uses_decon(mode);
        row.openremix = mode_uses_remix(mode);
        std::vector<double> common, priv, h;
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s, ++job) {
            row.per_seed.push_back(reports[job]);
            common.push_back(reports[job].common_miou);
            priv.push_back(reports[job].private_iou);
            h.push_back(reports[job].h_score);
        }
        auto mean = [](const std::vector<double>& v) {
            double acc = 0.0;
            for (double x : v) acc += x;
            return acc / static_cast<double>(v.size());
        };
        row.common_mean = mean(common);
        row.private_mean = mean(priv);
        row.h_mean = mean(h);
        row.common_std = stddev(common, row.common_mean);
        row.private_std = stddev(priv, row.private_mean);
        row.h_std = stddev(h, row.h_mean);
        rows.push_back(std::move(row));
    }
    write_ablation_csv(out_dir / "ablation.csv", rows);
    return rows;
}

void write_ablation_csv(const fs::path& path, const std::vector<AblationRow>& rows) {
    ensure_dir(path.parent_path().empty() ? "." : path.parent_path());
    std::ostringstream out;
    out << "mode,heads,decon,openremix,common_mean,common_std,private_mean,private_std,"
           "h_mean,h_std\n";
    char buf[256];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                      row.mode.c_str(), row.heads ? "C+1" : "C", row.decon ? 1 : 0,
                      row.openremix ? 1 : 0, row.common_mean, row.common_std, row.private_mean,
                      row.private_std, row.h_mean, row.h_std);
        out << buf;
    }
    write_text(path, out.str());
}

}  // namespace bus
