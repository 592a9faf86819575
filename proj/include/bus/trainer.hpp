#pragma once

#include <filesystem>
#include <ostream>

#include "bus/dataset.hpp"
#include "bus/losses.hpp"
#include "bus/metrics.hpp"
#include "bus/mixing.hpp"
#include "bus/model.hpp"
#include "bus/pseudolabel.hpp"

namespace bus {

struct TrainerConfig {
    TrainMode mode = TrainMode::kBusFull;
    double tau_p = 0.5;    // pseudo-label unknown threshold
    double tau_t = 0.968;  // confidence-ratio threshold
    double alpha = 0.99;   // EMA factor (desk-scale default; 0.999 at full scale)
    double tau_inf = 0.5;  // inference threshold for conf_threshold mode
    double lr = 0.2;
    double momentum = 0.9;
    int steps = 2000;
    int batch_size = 1;
    int hidden = 16;
    std::uint64_t seed = 1;
    DeconConfig decon;
    MixConfig mix;
    RefinementHook refinement = identity_refinement();

    void validate() const {
        for (double t : {tau_p, tau_t, tau_inf})
            if (!(t > 0.0 && t < 1.0))
                throw ValidationError("TrainerConfig: thresholds must be in (0,1)");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ValidationError("TrainerConfig: alpha must be in [0,1]");
        if (steps < 1) throw ValidationError("TrainerConfig: steps must be >= 1");
        if (batch_size < 1) throw ValidationError("TrainerConfig: batch_size must be >= 1");
        if (lr < 0.0 || momentum < 0.0 || momentum >= 1.0)
            throw ValidationError("TrainerConfig: bad optimizer settings");
        decon.validate();
    }
};

struct SourceItem {
    const ImageTensor* image;
    const LabelMap* label;
};

struct StepMetrics {
    int step = 0;
    double loss_source = 0.0;
    double loss_target = 0.0;
    double loss_decon = 0.0;
    double q_t_mean = 0.0;
    double decon_skip_rate = 0.0;
};

/// Teacher pass on one clean target image: pseudo-labels over the known-class
/// probabilities (argmax only in conf_threshold mode, unknown assignment
/// below tau_p otherwise) plus the image-level confidence q_t.
PseudoLabel make_pseudo_label(const SegNet& teacher, const ImageTensor& target_image,
                              const TrainerConfig& cfg, const ClassSpace& cs);

/// One optimization step over paired source/target batches: teacher
/// pseudo-labels, mode-dependent mixing, the combined loss, one SGD update,
/// then the EMA teacher update.
StepMetrics train_step(SegNet& student, SegNet& teacher, SgdState& sgd,
                       const std::vector<SourceItem>& source_batch,
                       const std::vector<const ImageTensor*>& target_batch,
                       const TrainerConfig& cfg, const ClassSpace& cs, Rng& rng);

class Trainer {
public:
    Trainer(const Benchmark& bench, TrainerConfig cfg);

    /// Run cfg.steps steps; optionally stream one CSV row per step.
    void run(std::ostream* csv_log = nullptr);

    StepMetrics run_single_step();

    const SegNet& student() const { return student_; }
    const SegNet& teacher() const { return teacher_; }
    SegNet& student() { return student_; }
    int step_count() const { return step_; }
    const std::vector<StepMetrics>& history() const { return history_; }

private:
    const Benchmark& bench_;
    TrainerConfig cfg_;
    SegNet student_;
    SegNet teacher_;
    SgdState sgd_;
    Rng rng_;
    int step_ = 0;
    std::vector<StepMetrics> history_;
};

/// Pooled evaluation of a model over the benchmark's held-out target labels.
MetricsReport evaluate_model(const SegNet& net, TrainMode mode, double tau_inf,
                             const Benchmark& bench);

/// Same aggregation over stored predictions.
MetricsReport evaluate_predictions(const std::vector<LabelMap>& preds, const Benchmark& bench);

struct Checkpoint {
    SegNetConfig net;
    ParamVector params;
    TrainMode mode = TrainMode::kBusFull;
    double tau_inf = 0.5;
    int num_known = 1;
    int step = 0;
};

// Textual checkpoint, versioned; parameters are stored as hexfloats so the
// round trip is exact. Layout documented in the README.
void write_checkpoint(const std::filesystem::path& path, const SegNet& net,
                      const TrainerConfig& cfg, const ClassSpace& cs, int step);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace bus
