#include "bus/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace bus {

namespace {

/// Known-class slice of the full-head softmax. With an expanded head the
/// rows sum to less than one wherever the unknown head holds mass, which is
/// exactly what lets the unknown branch of the pseudo-label rule fire.
ProbMap known_class_scores(const LogitMap& logits, const ClassSpace& cs) {
    const ProbMap full = softmax(logits);
    ProbMap known = ProbMap::zeros(full.height, full.width, cs.num_known);
    for (int p = 0; p < full.pixels(); ++p)
        for (int c = 0; c < cs.num_known; ++c)
            known.data[static_cast<std::size_t>(p) * cs.num_known + c] =
                full.data[static_cast<std::size_t>(p) * full.num_classes + c];
    return known;
}

}  // namespace

PseudoLabel make_pseudo_label(const SegNet& teacher, const ImageTensor& target_image,
                              const TrainerConfig& cfg, const ClassSpace& cs) {
    const ForwardResult fwd = teacher.forward(target_image);
    const ProbMap known = known_class_scores(fwd.logits, cs);

    PseudoLabel pseudo;
    if (mode_uses_unknown_head(cfg.mode)) {
        pseudo.labels = generate_pseudo_label(known, cfg.tau_p, cs);
    } else {
        pseudo.labels = argmax_with_prob(known).first;  // closed-set labels only
    }
    pseudo.labels = cfg.refinement(pseudo.labels);
    pseudo.confidence = confidence_ratio(known, cfg.tau_t);
    return pseudo;
}

StepMetrics train_step(SegNet& student, SegNet& teacher, SgdState& sgd,
                       const std::vector<SourceItem>& source_batch,
                       const std::vector<const ImageTensor*>& target_batch,
                       const TrainerConfig& cfg, const ClassSpace& cs, Rng& rng) {
    cfg.validate();
    if (source_batch.empty() || source_batch.size() != target_batch.size())
        throw ValidationError("train_step: batches must be non-empty and equal-sized");

    const std::size_t batch = source_batch.size();
    ParamVector grad(static_cast<std::size_t>(student.param_count()), 0.0);
    StepMetrics metrics;
    int decon_attempts = 0, decon_skips = 0;

    for (std::size_t i = 0; i < batch; ++i) {
        const ImageTensor& source_image = *source_batch[i].image;
        const LabelMap& source_label = *source_batch[i].label;
        const ImageTensor& target_image = *target_batch[i];

        const PseudoLabel pseudo = make_pseudo_label(teacher, target_image, cfg, cs);
        metrics.q_t_mean += pseudo.confidence;

        // Mixed source: attach target private regions in the remix modes.
        // Target-origin pixels carry q_t there, like in the mixed target.
        const ImageTensor* train_src_image = &source_image;
        const LabelMap* train_src_label = &source_label;
        const BinaryMask* src_origin = nullptr;
        MixedPair mixed_source;
        if (mode_uses_remix(cfg.mode)) {
            const BinaryMask m_u = private_mask(pseudo.labels, cs);
            mixed_source =
                attach_private(source_image, source_label, target_image, pseudo, m_u);
            train_src_image = &mixed_source.image;
            train_src_label = &mixed_source.label;
            src_origin = &mixed_source.origin_mask;
        }

        // Mixed target: OpenReMix in the remix modes, plain ClassMix otherwise.
        MixedPair mixed_target;
        if (mode_uses_remix(cfg.mode)) {
            mixed_target = openremix_target(source_image, source_label, target_image, pseudo,
                                            cfg.mix, cs, rng);
        } else {
            const BinaryMask cm = classmix_mask(source_label, rng);
            mixed_target.image = blend(cm, source_image, target_image);
            mixed_target.label = blend(cm, source_label, pseudo.labels);
            mixed_target.origin_mask = cm;
        }

        // Source loss: true source pixels at weight one, attached target
        // content at q_t.
        const ForwardCache src_cache = student.forward_cached(*train_src_image);
        std::vector<double> src_weights(static_cast<std::size_t>(src_cache.logits.pixels()),
                                        1.0);
        if (src_origin)
            for (std::size_t p = 0; p < src_weights.size(); ++p)
                if (src_origin->data[p]) src_weights[p] = pseudo.confidence;
        const LossValue src_ce =
            weighted_cross_entropy(src_cache.logits, *train_src_label, src_weights, cs);

        // Target loss: pasted source pixels at weight one, the rest at q_t.
        const ForwardCache tgt_cache = student.forward_cached(mixed_target.image);
        std::vector<double> weights(static_cast<std::size_t>(tgt_cache.logits.pixels()));
        for (std::size_t p = 0; p < weights.size(); ++p)
            weights[p] = mixed_target.origin_mask.data[p] ? 1.0 : pseudo.confidence;
        const LossValue tgt_ce =
            weighted_cross_entropy(tgt_cache.logits, mixed_target.label, weights, cs);

        // DECON on a random crop of the private mask, over the clean target
        // forward's features.
        LossValue decon;
        bool have_decon = false;
        ForwardCache clean_cache;
        std::vector<double> decon_full_grad;
        int crop_oy = 0, crop_ox = 0, crop_size = 0;
        if (mode_uses_decon(cfg.mode)) {
            ++decon_attempts;
            const BinaryMask m_u = private_mask(pseudo.labels, cs);
            const auto crop = random_private_crop(m_u, cfg.decon.morph, rng);
            if (crop) {
                const DeconMasks masks = decon_masks(crop->mask, cfg.decon.morph);
                clean_cache = student.forward_cached(target_image);
                crop_size = cfg.decon.morph.crop_size;
                crop_oy = crop->origin_y;
                crop_ox = crop->origin_x;
                FeatureMap crop_features =
                    FeatureMap::zeros(crop_size, crop_size, clean_cache.a2.channels);
                for (int y = 0; y < crop_size; ++y)
                    for (int x = 0; x < crop_size; ++x)
                        for (int c = 0; c < crop_features.channels; ++c)
                            crop_features.at(y, x, c) =
                                clean_cache.a2.at(crop_oy + y, crop_ox + x, c);
                decon = decon_loss(crop_features, masks.positives, masks.negatives, cfg.decon);
                have_decon = !decon.skipped;
            }
            if (!have_decon) ++decon_skips;
        }

        const TotalLoss total = total_loss(src_ce, tgt_ce, decon, cfg.decon.weight);
        metrics.loss_source += src_ce.value;
        metrics.loss_target += tgt_ce.value;
        metrics.loss_decon += decon.skipped ? 0.0 : decon.value;

        student.backward(src_cache, total.source_gradient.data(), nullptr, grad);
        student.backward(tgt_cache, total.target_gradient.data(), nullptr, grad);
        if (have_decon) {
            decon_full_grad.assign(clean_cache.a2.data.size(), 0.0);
            const int f = clean_cache.a2.channels;
            for (int y = 0; y < crop_size; ++y)
                for (int x = 0; x < crop_size; ++x) {
                    const std::size_t src =
                        (static_cast<std::size_t>(y) * crop_size + x) * f;
                    const std::size_t dst =
                        (static_cast<std::size_t>(crop_oy + y) * clean_cache.a2.width +
                         (crop_ox + x)) *
                        f;
                    for (int c = 0; c < f; ++c)
                        decon_full_grad[dst + c] = total.decon_gradient[src + c];
                }
            student.backward(clean_cache, nullptr, decon_full_grad.data(), grad);
        }
    }

    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (double& g : grad) g *= inv_batch;
    sgd_step(student.params(), grad, cfg.lr, cfg.momentum, sgd);
    teacher.set_params(ema_update(teacher.params(), student.params(), cfg.alpha));

    metrics.loss_source *= inv_batch;
    metrics.loss_target *= inv_batch;
    metrics.loss_decon *= inv_batch;
    metrics.q_t_mean *= inv_batch;
    metrics.decon_skip_rate =
        decon_attempts > 0 ? static_cast<double>(decon_skips) / decon_attempts : 0.0;
    return metrics;
}

Trainer::Trainer(const Benchmark& bench, TrainerConfig cfg)
    : bench_(bench),
      cfg_(std::move(cfg)),
      student_(SegNetConfig{cfg_.hidden, mode_uses_unknown_head(cfg_.mode)
                                             ? bench.class_space.num_heads()
                                             : bench.class_space.num_known}),
      teacher_(student_.config()),
      rng_(cfg_.seed) {
    cfg_.validate();
    if (bench_.source_images.empty() || bench_.target_images.empty())
        throw ValidationError("Trainer: benchmark has an empty split");
    if (cfg_.mix.thing_class_ids.empty())
        cfg_.mix.thing_class_ids = bench_.known_thing_classes;
    cfg_.mix.validate(bench_.class_space);

    Rng init_rng = rng_.fork(1);
    student_.init_params(init_rng);
    teacher_.set_params(student_.params());  // teacher starts as a copy
    rng_ = rng_.fork(2);
}

StepMetrics Trainer::run_single_step() {
    std::vector<SourceItem> source_batch;
    std::vector<const ImageTensor*> target_batch;
    for (int b = 0; b < cfg_.batch_size; ++b) {
        const auto si = static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<std::int64_t>(bench_.source_images.size()) - 1));
        const auto ti = static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<std::int64_t>(bench_.target_images.size()) - 1));
        source_batch.push_back({&bench_.source_images[si], &bench_.source_labels[si]});
        target_batch.push_back(&bench_.target_images[ti]);
    }
    StepMetrics metrics = train_step(student_, teacher_, sgd_, source_batch, target_batch,
                                     cfg_, bench_.class_space, rng_);
    metrics.step = ++step_;
    history_.push_back(metrics);
    return metrics;
}

void Trainer::run(std::ostream* csv_log) {
    if (csv_log)
        *csv_log << "step,loss_source,loss_target,loss_decon,q_t_mean,decon_skip_rate\n";
    for (int s = 0; s < cfg_.steps; ++s) {
        const StepMetrics m = run_single_step();
        if (csv_log) {
            char buf[192];
            std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", m.step,
                          m.loss_source, m.loss_target, m.loss_decon, m.q_t_mean,
                          m.decon_skip_rate);
            *csv_log << buf;
        }
    }
}

MetricsReport evaluate_model(const SegNet& net, TrainMode mode, double tau_inf,
                             const Benchmark& bench) {
    std::vector<LabelMap> preds;
    preds.reserve(bench.target_images.size());
    for (const ImageTensor& image : bench.target_images)
        preds.push_back(predict(net, image, mode, tau_inf, bench.class_space));
    return evaluate_predictions(preds, bench);
}

MetricsReport evaluate_predictions(const std::vector<LabelMap>& preds, const Benchmark& bench) {
    if (bench.target_eval_labels.empty() || preds.size() != bench.target_eval_labels.size())
        throw ValidationError("evaluate_predictions: prediction/split size mismatch");
    const ClassSpace& cs = bench.class_space;
    ClassCounts pooled;
    pooled.intersection.assign(cs.num_known + 1, 0);
    pooled.union_.assign(cs.num_known + 1, 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const ClassCounts counts = per_class_counts(preds[i], bench.target_eval_labels[i], cs);
        for (std::size_t c = 0; c < pooled.union_.size(); ++c) {
            pooled.intersection[c] += counts.intersection[c];
            pooled.union_[c] += counts.union_[c];
        }
    }
    return report_from_counts(pooled, cs);
}

void write_checkpoint(const std::filesystem::path& path, const SegNet& net,
                      const TrainerConfig& cfg, const ClassSpace& cs, int step) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << "busseg-checkpoint\n"
        << "version = 1\n"
        << "mode = " << to_string(cfg.mode) << "\n"
        << "num_known = " << cs.num_known << "\n"
        << "hidden = " << net.config().hidden << "\n"
        << "num_out = " << net.config().num_out << "\n"
        << "tau_inf = " << cfg.tau_inf << "\n"
        << "step = " << step << "\n"
        << "param_count = " << net.param_count() << "\n"
        << "params =";
    char buf[40];
    for (int i = 0; i < net.param_count(); ++i) {
        std::snprintf(buf, sizeof(buf), " %a", net.params()[static_cast<std::size_t>(i)]);
        out << (i % 8 == 0 ? "\n" : "") << buf;
    }
    out << "\n";
    if (!out) throw IoError("short write to " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read checkpoint " + path.string());
    std::string magic;
    std::getline(in, magic);
    if (magic != "busseg-checkpoint") throw IoError(path.string() + ": not a checkpoint");

    Checkpoint ckpt;
    int param_count = -1;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "mode") ckpt.mode = parse_train_mode(value);
        else if (key == "num_known") ckpt.num_known = std::stoi(value);
        else if (key == "hidden") ckpt.net.hidden = std::stoi(value);
        else if (key == "num_out") ckpt.net.num_out = std::stoi(value);
        else if (key == "tau_inf") ckpt.tau_inf = std::stod(value);
        else if (key == "step") ckpt.step = std::stoi(value);
        else if (key == "param_count") param_count = std::stoi(value);
        else if (key == "params") break;
    }
    if (param_count < 0) throw IoError(path.string() + ": missing param_count");
    ckpt.params.resize(static_cast<std::size_t>(param_count));
    std::string token;
    for (int i = 0; i < param_count; ++i) {
        if (!(in >> token)) throw IoError(path.string() + ": truncated parameter block");
        char* end = nullptr;
        ckpt.params[static_cast<std::size_t>(i)] = std::strtod(token.c_str(), &end);
        if (end == token.c_str()) throw IoError(path.string() + ": bad parameter value");
    }
    return ckpt;
}

}  // namespace bus
