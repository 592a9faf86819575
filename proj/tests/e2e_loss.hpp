// Shared test harness: the full training loss (source CE + target CE +
// weighted DECON) as a pure function of the parameter vector, for
// finite-difference checks of the handwritten backward pass.
#pragma once

#include "bus/losses.hpp"
#include "bus/model.hpp"
#include "bus/morphology.hpp"
#include "bus/rng.hpp"

namespace e2e {

struct Instance {
    bus::SegNetConfig net_cfg;
    bus::ClassSpace cs{4};
    bus::ImageTensor source_image;
    bus::LabelMap source_labels;
    bus::ImageTensor target_image;
    bus::LabelMap target_pseudo;
    double q_t = 0.5;
    bus::BinaryMask crop_pos, crop_neg;  // DECON masks over the crop window
    int crop_oy = 0, crop_ox = 0, crop_size = 0;
    bus::DeconConfig decon;
};

/// Random instance on a 16x16 scene with hidden width 4 and an 8x8 DECON crop.
inline Instance random_instance(bus::Rng& rng) {
    Instance inst;
    inst.net_cfg = {4, inst.cs.num_heads()};
    const int h = 16, w = 16;
    inst.source_image = bus::ImageTensor::zeros(h, w);
    inst.target_image = bus::ImageTensor::zeros(h, w);
    for (double& v : inst.source_image.data) v = rng.uniform();
    for (double& v : inst.target_image.data) v = rng.uniform();
    inst.source_labels = bus::LabelMap::filled(h, w, 0);
    inst.target_pseudo = bus::LabelMap::filled(h, w, 0);
    for (int p = 0; p < h * w; ++p) {
        inst.source_labels.data[p] =
            rng.bernoulli(0.1) ? inst.cs.ignore_id
                               : static_cast<int>(rng.uniform_int(0, inst.cs.num_known - 1));
        inst.target_pseudo.data[p] = static_cast<int>(rng.uniform_int(0, inst.cs.unknown_id));
    }
    inst.q_t = 0.25 + 0.5 * rng.uniform();

    inst.crop_size = 8;
    inst.crop_oy = static_cast<int>(rng.uniform_int(0, h - inst.crop_size));
    inst.crop_ox = static_cast<int>(rng.uniform_int(0, w - inst.crop_size));
    inst.crop_pos = bus::BinaryMask::zeros(inst.crop_size, inst.crop_size);
    inst.crop_neg = bus::BinaryMask::zeros(inst.crop_size, inst.crop_size);
    for (int p = 0; p < inst.crop_size * inst.crop_size; ++p) {
        const double u = rng.uniform();
        if (u < 0.25) inst.crop_pos.data[p] = 1;
        else if (u < 0.5) inst.crop_neg.data[p] = 1;
    }
    if (inst.crop_pos.count_ones() == 0) inst.crop_pos.at(2, 2) = 1;
    if (inst.crop_neg.count_ones() == 0) inst.crop_neg.at(5, 5) = 1;
    inst.decon.temperature = 0.1;
    inst.decon.weight = 0.7;
    return inst;
}

struct Pieces {
    bus::ForwardCache src_cache, tgt_cache, clean_cache;
    bus::TotalLoss total;
    bus::FeatureMap crop_features;
};

inline Pieces evaluate_pieces(const Instance& inst, const bus::SegNet& net) {
    Pieces out;
    out.src_cache = net.forward_cached(inst.source_image);
    const std::vector<double> ones(static_cast<std::size_t>(out.src_cache.logits.pixels()), 1.0);
    const bus::LossValue src_ce =
        bus::weighted_cross_entropy(out.src_cache.logits, inst.source_labels, ones, inst.cs);

    out.tgt_cache = net.forward_cached(inst.target_image);
    const std::vector<double> weights(static_cast<std::size_t>(out.tgt_cache.logits.pixels()),
                                      inst.q_t);
    const bus::LossValue tgt_ce =
        bus::weighted_cross_entropy(out.tgt_cache.logits, inst.target_pseudo, weights, inst.cs);

    out.clean_cache = net.forward_cached(inst.target_image);
    const int f = out.clean_cache.a2.channels;
    out.crop_features = bus::FeatureMap::zeros(inst.crop_size, inst.crop_size, f);
    for (int y = 0; y < inst.crop_size; ++y)
        for (int x = 0; x < inst.crop_size; ++x)
            for (int c = 0; c < f; ++c)
                out.crop_features.at(y, x, c) =
                    out.clean_cache.a2.at(inst.crop_oy + y, inst.crop_ox + x, c);
    const bus::LossValue decon =
        bus::decon_loss(out.crop_features, inst.crop_pos, inst.crop_neg, inst.decon);

    out.total = bus::total_loss(src_ce, tgt_ce, decon, inst.decon.weight);
    return out;
}

inline double loss_of_params(const Instance& inst, const bus::ParamVector& params) {
    bus::SegNet net(inst.net_cfg);
    net.set_params(params);
    return evaluate_pieces(inst, net).total.value;
}

inline bus::ParamVector grad_of_params(const Instance& inst, const bus::ParamVector& params) {
    bus::SegNet net(inst.net_cfg);
    net.set_params(params);
    const Pieces pieces = evaluate_pieces(inst, net);

    bus::ParamVector grad(params.size(), 0.0);
    net.backward(pieces.src_cache, pieces.total.source_gradient.data(), nullptr, grad);
    net.backward(pieces.tgt_cache, pieces.total.target_gradient.data(), nullptr, grad);

    const int f = pieces.clean_cache.a2.channels;
    std::vector<double> full(pieces.clean_cache.a2.data.size(), 0.0);
    for (int y = 0; y < inst.crop_size; ++y)
        for (int x = 0; x < inst.crop_size; ++x)
            for (int c = 0; c < f; ++c)
                full[(static_cast<std::size_t>(inst.crop_oy + y) * pieces.clean_cache.a2.width +
                      (inst.crop_ox + x)) *
                         f +
                     c] =
                    pieces.total
                        .decon_gradient[(static_cast<std::size_t>(y) * inst.crop_size + x) * f + c];
    net.backward(pieces.clean_cache, nullptr, full.data(), grad);
    return grad;
}

}  // namespace e2e
