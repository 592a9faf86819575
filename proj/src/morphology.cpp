#include "bus/morphology.hpp"

namespace bus {

namespace {

enum class MorphOp { kDilate, kErode };

BinaryMask morph_once(const BinaryMask& in, int kernel_size, MorphOp op) {
    const int h = in.height, w = in.width;
    const int r = kernel_size / 2;
    BinaryMask out = BinaryMask::zeros(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t acc = (op == MorphOp::kDilate) ? 0 : 1;
            for (int dy = -r; dy <= r && ((op == MorphOp::kDilate) ? !acc : acc); ++dy) {
                const int yy = y + dy;
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = x + dx;
                    const bool inside = yy >= 0 && yy < h && xx >= 0 && xx < w;
                    const std::uint8_t v = inside ? in.at(yy, xx) : 0;
                    if (op == MorphOp::kDilate) {
                        if (v) {
                            acc = 1;
                            break;
                        }
                    } else {
                        if (!v) {
                            acc = 0;
                            break;
                        }
                    }
                }
            }
            out.at(y, x) = acc;
        }
    }
    return out;
}

BinaryMask morph(const BinaryMask& mask, const MorphConfig& cfg, MorphOp op) {
    cfg.validate();
    BinaryMask cur = mask;
    for (int it = 0; it < cfg.iterations; ++it) cur = morph_once(cur, cfg.kernel_size, op);
    return cur;
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, const MorphConfig& cfg) {
    return morph(mask, cfg, MorphOp::kDilate);
}

BinaryMask erode(const BinaryMask& mask, const MorphConfig& cfg) {
    return morph(mask, cfg, MorphOp::kErode);
}

std::optional<PrivateCrop> random_private_crop(const BinaryMask& private_mask,
                                               const MorphConfig& cfg, Rng& rng) {
    cfg.validate();
    const int cs = cfg.crop_size;
    if (cs > private_mask.height || cs > private_mask.width)
        throw ValidationError("random_private_crop: crop larger than mask");

    const int max_oy = private_mask.height - cs;
    const int max_ox = private_mask.width - cs;
    for (int attempt = 0; attempt < cfg.max_crop_retries; ++attempt) {
        const int oy = static_cast<int>(rng.uniform_int(0, max_oy));
        const int ox = static_cast<int>(rng.uniform_int(0, max_ox));
        BinaryMask crop = BinaryMask::zeros(cs, cs);
        int ones = 0;
        for (int y = 0; y < cs; ++y)
            for (int x = 0; x < cs; ++x) {
                const std::uint8_t v = private_mask.at(oy + y, ox + x);
                crop.at(y, x) = v;
                ones += v;
            }
        if (ones > 0) return PrivateCrop{std::move(crop), oy, ox};
    }
    return std::nullopt;
}

DeconMasks decon_masks(const BinaryMask& cropped_private, const MorphConfig& cfg) {
    DeconMasks out;
    out.negatives = dilate(cropped_private, cfg);
    for (std::size_t i = 0; i < out.negatives.data.size(); ++i)
        out.negatives.data[i] = static_cast<std::uint8_t>(out.negatives.data[i] -
                                                          cropped_private.data[i]);
    out.positives = erode(cropped_private, cfg);
    return out;
}

}  // namespace bus
