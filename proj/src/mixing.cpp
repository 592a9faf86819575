#include "bus/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bus {

namespace {

void check_dims(int mh, int mw, int fh, int fw, int bh, int bw) {
    if (mh != fh || mw != fw || mh != bh || mw != bw)
        throw ValidationError("blend: dimension mismatch");
}

/// Classes present in a label map, ignore excluded, ascending.
std::vector<int> present_classes(const LabelMap& label) {
    std::set<int> seen;
    for (int v : label.data)
        if (v != kIgnoreId) seen.insert(v);
    return {seen.begin(), seen.end()};
}

}  // namespace

ImageTensor blend(const BinaryMask& mask, const ImageTensor& foreground,
                  const ImageTensor& background) {
    check_dims(mask.height, mask.width, foreground.height, foreground.width, background.height,
               background.width);
    ImageTensor out = background;
    for (std::size_t p = 0; p < mask.data.size(); ++p) {
        if (mask.data[p]) {
            const std::size_t base = p * 3;
            out.data[base] = foreground.data[base];
            out.data[base + 1] = foreground.data[base + 1];
            out.data[base + 2] = foreground.data[base + 2];
        }
    }
    return out;
}

LabelMap blend(const BinaryMask& mask, const LabelMap& foreground, const LabelMap& background) {
    check_dims(mask.height, mask.width, foreground.height, foreground.width, background.height,
               background.width);
    LabelMap out = background;
    for (std::size_t p = 0; p < mask.data.size(); ++p)
        if (mask.data[p]) out.data[p] = foreground.data[p];
    return out;
}

BinaryMask classmix_mask(const LabelMap& source_label, Rng& rng) {
    std::vector<int> classes = present_classes(source_label);
    if (classes.empty()) throw ValidationError("classmix_mask: no non-ignore class present");

    const std::size_t pick = (classes.size() + 1) / 2;
    // Partial Fisher-Yates; the first `pick` entries are a uniform subset.
    for (std::size_t i = 0; i < pick; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(classes.size() - 1 - i)));
        std::swap(classes[i], classes[j]);
    }
    std::set<int> chosen(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(pick));

    BinaryMask mask = BinaryMask::zeros(source_label.height, source_label.width);
    for (std::size_t p = 0; p < mask.data.size(); ++p)
        mask.data[p] = chosen.count(source_label.data[p]) ? 1 : 0;
    return mask;
}

std::optional<ResizedPatch> resize_thing_patch(const ImageTensor& image, const LabelMap& label,
                                               int class_id, double s_r, int frame_height,
                                               int frame_width, Rng& rng) {
    if (!(s_r > 0.0)) throw ValidationError("resize_thing_patch: scale must be > 0");

    int y0 = label.height, y1 = -1, x0 = label.width, x1 = -1;
    for (int y = 0; y < label.height; ++y)
        for (int x = 0; x < label.width; ++x)
            if (label.at(y, x) == class_id) {
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
            }
    if (y1 < 0) throw ValidationError("resize_thing_patch: class not present in label");

    const int src_h = y1 - y0 + 1, src_w = x1 - x0 + 1;
    const int dst_h = std::max(1, static_cast<int>(std::lround(src_h * s_r)));
    const int dst_w = std::max(1, static_cast<int>(std::lround(src_w * s_r)));
    if (dst_h > frame_height || dst_w > frame_width) return std::nullopt;

    ResizedPatch patch;
    patch.image = ImageTensor::zeros(dst_h, dst_w);
    patch.shape = BinaryMask::zeros(dst_h, dst_w);
    const double sy = static_cast<double>(src_h) / dst_h;
    const double sx = static_cast<double>(src_w) / dst_w;
    for (int y = 0; y < dst_h; ++y) {
        // Half-pixel-center mapping; exact 2x2 averaging at s_r = 0.5.
        const double fy = (y + 0.5) * sy - 0.5;
        const double cy = std::clamp(fy, 0.0, static_cast<double>(src_h - 1));
        const int iy0 = static_cast<int>(std::floor(cy));
        const int iy1 = std::min(iy0 + 1, src_h - 1);
        const double wy = cy - iy0;
        for (int x = 0; x < dst_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const double cx = std::clamp(fx, 0.0, static_cast<double>(src_w - 1));
            const int ix0 = static_cast<int>(std::floor(cx));
            const int ix1 = std::min(ix0 + 1, src_w - 1);
            const double wx = cx - ix0;
            for (int c = 0; c < 3; ++c) {
                const double v00 = image.at(y0 + iy0, x0 + ix0, c);
                const double v01 = image.at(y0 + iy0, x0 + ix1, c);
                const double v10 = image.at(y0 + iy1, x0 + ix0, c);
                const double v11 = image.at(y0 + iy1, x0 + ix1, c);
                patch.image.at(y, x, c) = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                                          wy * ((1 - wx) * v10 + wx * v11);
            }
            const int ny = y0 + std::min(src_h - 1, static_cast<int>(std::floor(cy + 0.5)));
            const int nx = x0 + std::min(src_w - 1, static_cast<int>(std::floor(cx + 0.5)));
            patch.shape.at(y, x) = label.at(ny, nx) == class_id ? 1 : 0;
        }
    }
    patch.paste_y = static_cast<int>(rng.uniform_int(0, frame_height - dst_h));
    patch.paste_x = static_cast<int>(rng.uniform_int(0, frame_width - dst_w));
    return patch;
}

MixedPair openremix_target(const ImageTensor& source_image, const LabelMap& source_label,
                           const ImageTensor& target_image, const PseudoLabel& target_pseudo,
                           const MixConfig& cfg, const ClassSpace& cs, Rng& rng) {
    cfg.validate(cs);

    // ClassMix base: paste half of the source classes onto the target.
    const BinaryMask cm = classmix_mask(source_label, rng);
    MixedPair out;
    out.image = blend(cm, source_image, target_image);
    out.label = blend(cm, source_label, target_pseudo.labels);
    out.origin_mask = cm;

    // Resize-and-paste one extra thing class, preferring one that ClassMix
    // did not already select.
    std::vector<int> candidates, unselected;
    for (int id : cfg.thing_class_ids) {
        bool present = false, selected = false;
        for (std::size_t p = 0; p < source_label.data.size(); ++p) {
            if (source_label.data[p] == id) {
                present = true;
                if (cm.data[p]) selected = true;
            }
        }
        if (present) {
            candidates.push_back(id);
            if (!selected) unselected.push_back(id);
        }
    }
    const std::vector<int>& pool = unselected.empty() ? candidates : unselected;
    if (pool.empty()) return out;  // no thing class: plain ClassMix

    const int cls = pool[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(pool.size() - 1)))];
    auto patch = resize_thing_patch(source_image, source_label, cls, cfg.resize_scale,
                                    target_image.height, target_image.width, rng);
    if (!patch) return out;

    for (int y = 0; y < patch->shape.height; ++y)
        for (int x = 0; x < patch->shape.width; ++x)
            if (patch->shape.at(y, x)) {
                const int ty = patch->paste_y + y, tx = patch->paste_x + x;
                for (int c = 0; c < 3; ++c) out.image.at(ty, tx, c) = patch->image.at(y, x, c);
                out.label.at(ty, tx) = cls;
                out.origin_mask.at(ty, tx) = 1;
            }
    return out;
}

MixedPair attach_private(const ImageTensor& source_image, const LabelMap& source_label,
                         const ImageTensor& target_image, const PseudoLabel& target_pseudo,
                         const BinaryMask& private_mask) {
    MixedPair out;
    out.image = blend(private_mask, target_image, source_image);
    out.label = blend(private_mask, target_pseudo.labels, source_label);
    out.origin_mask = private_mask;
    return out;
}

}  // namespace bus
