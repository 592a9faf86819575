#pragma once

#include <optional>
#include <vector>

#include "bus/core.hpp"
#include "bus/pseudolabel.hpp"
#include "bus/rng.hpp"

namespace bus {

struct MixConfig {
    double resize_scale = 0.5;          // s_r for the resize-and-paste step
    std::vector<int> thing_class_ids;   // classes eligible for resize-paste

    void validate(const ClassSpace& cs) const {
        if (!(resize_scale > 0.0)) throw ValidationError("MixConfig: resize_scale must be > 0");
        for (int id : thing_class_ids)
            if (id < 0 || id >= cs.num_known)
                throw ValidationError("MixConfig: thing class outside known classes");
    }
};

/// A mixed (image, label) pair. origin_mask marks pixels whose content came
/// from the foreign domain of the mix (pasted source content in a mixed
/// target, pasted target content in a mixed source).
struct MixedPair {
    ImageTensor image;
    LabelMap label;
    BinaryMask origin_mask;
};

/// out[p] = foreground[p] where mask[p] = 1, else background[p].
ImageTensor blend(const BinaryMask& mask, const ImageTensor& foreground,
                  const ImageTensor& background);
LabelMap blend(const BinaryMask& mask, const LabelMap& foreground, const LabelMap& background);

/// ClassMix mask: pick ceil(K/2) of the classes present in the source label
/// (ignore excluded) uniformly at random; mask their pixels.
BinaryMask classmix_mask(const LabelMap& source_label, Rng& rng);

struct ResizedPatch {
    ImageTensor image;     // bilinear-resized bounding-box crop
    BinaryMask shape;      // nearest-neighbor-resized class membership mask
    int paste_y = 0;
    int paste_x = 0;
};

/// Crop the tight bounding box of class_id, resize it by s_r (bilinear image,
/// nearest label mask) and choose a random origin where the patch fits fully
/// inside an height x width frame. Empty result if it cannot fit.
std::optional<ResizedPatch> resize_thing_patch(const ImageTensor& image, const LabelMap& label,
                                               int class_id, double s_r, int frame_height,
                                               int frame_width, Rng& rng);

/// Mixed target: ClassMix source content onto the target, then resize-paste
/// one extra thing class at a random location. Falls back to plain ClassMix
/// when no thing class is available.
MixedPair openremix_target(const ImageTensor& source_image, const LabelMap& source_label,
                           const ImageTensor& target_image, const PseudoLabel& target_pseudo,
                           const MixConfig& cfg, const ClassSpace& cs, Rng& rng);

/// Mixed source: copy target private regions (and their pseudo-labels) into
/// the source pair. origin_mask is the private mask itself.
MixedPair attach_private(const ImageTensor& source_image, const LabelMap& source_label,
                         const ImageTensor& target_image, const PseudoLabel& target_pseudo,
                         const BinaryMask& private_mask);

}  // namespace bus
