#pragma once

#include <optional>
#include <utility>

#include "bus/core.hpp"
#include "bus/rng.hpp"

namespace bus {

struct MorphConfig {
    int kernel_size = 3;  // odd, >= 3; full square structuring element
    int iterations = 1;
    int crop_size = 64;
    int max_crop_retries = 8;

    void validate() const {
        if (kernel_size < 3 || kernel_size % 2 == 0)
            throw ValidationError("MorphConfig: kernel_size must be odd and >= 3");
        if (iterations < 1) throw ValidationError("MorphConfig: iterations must be >= 1");
        if (crop_size < kernel_size)
            throw ValidationError("MorphConfig: crop_size must be >= kernel_size");
    }
};

/// Binary dilation: output pixel is 1 iff any pixel in the centered
/// kernel_size x kernel_size window is 1. Out-of-bounds counts as 0.
BinaryMask dilate(const BinaryMask& mask, const MorphConfig& cfg);

/// Binary erosion: output pixel is 1 iff every pixel in the centered window
/// is 1. Out-of-bounds counts as 0, so erosion always clears the border.
BinaryMask erode(const BinaryMask& mask, const MorphConfig& cfg);

struct PrivateCrop {
    BinaryMask mask;  // crop_size x crop_size
    int origin_y = 0;
    int origin_x = 0;
};

/// Uniformly random crop_size x crop_size window of the private mask,
/// retried up to max_crop_retries times until it contains at least one
/// private pixel. Empty result means every retry came back all-zero.
std::optional<PrivateCrop> random_private_crop(const BinaryMask& private_mask,
                                               const MorphConfig& cfg, Rng& rng);

struct DeconMasks {
    BinaryMask negatives;  // dilation band: dilate(crop) - crop
    BinaryMask positives;  // erosion core: erode(crop)
};

/// Boundary-band / core masks over a cropped private mask. The band is
/// disjoint from the crop; the core is contained in it.
DeconMasks decon_masks(const BinaryMask& cropped_private, const MorphConfig& cfg);

}  // namespace bus
