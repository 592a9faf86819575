// Test-only reference implementations, kept independent of the library code
// they check.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "bus/core.hpp"

namespace oracle {

/// Windowed-OR dilation, straight from the definition.
inline bus::BinaryMask dilate_bruteforce(const bus::BinaryMask& in, int kernel, int iterations) {
    bus::BinaryMask cur = in;
    const int r = kernel / 2;
    for (int it = 0; it < iterations; ++it) {
        bus::BinaryMask next = bus::BinaryMask::zeros(cur.height, cur.width);
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x) {
                int any = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy >= 0 && yy < cur.height && xx >= 0 && xx < cur.width &&
                            cur.at(yy, xx))
                            any = 1;
                    }
                next.at(y, x) = static_cast<std::uint8_t>(any);
            }
        cur = next;
    }
    return cur;
}

/// Windowed-AND erosion with zero padding.
inline bus::BinaryMask erode_bruteforce(const bus::BinaryMask& in, int kernel, int iterations) {
    bus::BinaryMask cur = in;
    const int r = kernel / 2;
    for (int it = 0; it < iterations; ++it) {
        bus::BinaryMask next = bus::BinaryMask::zeros(cur.height, cur.width);
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x) {
                int all = 1;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (!(yy >= 0 && yy < cur.height && xx >= 0 && xx < cur.width &&
                              cur.at(yy, xx)))
                            all = 0;
                    }
                next.at(y, x) = static_cast<std::uint8_t>(all);
            }
        cur = next;
    }
    return cur;
}

/// Central finite differences of a scalar function of a flat vector.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h = 1e-6) {
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double fp = f(x);
        x[i] = keep - h;
        const double fm = f(x);
        x[i] = keep;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

/// Relative error between gradient vectors: |a - b| / max(|a|, |b|, eps).
inline double gradient_relative_error(const std::vector<double>& a,
                                      const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
    return std::sqrt(diff) / denom;
}

}  // namespace oracle
