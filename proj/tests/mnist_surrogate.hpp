// Deterministic 28x28 renders of handwritten-style zeros and ones, used by
// the acceptance suite when no real MNIST IDX files are available. The
// corpus goes through the real IDX writer and parser, so the full data path
// is exercised either way.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cqural/data.hpp"

namespace surrogate {

inline cqural::LabeledImage render_digit(int label, std::mt19937& rng, long source_index) {
    cqural::LabeledImage img;
    img.channels = 1;
    img.height = 28;
    img.width = 28;
    img.label = label;
    img.source_index = source_index;
    img.pixels.assign(28 * 28, 0.0);

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double cx = 13.5 + 3.0 * (uni(rng) - 0.5);
    const double cy = 13.5 + 3.0 * (uni(rng) - 0.5);
    const double tilt = 0.5 * (uni(rng) - 0.5);

    if (label == 0) {
        const double rx = 4.5 + 2.5 * uni(rng);
        const double ry = 6.5 + 2.5 * uni(rng);
        const double thickness = 1.1 + 0.8 * uni(rng);
        for (int y = 0; y < 28; ++y) {
            for (int x = 0; x < 28; ++x) {
                const double dx = (x - cx + tilt * (y - cy)) / rx;
                const double dy = (y - cy) / ry;
                const double r = std::sqrt(dx * dx + dy * dy);
                const double d = std::abs(r - 1.0) * std::min(rx, ry);
                if (d < thickness) {
                    img.pixels[static_cast<size_t>(y * 28 + x)] =
                        std::clamp(255.0 * (1.0 - d / thickness) + 60.0, 0.0, 255.0);
                }
            }
        }
    } else {
        const double half_width = 0.9 + 0.7 * uni(rng);
        const int top = 4 + static_cast<int>(3.0 * uni(rng));
        const int bottom = 23 - static_cast<int>(3.0 * uni(rng));
        for (int y = top; y <= bottom; ++y) {
            const double center = cx + tilt * (y - cy);
            for (int x = 0; x < 28; ++x) {
                const double d = std::abs(x - center);
                if (d < half_width + 1.0) {
                    img.pixels[static_cast<size_t>(y * 28 + x)] = std::max(
                        img.pixels[static_cast<size_t>(y * 28 + x)],
                        std::clamp(255.0 * (1.0 - d / (half_width + 1.0)) + 60.0, 0.0, 255.0));
                }
            }
        }
        // Short diagonal flag at the top of the stroke.
        for (int s = 0; s < 4; ++s) {
            const int y = top + s;
            const int x = static_cast<int>(cx + tilt * (y - cy)) - s;
            if (x >= 0 && x < 28 && y >= 0 && y < 28) {
                img.pixels[static_cast<size_t>(y * 28 + x)] = 200.0;
            }
        }
    }

    for (auto& p : img.pixels) {
        p = std::clamp(p + 12.0 * uni(rng), 0.0, 255.0);
    }
    return img;
}

inline std::vector<cqural::LabeledImage> digit_corpus(int per_class, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<cqural::LabeledImage> out;
    out.reserve(static_cast<size_t>(2 * per_class));
    for (int i = 0; i < per_class; ++i) {
        out.push_back(render_digit(0, rng, static_cast<long>(out.size())));
        out.push_back(render_digit(1, rng, static_cast<long>(out.size())));
    }
    return out;
}

}  // namespace surrogate
