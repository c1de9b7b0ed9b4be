#pragma once

#include <cstdint>
#include <vector>

#include "banis/errors.hpp"

namespace banis {

// Strictly two-valued pixel grid used by DSC/GMI and as datagen ground truth.
struct BinaryMask {
    int height = 0, width = 0;
    std::vector<std::uint8_t> v; // 0 or 1

    BinaryMask() = default;
    BinaryMask(int h, int w) : height(h), width(w),
                               v(static_cast<std::size_t>(h) * w, 0) {
        if (h <= 0 || w <= 0) throw ValidationError("mask: bad dimensions");
    }

    std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : v) n += b ? 1 : 0;
        return n;
    }

    bool same_shape(const BinaryMask& o) const {
        return height == o.height && width == o.width;
    }
};

} // namespace banis
