#include "iwsn/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iwsn/error.hpp"

namespace iwsn {

ImagePlane::ImagePlane(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), values_(width * height, fill) {
    if (width == 0 || height == 0) {
        throw DataError("image plane must be at least 1x1");
    }
}

ImagePlane::ImagePlane(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width == 0 || height == 0) {
        throw DataError("image plane must be at least 1x1");
    }
    if (values_.size() != width * height) {
        throw DataError("image plane holds " + std::to_string(values_.size()) + " values, expected " +
                        std::to_string(width) + "x" + std::to_string(height));
    }
}

bool ImagePlane::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace iwsn
