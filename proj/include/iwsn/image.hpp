#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace iwsn {

/// Single-channel image with row-major storage.
class ImagePlane {
public:
    ImagePlane() = default;
    ImagePlane(std::size_t width, std::size_t height, double fill = 0.0);
    ImagePlane(std::size_t width, std::size_t height, std::vector<double> values);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& at(std::size_t row, std::size_t col) noexcept { return values_[row * width_ + col]; }
    double at(std::size_t row, std::size_t col) const noexcept { return values_[row * width_ + col]; }

    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * width_, width_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {values_.data() + r * width_, width_};
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool all_finite() const noexcept;

    friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> values_;
};

}  // namespace iwsn
