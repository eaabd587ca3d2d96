#pragma once

#include "crisp/common.hpp"

#include <vector>

namespace crisp {

/// Small channels x height x width image, channel-major.
class Raster {
public:
    Raster() = default;
    Raster(int channels, int height, int width, double fill = 0.0);
    Raster(int channels, int height, int width, std::vector<double> data);

    [[nodiscard]] int channels() const noexcept { return channels_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
    [[nodiscard]] double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

    /// Per-channel mean, used to featurize a crop for the toy aerial encoder.
    [[nodiscard]] Vector channel_means() const;
    [[nodiscard]] double sum() const;

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    [[nodiscard]] std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Crop size used for 256 px aerial tiles.
inline constexpr int kDefaultAerialCrop = 100;

/// One realization of the aerial augmentation pipeline.
struct AugmentDraw {
    int crop_y = 0;
    int crop_x = 0;
    int crop_size = 0;
    bool flip_horizontal = false;
    bool flip_vertical = false;
    int quarter_turns = 0;  // counter-clockwise, 0..3
};

/// Samples crop offsets uniformly, each flip with probability 1/2 and a
/// rotation uniformly from {0, 90, 180, 270} degrees, in that order.
/// Throws CropLargerThanImageError if crop_size exceeds either side.
AugmentDraw draw_augmentation(int height, int width, int crop_size, Rng& rng);

/// The draw that keeps the centered window unchanged.
AugmentDraw centered_identity(int height, int width, int crop_size);

/// Applies crop, horizontal flip, vertical flip, then rotation.
Raster apply_augmentation(const Raster& image, const AugmentDraw& draw);

/// draw_augmentation followed by apply_augmentation.
Raster augment_aerial(const Raster& image, int crop_size, Rng& rng);

}  // namespace crisp
