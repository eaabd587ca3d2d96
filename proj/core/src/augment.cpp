#include "crisp/augment.hpp"

#include "crisp/errors.hpp"

#include <numeric>
#include <string>

namespace crisp {

Raster::Raster(int channels, int height, int width, double fill)
    : Raster(channels, height, width,
             std::vector<double>(static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
                                     static_cast<std::size_t>(width),
                                 fill)) {}

Raster::Raster(int channels, int height, int width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (channels < 1 || height < 1 || width < 1) throw ShapeMismatchError("raster dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
                            static_cast<std::size_t>(width)) {
        throw ShapeMismatchError("raster data size does not match its shape");
    }
}

Vector Raster::channel_means() const {
    Vector means(channels_);
    const std::size_t plane = static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
    for (int c = 0; c < channels_; ++c) {
        const auto begin = data_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(c) * plane);
        means(c) = std::accumulate(begin, begin + static_cast<std::ptrdiff_t>(plane), 0.0) / static_cast<double>(plane);
    }
    return means;
}

double Raster::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

namespace {

void check_crop(int height, int width, int crop_size) {
    if (crop_size < 1 || crop_size > height || crop_size > width) {
        throw CropLargerThanImageError("crop of " + std::to_string(crop_size) + " px does not fit a " +
                                       std::to_string(height) + "x" + std::to_string(width) + " image");
    }
}

}  // namespace

AugmentDraw draw_augmentation(int height, int width, int crop_size, Rng& rng) {
    check_crop(height, width, crop_size);
    AugmentDraw d;
    d.crop_size = crop_size;
    d.crop_y = std::uniform_int_distribution<int>(0, height - crop_size)(rng);
    d.crop_x = std::uniform_int_distribution<int>(0, width - crop_size)(rng);
    std::bernoulli_distribution coin(0.5);
    d.flip_horizontal = coin(rng);
    d.flip_vertical = coin(rng);
    d.quarter_turns = std::uniform_int_distribution<int>(0, 3)(rng);
    return d;
}

AugmentDraw centered_identity(int height, int width, int crop_size) {
    check_crop(height, width, crop_size);
    AugmentDraw d;
    d.crop_size = crop_size;
    d.crop_y = (height - crop_size) / 2;
    d.crop_x = (width - crop_size) / 2;
    return d;
}

Raster apply_augmentation(const Raster& image, const AugmentDraw& draw) {
    check_crop(image.height(), image.width(), draw.crop_size);
    const int s = draw.crop_size;
    if (draw.crop_y < 0 || draw.crop_x < 0 || draw.crop_y + s > image.height() || draw.crop_x + s > image.width()) {
        throw CropLargerThanImageError("crop window falls outside the image");
    }
    const int turns = ((draw.quarter_turns % 4) + 4) % 4;

    Raster out(image.channels(), s, s);
    for (int c = 0; c < image.channels(); ++c) {
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) {
                // Output pixel (y, x) of a counter-clockwise rotation by `turns`
                // quarter turns reads the flipped crop at (fy, fx).
                int fy = y;
                int fx = x;
                switch (turns) {
                    case 1: fy = x; fx = s - 1 - y; break;
                    case 2: fy = s - 1 - y; fx = s - 1 - x; break;
                    case 3: fy = s - 1 - x; fx = y; break;
                    default: break;
                }
                // Undo flips: flipped(y, x) = crop(vflip ? s-1-y : y, hflip ? s-1-x : x).
                const int cy = draw.flip_vertical ? s - 1 - fy : fy;
                const int cx = draw.flip_horizontal ? s - 1 - fx : fx;
                out.at(c, y, x) = image.at(c, draw.crop_y + cy, draw.crop_x + cx);
            }
        }
    }
    return out;
}

Raster augment_aerial(const Raster& image, int crop_size, Rng& rng) {
    return apply_augmentation(image, draw_augmentation(image.height(), image.width(), crop_size, rng));
}

}  // namespace crisp
