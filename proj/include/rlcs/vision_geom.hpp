#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace rlcs {

/// H x W grid of D-dimensional position embeddings, row-major: values[(h*W + w)*D + d].
class EmbeddingTable {
public:
    EmbeddingTable(std::size_t height, std::size_t width, std::size_t dim);
    EmbeddingTable(std::size_t height, std::size_t width, std::size_t dim, std::vector<double> values);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<double> at(std::size_t h, std::size_t w) noexcept { return {values_.data() + (h * width_ + w) * dim_, dim_}; }
    std::span<const double> at(std::size_t h, std::size_t w) const noexcept {
        return {values_.data() + (h * width_ + w) * dim_, dim_};
    }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t height_, width_, dim_;
    std::vector<double> values_;
};

struct PatchGrid {
    std::size_t height = 1;  // H_p
    std::size_t width = 1;   // W_p
};

struct NormCoord {
    double x = 0.0;  // w_norm
    double y = 0.0;  // h_norm
};

/// Patch (w, h) to its cell centre in [-1, 1]: 2*(w+0.5)/W_p - 1, 2*(h+0.5)/H_p - 1.
NormCoord normalize_coords(const PatchGrid& grid, std::size_t w, std::size_t h);

/// Cubic convolution kernel; a = -0.5 is Catmull-Rom.
double cubic_kernel(double x, double a = -0.5);

/// Bicubic sample at a normalized coordinate, using the same cell-centre
/// convention on the source table and clamped edge indices.
std::vector<double> bicubic_sample(const EmbeddingTable& table, NormCoord coord, double a = -0.5);

/// Resample the table onto a target patch grid.
EmbeddingTable adapt_table(const EmbeddingTable& table, const PatchGrid& target, double a = -0.5);

}  // namespace rlcs
