#include "rlcs/vision_geom.hpp"

#include <array>
#include <cmath>

#include "rlcs/error.hpp"

namespace rlcs {

EmbeddingTable::EmbeddingTable(std::size_t height, std::size_t width, std::size_t dim)
    : EmbeddingTable(height, width, dim, std::vector<double>(height * width * dim, 0.0)) {}

EmbeddingTable::EmbeddingTable(std::size_t height, std::size_t width, std::size_t dim, std::vector<double> values)
    : height_(height), width_(width), dim_(dim), values_(std::move(values)) {
    if (height_ == 0 || width_ == 0 || dim_ == 0)
        throw Error(Errc::invalid_argument, "embedding table dimensions must be positive");
    if (values_.size() != height_ * width_ * dim_)
        throw Error(Errc::invalid_argument, "embedding table value count does not match H*W*D");
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "embedding table holds a non-finite value");
}

NormCoord normalize_coords(const PatchGrid& grid, std::size_t w, std::size_t h) {
    if (grid.width == 0 || grid.height == 0) throw Error(Errc::invalid_argument, "patch grid must be nonempty");
    if (w >= grid.width || h >= grid.height)
        throw Error(Errc::coord_out_of_range, "patch (" + std::to_string(w) + "," + std::to_string(h) +
                                                  ") outside " + std::to_string(grid.width) + "x" +
                                                  std::to_string(grid.height) + " grid");
    return {2.0 * (static_cast<double>(w) + 0.5) / static_cast<double>(grid.width) - 1.0,
            2.0 * (static_cast<double>(h) + 0.5) / static_cast<double>(grid.height) - 1.0};
}

double cubic_kernel(double x, double a) {
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

namespace {

struct Taps {
    std::array<std::size_t, 4> index;
    std::array<double, 4> weight;
};

// normalized coordinate -> 4 clamped source indices and their kernel weights
Taps taps_for(double norm, std::size_t size, double a) {
    const double src = (norm + 1.0) * 0.5 * static_cast<double>(size) - 0.5;
    const double base = std::floor(src);
    const double t = src - base;
    Taps taps{};
    const auto last = static_cast<long long>(size) - 1;
    for (int k = 0; k < 4; ++k) {
        const long long i = static_cast<long long>(base) + k - 1;
        taps.index[k] = static_cast<std::size_t>(i < 0 ? 0 : (i > last ? last : i));
        taps.weight[k] = cubic_kernel(t - (k - 1), a);
    }
    return taps;
}

}  // namespace

std::vector<double> bicubic_sample(const EmbeddingTable& table, NormCoord coord, double a) {
    if (!(coord.x >= -1.0 && coord.x <= 1.0 && coord.y >= -1.0 && coord.y <= 1.0))
        throw Error(Errc::coord_out_of_range, "normalized coordinate outside [-1,1]");
    const Taps tx = taps_for(coord.x, table.width(), a);
    const Taps ty = taps_for(coord.y, table.height(), a);
    std::vector<double> out(table.dim(), 0.0);
    for (int j = 0; j < 4; ++j) {
        for (int i = 0; i < 4; ++i) {
            const double wgt = ty.weight[j] * tx.weight[i];
            if (wgt == 0.0) continue;
            const auto v = table.at(ty.index[j], tx.index[i]);
            for (std::size_t d = 0; d < out.size(); ++d) out[d] += wgt * v[d];
        }
    }
    return out;
}

EmbeddingTable adapt_table(const EmbeddingTable& table, const PatchGrid& target, double a) {
    EmbeddingTable out(target.height, target.width, table.dim());
    for (std::size_t h = 0; h < target.height; ++h) {
        for (std::size_t w = 0; w < target.width; ++w) {
            const auto v = bicubic_sample(table, normalize_coords(target, w, h), a);
            std::copy(v.begin(), v.end(), out.at(h, w).begin());
        }
    }
    return out;
}

}  // namespace rlcs
