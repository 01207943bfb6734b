#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

// reference cubic convolution, evaluated term by term
namespace oracle {

inline double keys_kernel(double x, double a) {
    const double ax = std::fabs(x);
    const double ax2 = ax * ax, ax3 = ax2 * ax;
    if (ax <= 1.0) return (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0;
    if (ax < 2.0) return a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a;
    return 0.0;
}

// pixel-space position of a [-1,1] coordinate on an n-cell axis, cell centres at integers
inline double source_position(double norm, int n) { return (norm + 1.0) / 2.0 * n - 0.5; }

// 2-D separable interpolation of f(row, col) on an h x w grid with clamped indices
inline double interp2(const std::function<double(int, int)>& f, int h, int w, double y, double x, double a) {
    const double sy = source_position(y, h), sx = source_position(x, w);
    const int by = static_cast<int>(std::floor(sy)), bx = static_cast<int>(std::floor(sx));
    double total = 0.0;
    for (int j = by - 1; j <= by + 2; ++j) {
        const double wy = keys_kernel(sy - j, a);
        for (int i = bx - 1; i <= bx + 2; ++i) {
            const double wx = keys_kernel(sx - i, a);
            total += wy * wx * f(std::clamp(j, 0, h - 1), std::clamp(i, 0, w - 1));
        }
    }
    return total;
}

}  // namespace oracle
