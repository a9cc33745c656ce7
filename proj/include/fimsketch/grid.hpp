#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace fimsketch {

// Uniform Cartesian grid on [-1,1]^2 with nx cells per direction.
// Inner nodes (Dirichlet unknowns) are indexed row-major:
//   i = iy*(nx-1) + ix,  coordinates x = -1 + (ix+1)*h, y = -1 + (iy+1)*h.
struct Grid {
    int nx;
    double h;
    int inner_per_dim;
    int num_inner;

    explicit Grid(int nx_cells) : nx(nx_cells) {
        if (nx < 4) throw std::invalid_argument("Grid: nx must be >= 4");
        h = 2.0 / nx;
        inner_per_dim = nx - 1;
        num_inner = inner_per_dim * inner_per_dim;
    }

    Eigen::Vector2d inner_coords(int i) const {
        const int ix = i % inner_per_dim;
        const int iy = i / inner_per_dim;
        return {-1.0 + (ix + 1) * h, -1.0 + (iy + 1) * h};
    }

    bool is_inner(int ix, int iy) const {
        return ix >= 0 && ix < inner_per_dim && iy >= 0 && iy < inner_per_dim;
    }

    // Nearest inner node to a continuous point; ties break toward the
    // smaller node index.
    int nearest_inner(double x1, double x2) const {
        auto snap = [&](double x) {
            int ix = static_cast<int>(std::ceil((x + 1.0) / h - 1.0 - 0.5));
            if (ix < 0) ix = 0;
            if (ix >= inner_per_dim) ix = inner_per_dim - 1;
            return ix;
        };
        return snap(x2) * inner_per_dim + snap(x1);
    }
};

}  // namespace fimsketch
