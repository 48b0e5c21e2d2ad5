#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace diiq {

// Dense row-major float matrix. Just enough for the Q-network.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(int r, int c, float fill = 0.0f) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace diiq
