#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "skilltree/errors.hpp"

namespace skilltree {

using Rng = std::mt19937_64;

namespace diffcore {

/// Dense row-major 2-D array. Vectors are 1×n rows.
template <class T>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(int r, int c, T fill = T(0)) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {
    require(r >= 0 && c >= 0, "negative matrix shape");
  }
  Matrix(int r, int c, std::vector<T> values) : rows(r), cols(c), data(std::move(values)) {
    require(data.size() == static_cast<size_t>(r) * c, "matrix data does not match shape");
  }
  static Matrix row(std::span<const T> v) {
    return Matrix(1, static_cast<int>(v.size()), std::vector<T>(v.begin(), v.end()));
  }

  size_t size() const noexcept { return data.size(); }
  bool same_shape(const Matrix& o) const noexcept { return rows == o.rows && cols == o.cols; }

  T& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  T operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  std::span<T> row_span(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
  std::span<const T> row_span(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }

  template <class U>
  Matrix<U> cast() const {
    Matrix<U> out(rows, cols);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool operator==(const Matrix&) const = default;
};

using Tensor = Matrix<float>;

bool all_finite(std::span<const float> v);
bool all_finite(std::span<const double> v);

/// A named, trainable parameter array. Graphs refer to parameters by address,
/// so owners must keep them at a stable location while a graph is alive.
struct Param {
  std::string name;
  Tensor value;
};

/// Fills with uniform(-bound, +bound).
void fill_uniform(Tensor& t, float bound, Rng& rng);

}  // namespace diffcore
}  // namespace skilltree
