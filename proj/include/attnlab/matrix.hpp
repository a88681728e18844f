// Dense row-major matrix. Production code instantiates Mat<float>
// (storage and elementwise compute are float32 by contract); gradient
// verification instantiates the same kernels at Mat<double>.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "attnlab/error.hpp"
#include "attnlab/rng.hpp"

namespace attnlab {

template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;  // row-major, size == rows * cols

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {
    if (r < 0 || c < 0) {
      throw ShapeError("Mat: negative dimension");
    }
  }

  T& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  T operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  T* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const T* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

  size_t size() const { return data.size(); }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  void fill_normal(SplitMix64& rng, double mean, double stddev) {
    for (T& x : data) {
      x = static_cast<T>(rng.next_normal(mean, stddev));
    }
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) {
      m(i, i) = T(1);
    }
    return m;
  }
};

using Matrix = Mat<float>;

template <typename To, typename From>
Mat<To> cast_mat(const Mat<From>& m) {
  Mat<To> out(m.rows, m.cols);
  for (size_t i = 0; i < m.size(); ++i) {
    out.data[i] = static_cast<To>(m.data[i]);
  }
  return out;
}

// Boolean mask with Mat layout; nonzero = allowed.
struct BoolMat {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> data;

  BoolMat() = default;
  BoolMat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0) {}

  uint8_t& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  uint8_t operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
};

// NaN/Inf anywhere is a hard error, not a value to propagate.
template <typename T>
void check_finite(const Mat<T>& m, const char* what) {
  for (T v : m.data) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw NumericError(std::string("non-finite value in ") + what);
    }
  }
}

}  // namespace attnlab
