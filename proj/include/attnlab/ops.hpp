// Differentiable kernels with hand-derived backward passes.
//
// Storage and elementwise compute use the instantiated scalar type
// (float32 in production); every reduction (dot products, row
// means/variances, loss sums) accumulates in float64 so results do not
// depend on summation batching. Each kernel is deterministic:
// parallelism is only ever across independent output elements, never
// inside one reduction.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "attnlab/matrix.hpp"

namespace attnlab {

// Loss/accuracy positions carrying this label are excluded everywhere.
inline constexpr int32_t kIgnoreLabel = -100;

// ---------------------------------------------------------------------------
// matmul

// C = A[m,k] * B[k,n]
template <typename T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.rows) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols) + " vs " +
                     std::to_string(b.rows));
  }
  Mat<T> c(a.rows, b.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const T* arow = a.row(i);
    T* crow = c.row(i);
    std::vector<double> acc(static_cast<size_t>(n), 0.0);
    for (int t = 0; t < k; ++t) {
      const double av = arow[t];
      const T* brow = b.row(t);
      for (int j = 0; j < n; ++j) {
        acc[j] += av * brow[j];
      }
    }
    for (int j = 0; j < n; ++j) {
      crow[j] = static_cast<T>(acc[j]);
    }
  }
  return c;
}

// C = A[m,k] * B[n,k]^T  (both operands read along contiguous rows)
template <typename T>
Mat<T> matmul_nt(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.cols) {
    throw ShapeError("matmul_nt: inner dimensions " + std::to_string(a.cols) + " vs " +
                     std::to_string(b.cols));
  }
  Mat<T> c(a.rows, b.rows);
  const int m = a.rows, k = a.cols, n = b.rows;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const T* arow = a.row(i);
    T* crow = c.row(i);
    for (int j = 0; j < n; ++j) {
      const T* brow = b.row(j);
      double acc = 0.0;
      for (int t = 0; t < k; ++t) {
        acc += static_cast<double>(arow[t]) * brow[t];
      }
      crow[j] = static_cast<T>(acc);
    }
  }
  return c;
}

// C = A[k,m]^T * B[k,n]
template <typename T>
Mat<T> matmul_tn(const Mat<T>& a, const Mat<T>& b) {
  if (a.rows != b.rows) {
    throw ShapeError("matmul_tn: inner dimensions " + std::to_string(a.rows) + " vs " +
                     std::to_string(b.rows));
  }
  const int m = a.cols, k = a.rows, n = b.cols;
  Mat<T> c(m, n);
  std::vector<double> acc(static_cast<size_t>(m) * n, 0.0);
  for (int t = 0; t < k; ++t) {
    const T* arow = a.row(t);
    const T* brow = b.row(t);
    for (int i = 0; i < m; ++i) {
      const double av = arow[i];
      double* dst = acc.data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        dst[j] += av * brow[j];
      }
    }
  }
  for (size_t idx = 0; idx < c.size(); ++idx) {
    c.data[idx] = static_cast<T>(acc[idx]);
  }
  return c;
}

// dC -> (dA, dB) for C = A*B: dA = dC*B^T, dB = A^T*dC.
template <typename T>
void matmul_backward(const Mat<T>& a, const Mat<T>& b, const Mat<T>& dc, Mat<T>& da, Mat<T>& db) {
  if (dc.rows != a.rows || dc.cols != b.cols) {
    throw ShapeError("matmul_backward: dC shape mismatch");
  }
  da = matmul_nt(dc, b);
  db = matmul_tn(a, dc);
}

// ---------------------------------------------------------------------------
// layer norm (frozen affine: backward produces dx only)

template <typename T>
struct LayerNormTapeT {
  Mat<T> xhat;              // normalized rows before gain/bias
  std::vector<T> inv_std;   // 1/sqrt(var + eps) per row
};

using LayerNormTape = LayerNormTapeT<float>;

template <typename T>
Mat<T> layer_norm(const Mat<T>& x, std::span<const T> gain, std::span<const T> bias, double eps,
                  LayerNormTapeT<T>* tape = nullptr) {
  const int n = x.rows, d = x.cols;
  if (d < 1 || static_cast<int>(gain.size()) != d || static_cast<int>(bias.size()) != d) {
    throw ShapeError("layer_norm: gain/bias length must equal row width");
  }
  if (!(eps > 0.0)) {
    throw RangeError("layer_norm: eps must be > 0");
  }
  Mat<T> y(n, d);
  if (tape) {
    tape->xhat = Mat<T>(n, d);
    tape->inv_std.assign(static_cast<size_t>(n), T(0));
  }
  for (int i = 0; i < n; ++i) {
    const T* xi = x.row(i);
    double mean = 0.0;
    for (int j = 0; j < d; ++j) {
      mean += xi[j];
    }
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xi[j] - mean;
      var += c * c;
    }
    var /= d;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    T* yi = y.row(i);
    for (int j = 0; j < d; ++j) {
      const T xh = static_cast<T>((xi[j] - mean) * inv_std);
      yi[j] = xh * gain[j] + bias[j];
      if (tape) {
        tape->xhat(i, j) = xh;
      }
    }
    if (tape) {
      tape->inv_std[i] = static_cast<T>(inv_std);
    }
  }
  return y;
}

// dx_i = inv_std * (dxhat_i - mean(dxhat) - xhat_i * mean(dxhat . xhat))
// with dxhat = dy * gain. Gain/bias are frozen upstream, so their
// gradients are never formed.
template <typename T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const LayerNormTapeT<T>& tape,
                           std::span<const T> gain) {
  const int n = dy.rows, d = dy.cols;
  if (!dy.same_shape(tape.xhat)) {
    throw ShapeError("layer_norm_backward: dy shape mismatch with tape");
  }
  Mat<T> dx(n, d);
  for (int i = 0; i < n; ++i) {
    const T* dyi = dy.row(i);
    const T* xh = tape.xhat.row(i);
    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (int j = 0; j < d; ++j) {
      const double dxh = static_cast<double>(dyi[j]) * gain[j];
      sum_dxhat += dxh;
      sum_dxhat_xhat += dxh * xh[j];
    }
    const double m1 = sum_dxhat / d;
    const double m2 = sum_dxhat_xhat / d;
    const double inv_std = tape.inv_std[i];
    T* dxi = dx.row(i);
    for (int j = 0; j < d; ++j) {
      const double dxh = static_cast<double>(dyi[j]) * gain[j];
      dxi[j] = static_cast<T>(inv_std * (dxh - m1 - xh[j] * m2));
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// masked softmax

// Row-wise softmax over allowed entries; masked entries get probability
// exactly 0. A row with no allowed entry violates the caller contract
// (the corpus pipeline guarantees key 0 is always a valid key).
template <typename T>
Mat<T> masked_softmax(const Mat<T>& scores, const BoolMat& mask) {
  if (scores.rows != mask.rows || scores.cols != mask.cols) {
    throw ShapeError("masked_softmax: mask shape mismatch");
  }
  Mat<T> p(scores.rows, scores.cols);
  int fully_masked_row = -1;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < scores.rows; ++i) {
    const T* si = scores.row(i);
    T* pi = p.row(i);
    double maxv = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < scores.cols; ++j) {
      if (mask(i, j) && si[j] > maxv) {
        maxv = si[j];
      }
    }
    if (maxv == -std::numeric_limits<double>::infinity()) {
      // cannot throw from inside the parallel region
#pragma omp critical
      fully_masked_row = i;
      continue;
    }
    double z = 0.0;
    for (int j = 0; j < scores.cols; ++j) {
      if (mask(i, j)) {
        const double e = std::exp(si[j] - maxv);
        pi[j] = static_cast<T>(e);
        z += e;
      } else {
        pi[j] = T(0);
      }
    }
    const double inv_z = 1.0 / z;
    for (int j = 0; j < scores.cols; ++j) {
      if (mask(i, j)) {
        pi[j] = static_cast<T>(pi[j] * inv_z);
      }
    }
  }
  if (fully_masked_row >= 0) {
    throw ContractError("masked_softmax: fully masked row " + std::to_string(fully_masked_row));
  }
  return p;
}

// ds = p . (dp - sum(dp . p)), rows independent; masked entries stay 0.
template <typename T>
Mat<T> masked_softmax_backward(const Mat<T>& p, const Mat<T>& dp, const BoolMat& mask) {
  if (!p.same_shape(dp) || p.rows != mask.rows || p.cols != mask.cols) {
    throw ShapeError("masked_softmax_backward: shape mismatch");
  }
  Mat<T> ds(p.rows, p.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < p.rows; ++i) {
    const T* pi = p.row(i);
    const T* dpi = dp.row(i);
    T* dsi = ds.row(i);
    double dot = 0.0;
    for (int j = 0; j < p.cols; ++j) {
      if (mask(i, j)) {
        dot += static_cast<double>(dpi[j]) * pi[j];
      }
    }
    for (int j = 0; j < p.cols; ++j) {
      dsi[j] = mask(i, j) ? static_cast<T>(pi[j] * (dpi[j] - dot)) : T(0);
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// masked cross entropy

template <typename T>
struct CrossEntropyResultT {
  double loss_sum = 0.0;   // nats, summed over valid positions
  int64_t valid_count = 0;
  Mat<T> dlogits;          // d(loss_sum)/dlogits; all-zero rows at ignored positions
};

using CrossEntropyResult = CrossEntropyResultT<float>;

// labels[i] in [0, V) or kIgnoreLabel. Token-averaged loss is
// loss_sum / valid_count, computed by the caller so batches can be
// weighted by their valid-token counts.
template <typename T>
CrossEntropyResultT<T> cross_entropy_masked(const Mat<T>& logits, std::span<const int32_t> labels,
                                            bool want_grad = true) {
  const int n = logits.rows, v = logits.cols;
  if (static_cast<int>(labels.size()) != n) {
    throw ShapeError("cross_entropy_masked: labels length != logit rows");
  }
  CrossEntropyResultT<T> res;
  if (want_grad) {
    res.dlogits = Mat<T>(n, v);
  }
  for (int i = 0; i < n; ++i) {
    const int32_t label = labels[i];
    if (label == kIgnoreLabel) {
      continue;  // contributes exactly zero loss and zero gradient
    }
    if (label < 0 || label >= v) {
      throw RangeError("cross_entropy_masked: label " + std::to_string(label) + " outside [0," +
                       std::to_string(v) + ")");
    }
    const T* li = logits.row(i);
    double maxv = li[0];
    for (int j = 1; j < v; ++j) {
      maxv = std::max(maxv, static_cast<double>(li[j]));
    }
    double z = 0.0;
    for (int j = 0; j < v; ++j) {
      z += std::exp(li[j] - maxv);
    }
    const double log_z = std::log(z);
    res.loss_sum += log_z - (li[label] - maxv);
    res.valid_count += 1;
    if (want_grad) {
      T* gi = res.dlogits.row(i);
      for (int j = 0; j < v; ++j) {
        double p = std::exp(li[j] - maxv) / z;
        if (j == label) {
          p -= 1.0;
        }
        gi[j] = static_cast<T>(p);
      }
    }
  }
  if (res.valid_count == 0) {
    throw ContractError("cross_entropy_masked: no valid targets");
  }
  if (!std::isfinite(res.loss_sum)) {
    throw NumericError("cross_entropy_masked: non-finite loss");
  }
  return res;
}

}  // namespace attnlab
