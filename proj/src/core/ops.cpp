// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kernels.hpp"
#include "qkd/core/error.hpp"

namespace qkd {

namespace {

template <typename T>
using Node = TensorNode<T>;

template <typename T>
bool wants_grad(const Node<T>& n) {
  return n.tracked();
}

enum class Broadcast { kSame, kRows };

template <typename T>
Broadcast broadcast_kind(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sb.size() < sa.size() && std::equal(sb.begin(), sb.end(), sa.end() - sb.size())) {
    return Broadcast::kRows;
  }
  throw DimensionError(std::string(op) + ": cannot combine " + shape_str(sa) + " with " +
                       shape_str(sb));
}

template <typename T>
Tensor<T> binary_additive(const Tensor<T>& a, const Tensor<T>& b, T sign, const char* op) {
  const Broadcast kind = broadcast_kind(a, b, op);
  const std::size_t n = a.numel();
  const std::size_t period = b.numel();
  std::vector<T> out(n);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = ad[i] + sign * bd[i % period];
  return Tensor<T>::make_result(a.shape(), std::move(out), op, {a, b}, [sign, kind](Node<T>& self) {
    Node<T>& na = *self.inputs[0];
    Node<T>& nb = *self.inputs[1];
    const std::size_t size = self.grad.size();
    if (wants_grad(na)) {
      for (std::size_t i = 0; i < size; ++i) na.grad[i] += self.grad[i];
    }
    if (wants_grad(nb)) {
      if (kind == Broadcast::kSame) {
        for (std::size_t i = 0; i < size; ++i) nb.grad[i] += sign * self.grad[i];
      } else {
        const std::size_t p = nb.grad.size();
        for (std::size_t i = 0; i < size; ++i) nb.grad[i % p] += sign * self.grad[i];
      }
    }
  });
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n, T(0));
  kernels::gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data());
  return Tensor<T>::make_result({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node<T>& self) {
    Node<T>& na = *self.inputs[0];
    Node<T>& nb = *self.inputs[1];
    // dA = dC * B^T, dB = A^T * dC
    if (wants_grad(na)) kernels::gemm_nt(m, k, n, self.grad.data(), nb.data.data(), na.grad.data());
    if (wants_grad(nb)) kernels::gemm_tn(k, n, m, na.data.data(), self.grad.data(), nb.grad.data());
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_additive(a, b, T(1), "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_additive(a, b, T(-1), "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mul: shapes differ " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const std::size_t n = a.numel();
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] * b.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), "mul", {a, b}, [](Node<T>& self) {
    Node<T>& na = *self.inputs[0];
    Node<T>& nb = *self.inputs[1];
    const std::size_t size = self.grad.size();
    if (wants_grad(na)) {
      for (std::size_t i = 0; i < size; ++i) na.grad[i] += self.grad[i] * nb.data[i];
    }
    if (wants_grad(nb)) {
      for (std::size_t i = 0; i < size; ++i) nb.grad[i] += self.grad[i] * na.data[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return Tensor<T>::make_result(a.shape(), std::move(out), "scale", {a}, [factor](Node<T>& self) {
    Node<T>& na = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> scale_by(const Tensor<T>& a, const Tensor<T>& factor) {
  if (factor.numel() != 1) {
    throw DimensionError("scale_by: factor must be scalar, got " + shape_str(factor.shape()));
  }
  const T f = factor.item();
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * f;
  return Tensor<T>::make_result(a.shape(), std::move(out), "scale_by", {a, factor},
                                [](Node<T>& self) {
    Node<T>& na = *self.inputs[0];
    Node<T>& nf = *self.inputs[1];
    const T f = nf.data[0];
    if (wants_grad(na)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[i] += self.grad[i] * f;
    }
    if (wants_grad(nf)) {
      T acc = T(0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * na.data[i];
      nf.grad[0] += acc;
    }
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] <= T(0) ? T(0) : x.data()[i];  // NaN passes through
  return Tensor<T>::make_result(x.shape(), std::move(out), "relu", {x}, [](Node<T>& self) {
    Node<T>& nx = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (nx.data[i] > T(0)) nx.grad[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.data()) acc += v;
  return Tensor<T>::make_result({1}, {acc}, "sum", {x}, [](Node<T>& self) {
    Node<T>& nx = *self.inputs[0];
    const T g = self.grad[0];
    for (T& v : nx.grad) v += g;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) throw DimensionError("mean: empty tensor");
  T acc = T(0);
  for (T v : x.data()) acc += v;
  const T inv = T(1) / static_cast<T>(x.numel());
  return Tensor<T>::make_result({1}, {acc * inv}, "mean", {x}, [inv](Node<T>& self) {
    Node<T>& nx = *self.inputs[0];
    const T g = self.grad[0] * inv;
    for (T& v : nx.grad) v += g;
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return Tensor<T>::make_result(std::move(shape), std::move(out), "reshape", {x}, [](Node<T>& self) {
    Node<T>& nx = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) nx.grad[i] += self.grad[i];
  });
}

namespace {

struct ConvDims {
  std::size_t n, c, h, w, f, kh, kw, ho, wo, stride, pad;
  std::size_t col_rows() const { return c * kh * kw; }
  std::size_t col_cols() const { return ho * wo; }
};

template <typename T>
void im2col(const ConvDims& d, const T* image, T* cols) {
  const std::size_t ncols = d.col_cols();
  for (std::size_t ch = 0; ch < d.c; ++ch) {
    for (std::size_t ki = 0; ki < d.kh; ++ki) {
      for (std::size_t kj = 0; kj < d.kw; ++kj) {
        T* row = cols + ((ch * d.kh + ki) * d.kw + kj) * ncols;
        for (std::size_t oy = 0; oy < d.ho; ++oy) {
          const long iy = static_cast<long>(oy * d.stride + ki) - static_cast<long>(d.pad);
          for (std::size_t ox = 0; ox < d.wo; ++ox) {
            const long ix = static_cast<long>(ox * d.stride + kj) - static_cast<long>(d.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(d.h) &&
                                ix < static_cast<long>(d.w);
            row[oy * d.wo + ox] = inside ? image[(ch * d.h + iy) * d.w + ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvDims& d, const T* cols, T* image) {
  const std::size_t ncols = d.col_cols();
  for (std::size_t ch = 0; ch < d.c; ++ch) {
    for (std::size_t ki = 0; ki < d.kh; ++ki) {
      for (std::size_t kj = 0; kj < d.kw; ++kj) {
        const T* row = cols + ((ch * d.kh + ki) * d.kw + kj) * ncols;
        for (std::size_t oy = 0; oy < d.ho; ++oy) {
          const long iy = static_cast<long>(oy * d.stride + ki) - static_cast<long>(d.pad);
          if (iy < 0 || iy >= static_cast<long>(d.h)) continue;
          for (std::size_t ox = 0; ox < d.wo; ++ox) {
            const long ix = static_cast<long>(ox * d.stride + kj) - static_cast<long>(d.pad);
            if (ix < 0 || ix >= static_cast<long>(d.w)) continue;
            image[(ch * d.h + iy) * d.w + ix] += row[oy * d.wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, Conv2dGeometry geometry) {
  if (x.rank() != 4 || kernel.rank() != 4 || x.dim(1) != kernel.dim(1)) {
    throw DimensionError("conv2d: input " + shape_str(x.shape()) + " incompatible with kernel " +
                         shape_str(kernel.shape()));
  }
  if (geometry.stride == 0) throw DimensionError("conv2d: stride must be >= 1");
  ConvDims d{};
  d.n = x.dim(0);
  d.c = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.f = kernel.dim(0);
  d.kh = kernel.dim(2);
  d.kw = kernel.dim(3);
  d.stride = geometry.stride;
  d.pad = geometry.pad;
  if (d.h + 2 * d.pad < d.kh || d.w + 2 * d.pad < d.kw) {
    throw DimensionError("conv2d: kernel " + shape_str(kernel.shape()) + " larger than padded input " +
                         shape_str(x.shape()));
  }
  d.ho = (d.h + 2 * d.pad - d.kh) / d.stride + 1;
  d.wo = (d.w + 2 * d.pad - d.kw) / d.stride + 1;

  const std::size_t in_size = d.c * d.h * d.w;
  const std::size_t out_size = d.f * d.ho * d.wo;
  std::vector<T> out(d.n * out_size, T(0));
  std::vector<T> cols(d.col_rows() * d.col_cols());
  for (std::size_t img = 0; img < d.n; ++img) {
    im2col(d, x.data().data() + img * in_size, cols.data());
    kernels::gemm_nn(d.f, d.col_cols(), d.col_rows(), kernel.data().data(), cols.data(),
                     out.data() + img * out_size);
  }
  return Tensor<T>::make_result({d.n, d.f, d.ho, d.wo}, std::move(out), "conv2d", {x, kernel},
                                [d, in_size, out_size](Node<T>& self) {
    Node<T>& nx = *self.inputs[0];
    Node<T>& nk = *self.inputs[1];
    std::vector<T> cols(d.col_rows() * d.col_cols());
    std::vector<T> dcols(wants_grad(nx) ? cols.size() : 0);
    for (std::size_t img = 0; img < d.n; ++img) {
      const T* dout = self.grad.data() + img * out_size;
      if (wants_grad(nk)) {
        im2col(d, nx.data.data() + img * in_size, cols.data());
        kernels::gemm_nt(d.f, d.col_rows(), d.col_cols(), dout, cols.data(), nk.grad.data());
      }
      if (wants_grad(nx)) {
        std::fill(dcols.begin(), dcols.end(), T(0));
        kernels::gemm_tn(d.col_rows(), d.col_cols(), d.f, nk.data.data(), dout, dcols.data());
        col2im(d, dcols.data(), nx.grad.data() + img * in_size);
      }
    }
  });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  if (x.rank() != 4) throw DimensionError("global_avg_pool: expects [N,C,H,W], got " + shape_str(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (hw == 0) throw DimensionError("global_avg_pool: empty spatial extent");
  std::vector<T> out(n * c, T(0));
  const T inv = T(1) / static_cast<T>(hw);
  for (std::size_t i = 0; i < n * c; ++i) {
    T acc = T(0);
    for (std::size_t s = 0; s < hw; ++s) acc += x.data()[i * hw + s];
    out[i] = acc * inv;
  }
  return Tensor<T>::make_result({n, c}, std::move(out), "global_avg_pool", {x},
                                [hw, inv](Node<T>& self) {
    Node<T>& nx = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T g = self.grad[i] * inv;
      for (std::size_t s = 0; s < hw; ++s) nx.grad[i * hw + s] += g;
    }
  });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var,
                     const BatchNormOptions& options) {
  if (x.rank() != 2 && x.rank() != 4) {
    throw DimensionError("batch_norm: expects [N,C] or [N,C,H,W], got " + shape_str(x.shape()));
  }
  const std::size_t n = x.dim(0), c = x.dim(1);
  const std::size_t inner = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  for (const Tensor<T>* t : std::initializer_list<const Tensor<T>*>{&gamma, &beta, &running_mean, &running_var}) {
    if (t->numel() != c) {
      throw DimensionError("batch_norm: per-channel tensor " + shape_str(t->shape()) +
                           " does not match " + std::to_string(c) + " channels");
    }
  }
  const std::size_t count = n * inner;
  if (options.training && count < 2) {
    throw DimensionError("batch_norm: training mode needs at least 2 values per channel");
  }
  std::vector<T> mu(c), inv_std(c);
  const auto xd = x.data();
  if (options.training) {
    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const T* p = xd.data() + (i * c + ch) * inner;
        for (std::size_t j = 0; j < inner; ++j) s += p[j];
      }
      const double m = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const T* p = xd.data() + (i * c + ch) * inner;
        for (std::size_t j = 0; j < inner; ++j) ss += (p[j] - m) * (p[j] - m);
      }
      const double var = ss / static_cast<double>(count);
      mu[ch] = static_cast<T>(m);
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var + options.eps));
      const double unbiased = ss / static_cast<double>(count - 1);
      rm[ch] = static_cast<T>((1.0 - options.momentum) * rm[ch] + options.momentum * m);
      rv[ch] = static_cast<T>((1.0 - options.momentum) * rv[ch] + options.momentum * unbiased);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = running_mean.data()[ch];
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var.data()[ch]) +
                                                   options.eps));
    }
  }
  std::vector<T> xhat(x.numel()), out(x.numel());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (i * c + ch) * inner;
      for (std::size_t j = 0; j < inner; ++j) {
        const T h = (xd[base + j] - mu[ch]) * inv_std[ch];
        xhat[base + j] = h;
        out[base + j] = gamma.data()[ch] * h + beta.data()[ch];
      }
    }
  }
  const bool training = options.training;
  return Tensor<T>::make_result(
      x.shape(), std::move(out), "batch_norm", {x, gamma, beta},
      [n, c, inner, count, training, xhat = std::move(xhat), inv_std](Node<T>& self) {
        Node<T>& nx = *self.inputs[0];
        Node<T>& ng = *self.inputs[1];
        Node<T>& nb = *self.inputs[2];
        for (std::size_t ch = 0; ch < c; ++ch) {
          T sum_dy = T(0), sum_dy_xhat = T(0);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (i * c + ch) * inner;
            for (std::size_t j = 0; j < inner; ++j) {
              sum_dy += self.grad[base + j];
              sum_dy_xhat += self.grad[base + j] * xhat[base + j];
            }
          }
          if (wants_grad(ng)) ng.grad[ch] += sum_dy_xhat;
          if (wants_grad(nb)) nb.grad[ch] += sum_dy;
          if (!wants_grad(nx)) continue;
          const T g = ng.data[ch];
          const T scale_x = g * inv_std[ch];
          const T inv_count = T(1) / static_cast<T>(count);
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (i * c + ch) * inner;
            for (std::size_t j = 0; j < inner; ++j) {
              const T dy = self.grad[base + j];
              if (training) {
                nx.grad[base + j] +=
                    scale_x * (dy - inv_count * sum_dy - xhat[base + j] * inv_count * sum_dy_xhat);
              } else {
                nx.grad[base + j] += scale_x * dy;
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits, T tau) {
  if (!(tau > T(0))) throw DomainError("softmax: temperature must be positive");
  if (logits.rank() == 0 || logits.numel() == 0) throw DimensionError("softmax: empty input");
  const std::size_t classes = logits.shape().back();
  const std::size_t rows = logits.numel() / classes;
  std::vector<T> out(logits.numel());
  const auto z = logits.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* zr = z.data() + r * classes;
    T* pr = out.data() + r * classes;
    const T zmax = *std::max_element(zr, zr + classes);
    T denom = T(0);
    for (std::size_t j = 0; j < classes; ++j) {
      pr[j] = std::exp((zr[j] - zmax) / tau);
      denom += pr[j];
    }
    for (std::size_t j = 0; j < classes; ++j) pr[j] /= denom;
  }
  return Tensor<T>::make_result(logits.shape(), std::move(out), "softmax", {logits},
                                [rows, classes, tau](Node<T>& self) {
    Node<T>& nz = *self.inputs[0];
    for (std::size_t r = 0; r < rows; ++r) {
      const T* p = self.data.data() + r * classes;
      const T* dp = self.grad.data() + r * classes;
      T dot = T(0);
      for (std::size_t j = 0; j < classes; ++j) dot += dp[j] * p[j];
      T* dz = nz.grad.data() + r * classes;
      for (std::size_t j = 0; j < classes; ++j) dz[j] += p[j] * (dp[j] - dot) / tau;
    }
  });
}

namespace {

template <typename T>
void check_distribution_rows(const Tensor<T>& t, const char* what) {
  const std::size_t classes = t.shape().back();
  const std::size_t rows = t.numel() / classes;
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      const T v = t.data()[r * classes + j];
      if (!(v >= T(0))) {
        throw DomainError(std::string("cross_entropy: ") + what + " row " + std::to_string(r) +
                          " has a negative or NaN entry");
      }
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-5) {
      throw DomainError(std::string("cross_entropy: ") + what + " row " + std::to_string(r) +
                        " sums to " + std::to_string(s));
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& target, const Tensor<T>& model) {
  if (target.shape() != model.shape() || model.rank() == 0 || model.numel() == 0) {
    throw DimensionError("cross_entropy: target " + shape_str(target.shape()) + " vs model " +
                         shape_str(model.shape()));
  }
  check_distribution_rows(target, "target");
  check_distribution_rows(model, "model");
  const std::size_t classes = model.shape().back();
  const std::size_t rows = model.numel() / classes;
  const T floor = static_cast<T>(kLogFloor);
  T total = T(0);
  for (std::size_t i = 0; i < model.numel(); ++i) {
    const T t = target.data()[i];
    if (t != T(0)) total -= t * std::log(std::max(model.data()[i], floor));
  }
  const T inv_rows = T(1) / static_cast<T>(rows);
  return Tensor<T>::make_result({1}, {total * inv_rows}, "cross_entropy", {target, model},
                                [inv_rows, floor](Node<T>& self) {
    Node<T>& nt = *self.inputs[0];
    Node<T>& nm = *self.inputs[1];
    const T g = self.grad[0] * inv_rows;
    for (std::size_t i = 0; i < nm.data.size(); ++i) {
      const T p = nm.data[i];
      if (wants_grad(nm) && p > floor) nm.grad[i] -= g * nt.data[i] / p;
      if (wants_grad(nt)) nt.grad[i] -= g * std::log(std::max(p, floor));
    }
  });
}

template <typename T>
Tensor<T> one_hot(std::span<const int> labels, std::size_t num_classes) {
  std::vector<T> out(labels.size() * num_classes, T(0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw DomainError("one_hot: label " + std::to_string(labels[i]) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
    out[i * num_classes + static_cast<std::size_t>(labels[i])] = T(1);
  }
  return Tensor<T>({labels.size(), num_classes}, std::move(out));
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& x) {
  if (x.rank() != 2) throw DimensionError("argmax_rows: expects [rows, C], got " + shape_str(x.shape()));
  const std::size_t rows = x.dim(0), classes = x.dim(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x.data().data() + r * classes;
    out[r] = static_cast<int>(std::max_element(row, row + classes) - row);
  }
  return out;
}

#define QKD_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> scale_by(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> relu(const Tensor<T>&);                                                     \
  template Tensor<T> sum(const Tensor<T>&);                                                      \
  template Tensor<T> mean(const Tensor<T>&);                                                     \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                           \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, Conv2dGeometry);                 \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                          \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&, \
                                Tensor<T>&, const BatchNormOptions&);                            \
  template Tensor<T> softmax(const Tensor<T>&, T);                                               \
  template Tensor<T> cross_entropy(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> one_hot<T>(std::span<const int>, std::size_t);                              \
  template std::vector<int> argmax_rows(const Tensor<T>&);

QKD_INSTANTIATE_OPS(float)
QKD_INSTANTIATE_OPS(double)

}  // namespace qkd
