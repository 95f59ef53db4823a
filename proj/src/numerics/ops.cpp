#include "table/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace table::numerics {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

struct AxisLayout {
  std::size_t outer;
  std::size_t len;
  std::size_t inner;
};

AxisLayout axis_layout(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + shape_str(shape));
  }
  AxisLayout layout{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) layout.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) layout.inner *= shape[i];
  return layout;
}

void require_rank(const char* op, const Shape& shape, std::size_t rank) {
  if (shape.size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(shape));
  }
}

void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
  }
}

template <typename T>
void accumulate(Node<T>& in, std::span<const T> g) {
  if (!in.requires_grad) return;
  auto dst = in.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank("matmul", a.shape(), 2);
  require_rank("matmul", b.shape(), 2);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dims differ, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  std::vector<T> out(m * n, T(0));
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    T* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = pa[i * k + p];
      if (av == T(0)) continue;
      const T* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return detail::make_result<T>(
      "matmul", {m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node<T>& self) {
        Node<T>& na = *self.inputs[0];
        Node<T>& nb = *self.inputs[1];
        const T* g = self.grad.data();
        if (na.requires_grad) {
          T* ga = na.ensure_grad().data();
          const T* pb = nb.data.data();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const T* brow = pb + p * n;
              const T* grow = g + i * n;
              T acc = T(0);
              for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
              ga[i * k + p] += acc;
            }
          }
        }
        if (nb.requires_grad) {
          T* gb = nb.ensure_grad().data();
          const T* pa = na.data.data();
          for (std::size_t i = 0; i < m; ++i) {
            const T* grow = g + i * n;
            for (std::size_t p = 0; p < k; ++p) {
              const T av = pa[i * k + p];
              if (av == T(0)) continue;
              T* gbrow = gb + p * n;
              for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_rank("transpose", x.shape(), 2);
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<T> out(m * n);
  auto src = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = src[i * n + j];
  return detail::make_result<T>("transpose", {n, m}, std::move(out), {x.node()},
                                [m, n](Node<T>& self) {
                                  Node<T>& in = *self.inputs[0];
                                  auto g = in.ensure_grad();
                                  for (std::size_t i = 0; i < m; ++i)
                                    for (std::size_t j = 0; j < n; ++j)
                                      g[i * n + j] += self.grad[j * m + i];
                                });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a.shape(), b.shape());
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return detail::make_result<T>("add", a.shape(), std::move(out), {a.node(), b.node()},
                                [](Node<T>& self) {
                                  accumulate<T>(*self.inputs[0], self.grad);
                                  accumulate<T>(*self.inputs[1], self.grad);
                                });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a.shape(), b.shape());
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return detail::make_result<T>("sub", a.shape(), std::move(out), {a.node(), b.node()},
                                [](Node<T>& self) {
                                  accumulate<T>(*self.inputs[0], self.grad);
                                  Node<T>& nb = *self.inputs[1];
                                  if (!nb.requires_grad) return;
                                  auto g = nb.ensure_grad();
                                  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
                                });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a.shape(), b.shape());
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return detail::make_result<T>("mul", a.shape(), std::move(out), {a.node(), b.node()},
                                [](Node<T>& self) {
                                  Node<T>& na = *self.inputs[0];
                                  Node<T>& nb = *self.inputs[1];
                                  if (na.requires_grad) {
                                    auto g = na.ensure_grad();
                                    for (std::size_t i = 0; i < g.size(); ++i)
                                      g[i] += self.grad[i] * nb.data[i];
                                  }
                                  if (nb.requires_grad) {
                                    auto g = nb.ensure_grad();
                                    for (std::size_t i = 0; i < g.size(); ++i)
                                      g[i] += self.grad[i] * na.data[i];
                                  }
                                });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  require_rank("add_bias", x.shape(), 2);
  require_rank("add_bias", bias.shape(), 1);
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (bias.dim(0) != n) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " vs rows of " +
                         shape_str(x.shape()));
  }
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] + bias[j];
  return detail::make_result<T>("add_bias", x.shape(), std::move(out), {x.node(), bias.node()},
                                [m, n](Node<T>& self) {
                                  accumulate<T>(*self.inputs[0], self.grad);
                                  Node<T>& nb = *self.inputs[1];
                                  if (!nb.requires_grad) return;
                                  auto g = nb.ensure_grad();
                                  for (std::size_t i = 0; i < m; ++i)
                                    for (std::size_t j = 0; j < n; ++j)
                                      g[j] += self.grad[i * n + j];
                                });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c) {
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * c;
  return detail::make_result<T>("scale", x.shape(), std::move(out), {x.node()},
                                [c](Node<T>& self) {
                                  auto g = self.inputs[0]->ensure_grad();
                                  for (std::size_t i = 0; i < g.size(); ++i)
                                    g[i] += self.grad[i] * c;
                                });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, const Tensor<T>& s) {
  if (s.numel() != 1) {
    throw DimensionError("mul_scalar: factor must hold one element, got " + shape_str(s.shape()));
  }
  const T c = s[0];
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * c;
  return detail::make_result<T>("mul_scalar", x.shape(), std::move(out), {x.node(), s.node()},
                                [](Node<T>& self) {
                                  Node<T>& nx = *self.inputs[0];
                                  Node<T>& ns = *self.inputs[1];
                                  if (nx.requires_grad) {
                                    auto g = nx.ensure_grad();
                                    for (std::size_t i = 0; i < g.size(); ++i)
                                      g[i] += self.grad[i] * ns.data[0];
                                  }
                                  if (ns.requires_grad) {
                                    T acc = T(0);
                                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                                      acc += self.grad[i] * nx.data[i];
                                    ns.ensure_grad()[0] += acc;
                                  }
                                });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(x[i]);
  return detail::make_result<T>("exp", x.shape(), std::move(out), {x.node()}, [](Node<T>& self) {
    auto g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.data[i];
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = T(0.5) * x[i] * (T(1) + std::erf(x[i] * inv_sqrt2));
  }
  return detail::make_result<T>("gelu", x.shape(), std::move(out), {x.node()},
                                [inv_sqrt2](Node<T>& self) {
                                  Node<T>& in = *self.inputs[0];
                                  const T inv_sqrt_2pi =
                                      std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
                                  auto g = in.ensure_grad();
                                  for (std::size_t i = 0; i < g.size(); ++i) {
                                    const T v = in.data[i];
                                    const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
                                    const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
                                    g[i] += self.grad[i] * (cdf + v * pdf);
                                  }
                                });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  const AxisLayout L = axis_layout(x.shape(), axis, "softmax");
  if (L.len == 0) throw DimensionError("softmax: empty axis");
  std::vector<T> out(x.numel());
  auto src = x.data();
  for (std::size_t o = 0; o < L.outer; ++o) {
    for (std::size_t in = 0; in < L.inner; ++in) {
      const std::size_t base = o * L.len * L.inner + in;
      T mx = src[base];
      for (std::size_t j = 1; j < L.len; ++j) mx = std::max(mx, src[base + j * L.inner]);
      T total = T(0);
      for (std::size_t j = 0; j < L.len; ++j) {
        const T e = std::exp(src[base + j * L.inner] - mx);
        out[base + j * L.inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < L.len; ++j) out[base + j * L.inner] /= total;
    }
  }
  return detail::make_result<T>("softmax", x.shape(), std::move(out), {x.node()},
                                [L](Node<T>& self) {
                                  auto g = self.inputs[0]->ensure_grad();
                                  const auto& y = self.data;
                                  const auto& dy = self.grad;
                                  for (std::size_t o = 0; o < L.outer; ++o) {
                                    for (std::size_t in = 0; in < L.inner; ++in) {
                                      const std::size_t base = o * L.len * L.inner + in;
                                      T dot = T(0);
                                      for (std::size_t j = 0; j < L.len; ++j) {
                                        const std::size_t idx = base + j * L.inner;
                                        dot += dy[idx] * y[idx];
                                      }
                                      for (std::size_t j = 0; j < L.len; ++j) {
                                        const std::size_t idx = base + j * L.inner;
                                        g[idx] += y[idx] * (dy[idx] - dot);
                                      }
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, std::size_t axis) {
  const AxisLayout L = axis_layout(x.shape(), axis, "log_softmax");
  if (L.len == 0) throw DimensionError("log_softmax: empty axis");
  std::vector<T> out(x.numel());
  auto src = x.data();
  for (std::size_t o = 0; o < L.outer; ++o) {
    for (std::size_t in = 0; in < L.inner; ++in) {
      const std::size_t base = o * L.len * L.inner + in;
      T mx = src[base];
      for (std::size_t j = 1; j < L.len; ++j) mx = std::max(mx, src[base + j * L.inner]);
      T total = T(0);
      for (std::size_t j = 0; j < L.len; ++j) total += std::exp(src[base + j * L.inner] - mx);
      const T lse = mx + std::log(total);
      for (std::size_t j = 0; j < L.len; ++j) {
        out[base + j * L.inner] = src[base + j * L.inner] - lse;
      }
    }
  }
  return detail::make_result<T>("log_softmax", x.shape(), std::move(out), {x.node()},
                                [L](Node<T>& self) {
                                  auto g = self.inputs[0]->ensure_grad();
                                  const auto& y = self.data;
                                  const auto& dy = self.grad;
                                  for (std::size_t o = 0; o < L.outer; ++o) {
                                    for (std::size_t in = 0; in < L.inner; ++in) {
                                      const std::size_t base = o * L.len * L.inner + in;
                                      T total = T(0);
                                      for (std::size_t j = 0; j < L.len; ++j)
                                        total += dy[base + j * L.inner];
                                      for (std::size_t j = 0; j < L.len; ++j) {
                                        const std::size_t idx = base + j * L.inner;
                                        g[idx] += dy[idx] - std::exp(y[idx]) * total;
                                      }
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  require_rank("layer_norm", gain.shape(), 1);
  require_rank("layer_norm", bias.shape(), 1);
  if (d == 0 || gain.dim(0) != d || bias.dim(0) != d) {
    throw DimensionError("layer_norm: gain/bias must have shape [" + std::to_string(d) + "]");
  }
  if (!(eps > T(0))) throw ContractError("layer_norm: eps must be positive");
  const std::size_t rows = x.numel() / d;
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(rows);
  std::vector<T> out(x.numel());
  auto src = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = src.data() + r * d;
    T mu = T(0);
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= T(d);
    T var = T(0);
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= T(d);
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (xr[j] - mu) * rs;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gain[j] + bias[j];
    }
  }
  return detail::make_result<T>(
      "layer_norm", x.shape(), std::move(out), {x.node(), gain.node(), bias.node()},
      [rows, d, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
        Node<T>& nx = *self.inputs[0];
        Node<T>& ng = *self.inputs[1];
        Node<T>& nb = *self.inputs[2];
        const auto& dy = self.grad;
        if (ng.requires_grad || nb.requires_grad) {
          auto gg = ng.requires_grad ? ng.ensure_grad() : std::span<T>{};
          auto gb = nb.requires_grad ? nb.ensure_grad() : std::span<T>{};
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < d; ++j) {
              if (!gg.empty()) gg[j] += dy[r * d + j] * xhat[r * d + j];
              if (!gb.empty()) gb[j] += dy[r * d + j];
            }
          }
        }
        if (!nx.requires_grad) return;
        auto gx = nx.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          T mean_dh = T(0), mean_dh_h = T(0);
          for (std::size_t j = 0; j < d; ++j) {
            const T dh = dy[r * d + j] * ng.data[j];
            mean_dh += dh;
            mean_dh_h += dh * xhat[r * d + j];
          }
          mean_dh /= T(d);
          mean_dh_h /= T(d);
          for (std::size_t j = 0; j < d; ++j) {
            const T dh = dy[r * d + j] * ng.data[j];
            gx[r * d + j] += rstd[r] * (dh - mean_dh - xhat[r * d + j] * mean_dh_h);
          }
        }
      });
}

template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& x) {
  if (x.rank() == 0) throw DimensionError("l2_normalize: scalar input");
  const std::size_t d = x.shape().back();
  const std::size_t rows = d == 0 ? 0 : x.numel() / d;
  std::vector<T> norms(rows);
  std::vector<T> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    T ss = T(0);
    for (std::size_t j = 0; j < d; ++j) ss += x[r * d + j] * x[r * d + j];
    const T nrm = std::sqrt(ss);
    if (!(nrm > T(0)) || !std::isfinite(T(1) / nrm)) {
      throw NumericError("l2_normalize: zero vector cannot be normalized");
    }
    norms[r] = nrm;
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = x[r * d + j] / nrm;
  }
  return detail::make_result<T>("l2_normalize", x.shape(), std::move(out), {x.node()},
                                [rows, d, norms = std::move(norms)](Node<T>& self) {
                                  auto g = self.inputs[0]->ensure_grad();
                                  const auto& y = self.data;
                                  const auto& dy = self.grad;
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    T dot = T(0);
                                    for (std::size_t j = 0; j < d; ++j)
                                      dot += y[r * d + j] * dy[r * d + j];
                                    for (std::size_t j = 0; j < d; ++j) {
                                      const std::size_t i = r * d + j;
                                      g[i] += (dy[i] - y[i] * dot) / norms[r];
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  Shape shape = parts[0].shape();
  if (axis >= shape.size()) throw DimensionError("concat: axis out of range");
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != shape.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != shape[i]) {
        throw DimensionError("concat: shape mismatch " + shape_str(s) + " vs " +
                             shape_str(shape));
      }
    }
    total += s[axis];
  }
  shape[axis] = total;
  const AxisLayout L = axis_layout(shape, axis, "concat");
  std::vector<T> out(shape_numel(shape));
  std::vector<std::size_t> widths;
  std::vector<NodePtr<T>> inputs;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.shape()[axis];
    const std::size_t chunk = w * L.inner;
    for (std::size_t o = 0; o < L.outer; ++o) {
      std::copy_n(p.data().data() + o * chunk, chunk,
                  out.data() + o * L.len * L.inner + offset * L.inner);
    }
    offset += w;
    widths.push_back(w);
    inputs.push_back(p.node());
  }
  return detail::make_result<T>(
      "concat", std::move(shape), std::move(out), std::move(inputs),
      [L, widths = std::move(widths)](Node<T>& self) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
          Node<T>& in = *self.inputs[k];
          const std::size_t chunk = widths[k] * L.inner;
          if (in.requires_grad) {
            auto g = in.ensure_grad();
            for (std::size_t o = 0; o < L.outer; ++o) {
              const T* src = self.grad.data() + o * L.len * L.inner + offset * L.inner;
              for (std::size_t i = 0; i < chunk; ++i) g[o * chunk + i] += src[i];
            }
          }
          offset += widths[k];
        }
      });
}

template <typename T>
Tensor<T> stack(const std::vector<Tensor<T>>& rows) {
  if (rows.empty()) throw DimensionError("stack: no inputs");
  std::vector<Tensor<T>> as_rows;
  as_rows.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.rank() != 1) throw DimensionError("stack: expected vectors, got " + shape_str(r.shape()));
    as_rows.push_back(reshape(r, Shape{1, r.dim(0)}));
  }
  return concat(std::span<const Tensor<T>>(as_rows), 0);
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const AxisLayout L = axis_layout(x.shape(), axis, "slice");
  if (begin > end || end > L.len) {
    throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of bounds for " + shape_str(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = end - begin;
  const std::size_t chunk = (end - begin) * L.inner;
  std::vector<T> out(L.outer * chunk);
  for (std::size_t o = 0; o < L.outer; ++o) {
    std::copy_n(x.data().data() + o * L.len * L.inner + begin * L.inner, chunk,
                out.data() + o * chunk);
  }
  return detail::make_result<T>("slice", std::move(shape), std::move(out), {x.node()},
                                [L, begin, chunk](Node<T>& self) {
                                  auto g = self.inputs[0]->ensure_grad();
                                  for (std::size_t o = 0; o < L.outer; ++o) {
                                    T* dst = g.data() + o * L.len * L.inner + begin * L.inner;
                                    for (std::size_t i = 0; i < chunk; ++i)
                                      dst[i] += self.grad[o * chunk + i];
                                  }
                                });
}

template <typename T>
Tensor<T> row(const Tensor<T>& x, std::size_t i) {
  require_rank("row", x.shape(), 2);
  return reshape(slice(x, 0, i, i + 1), Shape{x.dim(1)});
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::size_t axis) {
  const AxisLayout L = axis_layout(x.shape(), axis, "mean");
  if (L.len == 0) throw DimensionError("mean: empty axis");
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (shape.empty()) shape.push_back(1);
  std::vector<T> out(L.outer * L.inner, T(0));
  for (std::size_t o = 0; o < L.outer; ++o)
    for (std::size_t j = 0; j < L.len; ++j)
      for (std::size_t in = 0; in < L.inner; ++in)
        out[o * L.inner + in] += x[(o * L.len + j) * L.inner + in];
  for (auto& v : out) v /= T(L.len);
  return detail::make_result<T>("mean", std::move(shape), std::move(out), {x.node()},
                                [L](Node<T>& self) {
                                  auto g = self.inputs[0]->ensure_grad();
                                  const T inv = T(1) / T(L.len);
                                  for (std::size_t o = 0; o < L.outer; ++o)
                                    for (std::size_t j = 0; j < L.len; ++j)
                                      for (std::size_t in = 0; in < L.inner; ++in)
                                        g[(o * L.len + j) * L.inner + in] +=
                                            self.grad[o * L.inner + in] * inv;
                                });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = T(0);
  for (T v : x.data()) total += v;
  return detail::make_result<T>("sum", {1}, {total}, {x.node()}, [](Node<T>& self) {
    auto g = self.inputs[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  if (x.numel() == 0) throw DimensionError("mean_all: empty tensor");
  return scale(sum(x), T(1) / T(x.numel()));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return detail::make_result<T>("reshape", std::move(shape), std::move(out), {x.node()},
                                [](Node<T>& self) { accumulate<T>(*self.inputs[0], self.grad); });
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids) {
  require_rank("embedding", table.shape(), 2);
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<T> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw DimensionError("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                           std::to_string(vocab));
    }
    std::copy_n(table.data().data() + static_cast<std::size_t>(ids[i]) * d, d,
                out.data() + i * d);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return detail::make_result<T>("embedding", {ids.size(), d}, std::move(out), {table.node()},
                                [d, idx = std::move(idx)](Node<T>& self) {
                                  auto g = self.inputs[0]->ensure_grad();
                                  for (std::size_t i = 0; i < idx.size(); ++i) {
                                    T* dst = g.data() + static_cast<std::size_t>(idx[i]) * d;
                                    for (std::size_t j = 0; j < d; ++j)
                                      dst[j] += self.grad[i * d + j];
                                  }
                                });
}

template <typename T>
Tensor<T> pick(const Tensor<T>& x, std::span<const std::size_t> flat_indices) {
  std::vector<T> out(flat_indices.size());
  for (std::size_t i = 0; i < flat_indices.size(); ++i) {
    if (flat_indices[i] >= x.numel()) throw DimensionError("pick: index out of range");
    out[i] = x[flat_indices[i]];
  }
  std::vector<std::size_t> idx(flat_indices.begin(), flat_indices.end());
  return detail::make_result<T>("pick", {idx.size()}, std::move(out), {x.node()},
                                [idx](Node<T>& self) {
                                  auto g = self.inputs[0]->ensure_grad();
                                  for (std::size_t i = 0; i < idx.size(); ++i)
                                    g[idx[i]] += self.grad[i];
                                });
}

#define TABLE_INSTANTIATE_OPS(T)                                                             \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> transpose(const Tensor<T>&);                                            \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> scale(const Tensor<T>&, T);                                             \
  template Tensor<T> mul_scalar(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> exp(const Tensor<T>&);                                                  \
  template Tensor<T> gelu(const Tensor<T>&);                                                 \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                 \
  template Tensor<T> log_softmax(const Tensor<T>&, std::size_t);                             \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);    \
  template Tensor<T> l2_normalize(const Tensor<T>&);                                         \
  template Tensor<T> concat(std::span<const Tensor<T>>, std::size_t);                        \
  template Tensor<T> stack(const std::vector<Tensor<T>>&);                                   \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);         \
  template Tensor<T> row(const Tensor<T>&, std::size_t);                                     \
  template Tensor<T> mean(const Tensor<T>&, std::size_t);                                    \
  template Tensor<T> sum(const Tensor<T>&);                                                  \
  template Tensor<T> mean_all(const Tensor<T>&);                                             \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                       \
  template Tensor<T> embedding(const Tensor<T>&, std::span<const int>);                      \
  template Tensor<T> pick(const Tensor<T>&, std::span<const std::size_t>);

TABLE_INSTANTIATE_OPS(float)
TABLE_INSTANTIATE_OPS(double)

#undef TABLE_INSTANTIATE_OPS

}  // namespace table::numerics
