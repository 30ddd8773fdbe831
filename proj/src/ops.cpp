#include "csfiqa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace csfiqa {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
}

bool wants(const NodePtr& p) { return p->requires_grad; }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  NodePtr pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {a, b}, [pa, pb](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (wants(pa)) pa->grad[i] += n.grad[i];
      if (wants(pb)) pb->grad[i] += n.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  NodePtr pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {a, b}, [pa, pb](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (wants(pa)) pa->grad[i] += n.grad[i];
      if (wants(pb)) pb->grad[i] -= n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  NodePtr pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {a, b}, [pa, pb](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (wants(pa)) pa->grad[i] += n.grad[i] * pb->data[i];
      if (wants(pb)) pb->grad[i] += n.grad[i] * pa->data[i];
    }
  });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * c;
  NodePtr pa = a.node();
  return make_op(a.shape(), std::move(out), {a}, [pa, c](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i] * c;
  });
}

Tensor add_const(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + c;
  NodePtr pa = a.node();
  return make_op(a.shape(), std::move(out), {a}, [pa](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i];
  });
}

Tensor exp_t(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.at(i));
  NodePtr pa = a.node();
  std::vector<double> y = out;
  return make_op(a.shape(), std::move(out), {a}, [pa, y](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i] * y[i];
  });
}

Tensor log_t(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(a.at(i));
  NodePtr pa = a.node();
  return make_op(a.shape(), std::move(out), {a}, [pa](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i] / pa->data[i];
  });
}

Tensor sqrt_t(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(a.at(i));
  NodePtr pa = a.node();
  std::vector<double> y = out;
  return make_op(a.shape(), std::move(out), {a}, [pa, y](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      pa->grad[i] += n.grad[i] * 0.5 / y[i];
  });
}

Tensor reciprocal(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / a.at(i);
  NodePtr pa = a.node();
  std::vector<double> y = out;
  return make_op(a.shape(), std::move(out), {a}, [pa, y](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      pa->grad[i] -= n.grad[i] * y[i] * y[i];
  });
}

Tensor clamp_min(const Tensor& a, double lo) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(a.at(i), lo);
  NodePtr pa = a.node();
  return make_op(a.shape(), std::move(out), {a}, [pa, lo](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (pa->data[i] > lo) pa->grad[i] += n.grad[i];
  });
}

Tensor gelu(const Tensor& a) {
  // Exact erf form: 0.5 x (1 + erf(x / sqrt 2)).
  static const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.at(i);
    out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  NodePtr pa = a.node();
  return make_op(a.shape(), std::move(out), {a}, [pa](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double x = pa->data[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      pa->grad[i] += n.grad[i] * (cdf + x * pdf);
    }
  });
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (n != a.numel())
    throw ShapeError("reshape: " + shape_str(a.shape()) + " to " + shape_str(shape));
  NodePtr pa = a.node();
  return make_op(std::move(shape), a.data(), {a}, [pa](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i];
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.data()[i * c + j];
  NodePtr pa = a.node();
  return make_op({c, r}, std::move(out), {a}, [pa, r, c](TensorNode& n) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) pa->grad[i * c + j] += n.grad[j * r + i];
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  std::vector<double> out;
  for (const Tensor& p : parts) {
    if (p.cols() != c)
      throw ShapeError("concat_rows: column mismatch " + shape_str(p.shape()));
    r += p.rows();
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  std::vector<NodePtr> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node());
  return make_op({r, c}, std::move(out), parts, [nodes](TensorNode& n) {
    std::size_t off = 0;
    for (const NodePtr& p : nodes) {
      if (wants(p))
        for (std::size_t i = 0; i < p->data.size(); ++i) p->grad[i] += n.grad[off + i];
      off += p->data.size();
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  std::vector<std::size_t> widths;
  for (const Tensor& p : parts) {
    if (p.rows() != r)
      throw ShapeError("concat_cols: row mismatch " + shape_str(p.shape()));
    widths.push_back(p.cols());
    c += p.cols();
  }
  std::vector<double> out(r * c);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& d = parts[k].data();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j)
        out[i * c + off + j] = d[i * widths[k] + j];
    off += widths[k];
  }
  std::vector<NodePtr> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node());
  return make_op({r, c}, std::move(out), parts, [nodes, widths, r, c](TensorNode& n) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (wants(nodes[k]))
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j)
            nodes[k]->grad[i * widths[k] + j] += n.grad[i * c + off + j];
      off += widths[k];
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
  const std::size_t r = a.rows(), c = a.cols();
  if (r0 >= r1 || r1 > r)
    throw ShapeError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                     ") of " + shape_str(a.shape()));
  std::vector<double> out(a.data().begin() + r0 * c, a.data().begin() + r1 * c);
  NodePtr pa = a.node();
  return make_op({r1 - r0, c}, std::move(out), {a}, [pa, r0, c](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[r0 * c + i] += n.grad[i];
  });
}

Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
  const std::size_t r = a.rows(), c = a.cols();
  if (c0 >= c1 || c1 > c)
    throw ShapeError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") of " + shape_str(a.shape()));
  const std::size_t w = c1 - c0;
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a.data()[i * c + c0 + j];
  NodePtr pa = a.node();
  return make_op({r, w}, std::move(out), {a}, [pa, r, c, c0, w](TensorNode& n) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) pa->grad[i * c + c0 + j] += n.grad[i * w + j];
  });
}

Tensor row(const Tensor& a, std::size_t r) {
  return reshape(slice_rows(a, r, r + 1), {a.cols()});
}

Tensor element(const Tensor& a, std::size_t i) {
  if (i >= a.numel()) throw ShapeError("element: index out of range");
  NodePtr pa = a.node();
  return make_op({1}, {a.at(i)}, {a},
                 [pa, i](TensorNode& n) { pa->grad[i] += n.grad[0]; });
}

Tensor mean_rows(const Tensor& a, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ShapeError("mean_rows: empty index set");
  const std::size_t c = a.cols();
  std::vector<double> out(c, 0.0);
  for (std::size_t r : indices)
    for (std::size_t j = 0; j < c; ++j) out[j] += a.at(r, j);
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (double& v : out) v *= inv;
  NodePtr pa = a.node();
  auto idx = indices;
  return make_op({c}, std::move(out), {a}, [pa, idx, c, inv](TensorNode& n) {
    for (std::size_t r : idx)
      for (std::size_t j = 0; j < c; ++j) pa->grad[r * c + j] += n.grad[j] * inv;
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows())
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  const std::size_t m = a.rows(), k = a.cols(), n2 = b.cols();
  std::vector<double> out(m * n2, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a.data()[i * k + p];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n2; ++j) out[i * n2 + j] += av * b.data()[p * n2 + j];
    }
  NodePtr pa = a.node(), pb = b.node();
  return make_op({m, n2}, std::move(out), {a, b}, [pa, pb, m, k, n2](TensorNode& n) {
    // da = g b^T, db = a^T g
    if (wants(pa))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n2; ++j)
            acc += n.grad[i * n2 + j] * pb->data[p * n2 + j];
          pa->grad[i * k + p] += acc;
        }
    if (wants(pb))
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n2; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i)
            acc += pa->data[i * k + p] * n.grad[i * n2 + j];
          pb->grad[p * n2 + j] += acc;
        }
  });
}

Tensor dot(const Tensor& u, const Tensor& v) {
  check_same_shape(u, v, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < u.numel(); ++i) s += u.at(i) * v.at(i);
  NodePtr pu = u.node(), pv = v.node();
  return make_op({1}, {s}, {u, v}, [pu, pv](TensorNode& n) {
    const double g = n.grad[0];
    for (std::size_t i = 0; i < pu->data.size(); ++i) {
      if (wants(pu)) pu->grad[i] += g * pv->data[i];
      if (wants(pv)) pv->grad[i] += g * pu->data[i];
    }
  });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  const std::size_t r = m.rows(), c = m.cols();
  if (v.numel() != c)
    throw ShapeError("add_rowvec: matrix " + shape_str(m.shape()) + " vs vector " +
                     shape_str(v.shape()));
  std::vector<double> out(m.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = m.data()[i * c + j] + v.at(j);
  NodePtr pm = m.node(), pv = v.node();
  return make_op(m.shape(), std::move(out), {m, v}, [pm, pv, r, c](TensorNode& n) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        if (wants(pm)) pm->grad[i * c + j] += n.grad[i * c + j];
        if (wants(pv)) pv->grad[j] += n.grad[i * c + j];
      }
  });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.numel() != 1) throw ShapeError("scale_by: scale must be a scalar");
  const double sv = s.item();
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * sv;
  NodePtr pa = a.node(), ps = s.node();
  return make_op(a.shape(), std::move(out), {a, s}, [pa, ps, sv](TensorNode& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (wants(pa)) pa->grad[i] += n.grad[i] * sv;
      if (wants(ps)) ps->grad[0] += n.grad[i] * pa->data[i];
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  NodePtr pa = a.node();
  return make_op({1}, {s}, {a}, [pa](TensorNode& n) {
    for (double& g : pa->grad) g += n.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

namespace {

// Softmax over rows of an r x c matrix viewed flat.
Tensor softmax_rows_impl(const Tensor& a, std::size_t r, std::size_t c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = a.data().data() + i * c;
    double m = x[0];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out[i * c + j] = std::exp(x[j] - m);
      z += out[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  NodePtr pa = a.node();
  std::vector<double> y = out;
  return make_op(a.shape(), std::move(out), {a}, [pa, y, r, c](TensorNode& n) {
    for (std::size_t i = 0; i < r; ++i) {
      double gy = 0.0;
      for (std::size_t j = 0; j < c; ++j) gy += n.grad[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        pa->grad[i * c + j] += y[i * c + j] * (n.grad[i * c + j] - gy);
    }
  });
}

Tensor masked_softmax_rows_impl(const Tensor& a, const std::vector<std::uint8_t>& keep,
                                std::size_t r, std::size_t c) {
  std::vector<double> out(a.numel(), 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < c; ++j)
      if (keep[i * c + j]) {
        any = true;
        m = std::max(m, a.at(i * c + j));
      }
    if (!any)
      throw InvalidMaskError("masked_softmax: slice " + std::to_string(i) +
                             " has no kept entry");
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      if (keep[i * c + j]) {
        out[i * c + j] = std::exp(a.at(i * c + j) - m);
        z += out[i * c + j];
      }
    for (std::size_t j = 0; j < c; ++j)
      if (keep[i * c + j]) out[i * c + j] /= z;
  }
  NodePtr pa = a.node();
  std::vector<double> y = out;
  auto mask = keep;
  return make_op(a.shape(), std::move(out), {a}, [pa, y, mask, r, c](TensorNode& n) {
    for (std::size_t i = 0; i < r; ++i) {
      double gy = 0.0;
      for (std::size_t j = 0; j < c; ++j)
        if (mask[i * c + j]) gy += n.grad[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        if (mask[i * c + j])
          pa->grad[i * c + j] += y[i * c + j] * (n.grad[i * c + j] - gy);
    }
  });
}

}  // namespace

Tensor softmax(const Tensor& a, int axis) {
  if (a.ndim() == 1) return softmax_rows_impl(a, 1, a.numel());
  if (a.ndim() != 2) throw ShapeError("softmax: tensor is " + shape_str(a.shape()));
  if (axis == -1 || axis == 1) return softmax_rows_impl(a, a.rows(), a.cols());
  if (axis == 0) return transpose(softmax(transpose(a), -1));
  throw ShapeError("softmax: bad axis");
}

Tensor masked_softmax(const Tensor& a, const std::vector<std::uint8_t>& keep, int axis) {
  if (keep.size() != a.numel()) throw ShapeError("masked_softmax: mask size mismatch");
  if (a.ndim() == 1) return masked_softmax_rows_impl(a, keep, 1, a.numel());
  if (a.ndim() != 2)
    throw ShapeError("masked_softmax: tensor is " + shape_str(a.shape()));
  if (axis == -1 || axis == 1) return masked_softmax_rows_impl(a, keep, a.rows(), a.cols());
  if (axis == 0) {
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<std::uint8_t> kt(keep.size());
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) kt[j * r + i] = keep[i * c + j];
    return transpose(masked_softmax(transpose(a), kt, -1));
  }
  throw ShapeError("masked_softmax: bad axis");
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t r = x.rows(), c = x.cols();
  if (gamma.numel() != c || beta.numel() != c)
    throw ShapeError("layernorm: gain/bias size mismatch");
  std::vector<double> out(x.numel()), xhat(x.numel()), inv_sigma(r);
  for (std::size_t i = 0; i < r; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += x.at(i * c + j);
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = x.at(i * c + j) - mu;
      var += d * d;
    }
    var /= static_cast<double>(c);
    inv_sigma[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (x.at(i * c + j) - mu) * inv_sigma[i];
      out[i * c + j] = xhat[i * c + j] * gamma.at(j) + beta.at(j);
    }
  }
  NodePtr px = x.node(), pg = gamma.node(), pb = beta.node();
  return make_op(x.shape(), std::move(out), {x, gamma, beta},
                 [px, pg, pb, xhat, inv_sigma, r, c](TensorNode& n) {
                   for (std::size_t i = 0; i < r; ++i) {
                     double m1 = 0.0, m2 = 0.0;
                     for (std::size_t j = 0; j < c; ++j) {
                       const double dxh = n.grad[i * c + j] * pg->data[j];
                       m1 += dxh;
                       m2 += dxh * xhat[i * c + j];
                     }
                     m1 /= static_cast<double>(c);
                     m2 /= static_cast<double>(c);
                     for (std::size_t j = 0; j < c; ++j) {
                       const double g = n.grad[i * c + j];
                       if (wants(pg)) pg->grad[j] += g * xhat[i * c + j];
                       if (wants(pb)) pb->grad[j] += g;
                       if (wants(px)) {
                         const double dxh = g * pg->data[j];
                         px->grad[i * c + j] +=
                             inv_sigma[i] * (dxh - m1 - xhat[i * c + j] * m2);
                       }
                     }
                   }
                 });
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "l1_loss");
  const std::size_t n = pred.numel();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(pred.at(i) - target.at(i));
  s /= static_cast<double>(n);
  NodePtr pp = pred.node(), pt = target.node();
  return make_op({1}, {s}, {pred, target}, [pp, pt, n](TensorNode& nd) {
    const double g = nd.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = pp->data[i] - pt->data[i];
      const double sg = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      if (wants(pp)) pp->grad[i] += g * sg;
      if (wants(pt)) pt->grad[i] -= g * sg;
    }
  });
}

Tensor l2_normalize(const Tensor& v, double eps) {
  // Clamp (rather than add to) the norm so that normalization is exact for
  // any vector with ||v|| >= eps while staying differentiable near zero.
  Tensor norm = sqrt_t(dot(v, v));
  Tensor inv = reciprocal(clamp_min(norm, eps));
  return scale_by(v, inv);
}

Tensor cosine_sim_eps(const Tensor& u, const Tensor& v, double eps) {
  check_same_shape(u, v, "cosine_sim");
  Tensor nu = sqrt_t(dot(u, u));
  Tensor nv = sqrt_t(dot(v, v));
  if (eps == 0.0) return mul(dot(u, v), reciprocal(mul(nu, nv)));
  return mul(dot(u, v), reciprocal(clamp_min(mul(nu, nv), eps * eps)));
}

Tensor cosine_sim(const Tensor& u, const Tensor& v) {
  check_same_shape(u, v, "cosine_sim");
  double nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.numel(); ++i) {
    nu += u.at(i) * u.at(i);
    nv += v.at(i) * v.at(i);
  }
  if (nu == 0.0 || nv == 0.0) throw NumericError("cosine_sim: zero-norm input");
  return cosine_sim_eps(u, v, 0.0);
}

bool all_finite(const Tensor& a) {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace csfiqa
