#include "predrisk/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace predrisk::ad {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ')';
  return os.str();
}

std::int64_t numel_of(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

void Node::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

namespace {

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> data) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  return n;
}

// Result node of an op: requires grad iff any parent does.
Tensor make_op(Shape shape, std::vector<double> data,
               std::vector<std::shared_ptr<Node>> parents,
               std::function<void(Node&)> backward_fn) {
  auto n = make_node(std::move(shape), std::move(data));
  for (const auto& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor(n);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + " shape mismatch: " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

// Elementwise unary op with dy/dx expressed from input x and output y.
Tensor unary_op(const Tensor& a, const std::function<double(double)>& f,
                const std::function<double(double, double)>& dfdx) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i]);
  auto ap = a.node();
  auto outp = out;  // copy captured for the backward rule
  return make_op(a.shape(), std::move(out), {ap},
                 [ap, dfdx, y = std::move(outp)](Node& self) {
                   if (!ap->requires_grad) return;
                   ap->ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     ap->grad[i] += self.grad[i] * dfdx(ap->data[i], y[i]);
                 });
}

}  // namespace

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  auto n = make_node(shape, std::vector<double>(static_cast<std::size_t>(numel_of(shape)), 0.0));
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
  auto n = make_node(shape, std::vector<double>(static_cast<std::size_t>(numel_of(shape)), value));
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::from_vector(const Shape& shape, std::vector<double> values,
                           bool requires_grad) {
  if (static_cast<std::int64_t>(values.size()) != numel_of(shape))
    throw ShapeError("data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  auto n = make_node(shape, std::move(values));
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_vector({1}, {value}, requires_grad);
}

std::vector<double>& Tensor::grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->data.size(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) throw NotScalar("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

// ---- matmul ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2)
    throw ShapeError("matmul left operand must be rank 2, got " + shape_str(a.shape()));
  int m = a.shape()[0], k = a.shape()[1];
  if (b.shape().size() == 1) {
    if (b.shape()[0] != k)
      throw ShapeError("matmul shape mismatch: " + shape_str(a.shape()) + " x " +
                       shape_str(b.shape()));
    return reshape(matmul(a, reshape(b, {k, 1})), {m});
  }
  if (b.shape().size() != 2 || b.shape()[0] != k)
    throw ShapeError("matmul shape mismatch: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  int n = b.shape()[1];

  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  const auto& ad = a.data();
  const auto& bd = b.data();
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      double av = ad[static_cast<std::size_t>(i) * k + p];
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j)
        out[static_cast<std::size_t>(i) * n + j] += av * bd[static_cast<std::size_t>(p) * n + j];
    }

  auto ap = a.node(), bp = b.node();
  return make_op({m, n}, std::move(out), {ap, bp}, [ap, bp, m, k, n](Node& self) {
    if (ap->requires_grad) {
      ap->ensure_grad();
      // dA = dC * B^T
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double g = self.grad[static_cast<std::size_t>(i) * n + j];
          if (g == 0.0) continue;
          for (int p = 0; p < k; ++p)
            ap->grad[static_cast<std::size_t>(i) * k + p] +=
                g * bp->data[static_cast<std::size_t>(p) * n + j];
        }
    }
    if (bp->requires_grad) {
      bp->ensure_grad();
      // dB = A^T * dC
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double av = ap->data[static_cast<std::size_t>(i) * k + p];
          if (av == 0.0) continue;
          for (int j = 0; j < n; ++j)
            bp->grad[static_cast<std::size_t>(p) * n + j] +=
                av * self.grad[static_cast<std::size_t>(i) * n + j];
        }
    }
  });
}

// ---- elementwise binary ----------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto ap = a.node(), bp = b.node();
  return make_op(a.shape(), std::move(out), {ap, bp}, [ap, bp](Node& self) {
    if (ap->requires_grad) {
      ap->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ap->grad[i] += self.grad[i];
    }
    if (bp->requires_grad) {
      bp->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bp->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  auto ap = a.node(), bp = b.node();
  return make_op(a.shape(), std::move(out), {ap, bp}, [ap, bp](Node& self) {
    if (ap->requires_grad) {
      ap->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ap->grad[i] += self.grad[i];
    }
    if (bp->requires_grad) {
      bp->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bp->grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto ap = a.node(), bp = b.node();
  return make_op(a.shape(), std::move(out), {ap, bp}, [ap, bp](Node& self) {
    if (ap->requires_grad) {
      ap->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        ap->grad[i] += self.grad[i] * bp->data[i];
    }
    if (bp->requires_grad) {
      bp->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        bp->grad[i] += self.grad[i] * ap->data[i];
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] / b.data()[i];
  auto ap = a.node(), bp = b.node();
  return make_op(a.shape(), std::move(out), {ap, bp}, [ap, bp](Node& self) {
    if (ap->requires_grad) {
      ap->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        ap->grad[i] += self.grad[i] / bp->data[i];
    }
    if (bp->requires_grad) {
      bp->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        bp->grad[i] -= self.grad[i] * ap->data[i] / (bp->data[i] * bp->data[i]);
    }
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary_op(a, [s](double x) { return x + s; },
                  [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary_op(a, [s](double x) { return x * s; },
                  [s](double, double) { return s; });
}

// ---- shape ops -------------------------------------------------------------

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& base = parts.front().shape();
  int rank = static_cast<int>(base.size());
  if (axis < 0 || axis >= rank) throw ShapeError("concat axis out of range");
  Shape out_shape = base;
  out_shape[static_cast<std::size_t>(axis)] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (static_cast<int>(s.size()) != rank)
      throw ShapeError("concat rank mismatch: " + shape_str(base) + " vs " + shape_str(s));
    for (int d = 0; d < rank; ++d)
      if (d != axis && s[static_cast<std::size_t>(d)] != base[static_cast<std::size_t>(d)])
        throw ShapeError("concat shape mismatch: " + shape_str(base) + " vs " + shape_str(s));
    out_shape[static_cast<std::size_t>(axis)] += s[static_cast<std::size_t>(axis)];
  }

  // outer = product of dims before axis; inner = product after.
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= base[static_cast<std::size_t>(d)];
  for (int d = axis + 1; d < rank; ++d) inner *= base[static_cast<std::size_t>(d)];

  std::vector<double> out(static_cast<std::size_t>(numel_of(out_shape)));
  std::int64_t out_axis = out_shape[static_cast<std::size_t>(axis)];
  std::int64_t offset = 0;
  std::vector<std::int64_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    std::int64_t len = p.shape()[static_cast<std::size_t>(axis)];
    for (std::int64_t o = 0; o < outer; ++o)
      for (std::int64_t j = 0; j < len; ++j)
        std::copy_n(p.data().begin() + (o * len + j) * inner, inner,
                    out.begin() + (o * out_axis + offset + j) * inner);
    offset += len;
  }

  std::vector<std::shared_ptr<Node>> parent_nodes;
  for (const auto& p : parts) parent_nodes.push_back(p.node());
  return make_op(out_shape, std::move(out), parent_nodes,
                 [parent_nodes, offsets, outer, inner, out_axis, axis](Node& self) {
                   for (std::size_t pi = 0; pi < parent_nodes.size(); ++pi) {
                     auto& p = parent_nodes[pi];
                     if (!p->requires_grad) continue;
                     p->ensure_grad();
                     std::int64_t len = p->shape[static_cast<std::size_t>(axis)];
                     for (std::int64_t o = 0; o < outer; ++o)
                       for (std::int64_t j = 0; j < len; ++j) {
                         auto src = (o * out_axis + offsets[pi] + j) * inner;
                         auto dst = (o * len + j) * inner;
                         for (std::int64_t i = 0; i < inner; ++i)
                           p->grad[static_cast<std::size_t>(dst + i)] +=
                               self.grad[static_cast<std::size_t>(src + i)];
                       }
                   }
                 });
}

namespace {

// Row-major strides for a shape.
std::vector<std::int64_t> strides_of(const Shape& s) {
  std::vector<std::int64_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;)
    st[i - 1] = st[i] * s[i];
  return st;
}

}  // namespace

Tensor slice(const Tensor& a, const Shape& offsets, const Shape& sizes) {
  const Shape& s = a.shape();
  if (offsets.size() != s.size() || sizes.size() != s.size())
    throw ShapeError("slice rank mismatch for shape " + shape_str(s));
  for (std::size_t d = 0; d < s.size(); ++d) {
    if (offsets[d] < 0 || sizes[d] <= 0 || offsets[d] + sizes[d] > s[d])
      throw ShapeError("slice out of bounds: offsets " + shape_str(offsets) +
                       " sizes " + shape_str(sizes) + " in " + shape_str(s));
  }
  auto src_strides = strides_of(s);
  auto n_out = numel_of(sizes);
  std::vector<double> out(static_cast<std::size_t>(n_out));
  std::vector<std::int64_t> src_index(static_cast<std::size_t>(n_out));
  Shape idx(s.size(), 0);
  for (std::int64_t flat = 0; flat < n_out; ++flat) {
    std::int64_t src = 0;
    for (std::size_t d = 0; d < s.size(); ++d)
      src += (offsets[d] + idx[d]) * src_strides[d];
    out[static_cast<std::size_t>(flat)] = a.data()[static_cast<std::size_t>(src)];
    src_index[static_cast<std::size_t>(flat)] = src;
    for (std::size_t d = s.size(); d-- > 0;) {
      if (++idx[d] < sizes[d]) break;
      idx[d] = 0;
    }
  }
  auto ap = a.node();
  return make_op(sizes, std::move(out), {ap}, [ap, src_index](Node& self) {
    if (!ap->requires_grad) return;
    ap->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      ap->grad[static_cast<std::size_t>(src_index[i])] += self.grad[i];
  });
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (numel_of(shape) != a.numel())
    throw ShapeError("reshape from " + shape_str(a.shape()) + " to " + shape_str(shape) +
                     " changes element count");
  auto ap = a.node();
  return make_op(shape, a.data(), {ap}, [ap](Node& self) {
    if (!ap->requires_grad) return;
    ap->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ap->grad[i] += self.grad[i];
  });
}

// ---- elementwise nonlinearities ---------------------------------------------

Tensor leaky_relu(const Tensor& a, double negative_slope) {
  return unary_op(a,
                  [negative_slope](double x) { return x > 0.0 ? x : negative_slope * x; },
                  [negative_slope](double x, double) { return x > 0.0 ? 1.0 : negative_slope; });
}

Tensor tanh(const Tensor& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double x : a.data())
    if (!(x > 0.0)) throw NumericalError("log of non-positive value");
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  for (double x : a.data())
    if (x < 0.0) throw NumericalError("sqrt of negative value");
  return unary_op(a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidValue("clamp bounds out of order");
  return unary_op(a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                  [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& a) {
  if (a.shape().size() != 1)
    throw ShapeError("softmax expects rank 1, got " + shape_str(a.shape()));
  double mx = *std::max_element(a.data().begin(), a.data().end());
  std::vector<double> out(a.data().size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(a.data()[i] - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  auto ap = a.node();
  auto y = out;
  return make_op(a.shape(), std::move(out), {ap}, [ap, y](Node& self) {
    if (!ap->requires_grad) return;
    ap->ensure_grad();
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += self.grad[i] * y[i];
    for (std::size_t i = 0; i < y.size(); ++i)
      ap->grad[i] += y[i] * (self.grad[i] - dot);
  });
}

// ---- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = std::accumulate(a.data().begin(), a.data().end(), 0.0);
  auto ap = a.node();
  return make_op({1}, {s}, {ap}, [ap](Node& self) {
    if (!ap->requires_grad) return;
    ap->ensure_grad();
    for (auto& g : ap->grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  double n = static_cast<double>(a.numel());
  double s = std::accumulate(a.data().begin(), a.data().end(), 0.0) / n;
  auto ap = a.node();
  return make_op({1}, {s}, {ap}, [ap, n](Node& self) {
    if (!ap->requires_grad) return;
    ap->ensure_grad();
    for (auto& g : ap->grad) g += self.grad[0] / n;
  });
}

Tensor stack_grid(const std::vector<Tensor>& cells, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw ShapeError("stack_grid needs positive grid dims");
  if (static_cast<int>(cells.size()) != rows * cols)
    throw ShapeError("stack_grid expects " + std::to_string(rows * cols) +
                     " cells, got " + std::to_string(cells.size()));
  int len = -1;
  for (const auto& c : cells) {
    if (!c.defined()) continue;
    if (c.shape().size() != 1)
      throw ShapeError("stack_grid cells must be rank 1, got " + shape_str(c.shape()));
    if (len < 0) len = c.shape()[0];
    if (c.shape()[0] != len)
      throw ShapeError("stack_grid cell length mismatch: " + std::to_string(len) +
                       " vs " + std::to_string(c.shape()[0]));
  }
  if (len < 0) throw ShapeError("stack_grid needs at least one defined cell");

  std::vector<double> out(static_cast<std::size_t>(len) * rows * cols, 0.0);
  std::vector<std::shared_ptr<Node>> parents;
  std::vector<int> parent_cell;  // flat cell index per parent
  for (int cell = 0; cell < rows * cols; ++cell) {
    const auto& src = cells[static_cast<std::size_t>(cell)];
    if (!src.defined()) continue;
    for (int ch = 0; ch < len; ++ch)
      out[static_cast<std::size_t>(ch) * rows * cols + cell] = src.data()[static_cast<std::size_t>(ch)];
    parents.push_back(src.node());
    parent_cell.push_back(cell);
  }
  auto cell_count = rows * cols;
  return make_op({len, rows, cols}, std::move(out), parents,
                 [parents, parent_cell, len, cell_count](Node& self) {
                   for (std::size_t pi = 0; pi < parents.size(); ++pi) {
                     auto& p = parents[pi];
                     if (!p->requires_grad) continue;
                     p->ensure_grad();
                     for (int ch = 0; ch < len; ++ch)
                       p->grad[static_cast<std::size_t>(ch)] +=
                           self.grad[static_cast<std::size_t>(ch) * cell_count + parent_cell[pi]];
                   }
                 });
}

// ---- spatial ops -------------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int stride_h, int stride_w) {
  if (input.shape().size() != 3)
    throw ShapeError("conv2d input must be (C,H,W), got " + shape_str(input.shape()));
  if (kernel.shape().size() != 4)
    throw ShapeError("conv2d kernel must be (F,C,kh,kw), got " + shape_str(kernel.shape()));
  int c = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
  int f = kernel.shape()[0], kc = kernel.shape()[1];
  int kh = kernel.shape()[2], kw = kernel.shape()[3];
  if (kc != c)
    throw ShapeError("conv2d channel mismatch: input " + shape_str(input.shape()) +
                     " kernel " + shape_str(kernel.shape()));
  if (bias.shape() != Shape{f})
    throw ShapeError("conv2d bias must be (" + std::to_string(f) + "), got " +
                     shape_str(bias.shape()));
  if (stride_h <= 0 || stride_w <= 0) throw InvalidValue("conv2d stride must be positive");
  if (h < kh || w < kw)
    throw ShapeError("conv2d kernel " + shape_str(kernel.shape()) +
                     " larger than input " + shape_str(input.shape()));
  int oh = (h - kh) / stride_h + 1;
  int ow = (w - kw) / stride_w + 1;

  const auto& in = input.data();
  const auto& kn = kernel.data();
  const auto& bs = bias.data();
  auto in_at = [&](int ci, int y, int x) {
    return in[(static_cast<std::size_t>(ci) * h + y) * w + x];
  };
  auto k_at = [&](int fi, int ci, int i, int j) {
    return kn[((static_cast<std::size_t>(fi) * c + ci) * kh + i) * kw + j];
  };

  std::vector<double> out(static_cast<std::size_t>(f) * oh * ow, 0.0);
  for (int fi = 0; fi < f; ++fi)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double acc = bs[static_cast<std::size_t>(fi)];
        for (int ci = 0; ci < c; ++ci)
          for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j)
              acc += k_at(fi, ci, i, j) * in_at(ci, y * stride_h + i, x * stride_w + j);
        out[(static_cast<std::size_t>(fi) * oh + y) * ow + x] = acc;
      }

  auto ip = input.node(), kp = kernel.node(), bp = bias.node();
  return make_op({f, oh, ow}, std::move(out), {ip, kp, bp},
                 [ip, kp, bp, c, h, w, f, kh, kw, oh, ow, stride_h, stride_w](Node& self) {
                   auto g_at = [&](int fi, int y, int x) {
                     return self.grad[(static_cast<std::size_t>(fi) * oh + y) * ow + x];
                   };
                   if (bp->requires_grad) {
                     bp->ensure_grad();
                     for (int fi = 0; fi < f; ++fi) {
                       double acc = 0.0;
                       for (int y = 0; y < oh; ++y)
                         for (int x = 0; x < ow; ++x) acc += g_at(fi, y, x);
                       bp->grad[static_cast<std::size_t>(fi)] += acc;
                     }
                   }
                   if (kp->requires_grad) {
                     kp->ensure_grad();
                     for (int fi = 0; fi < f; ++fi)
                       for (int ci = 0; ci < c; ++ci)
                         for (int i = 0; i < kh; ++i)
                           for (int j = 0; j < kw; ++j) {
                             double acc = 0.0;
                             for (int y = 0; y < oh; ++y)
                               for (int x = 0; x < ow; ++x)
                                 acc += g_at(fi, y, x) *
                                        ip->data[(static_cast<std::size_t>(ci) * h +
                                                  y * stride_h + i) * w + x * stride_w + j];
                             kp->grad[((static_cast<std::size_t>(fi) * c + ci) * kh + i) * kw + j] += acc;
                           }
                   }
                   if (ip->requires_grad) {
                     ip->ensure_grad();
                     for (int fi = 0; fi < f; ++fi)
                       for (int y = 0; y < oh; ++y)
                         for (int x = 0; x < ow; ++x) {
                           double g = g_at(fi, y, x);
                           if (g == 0.0) continue;
                           for (int ci = 0; ci < c; ++ci)
                             for (int i = 0; i < kh; ++i)
                               for (int j = 0; j < kw; ++j)
                                 ip->grad[(static_cast<std::size_t>(ci) * h + y * stride_h + i) * w +
                                          x * stride_w + j] +=
                                     g * kp->data[((static_cast<std::size_t>(fi) * c + ci) * kh + i) *
                                                  kw + j];
                         }
                   }
                 });
}

Tensor maxpool2d(const Tensor& input, int kernel_h, int kernel_w,
                 int stride_h, int stride_w) {
  if (input.shape().size() != 3)
    throw ShapeError("maxpool2d input must be (C,H,W), got " + shape_str(input.shape()));
  if (kernel_h <= 0 || kernel_w <= 0 || stride_h <= 0 || stride_w <= 0)
    throw InvalidValue("maxpool2d kernel and stride must be positive");
  int c = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
  if (h < kernel_h || w < kernel_w)
    throw ShapeError("maxpool2d kernel larger than input " + shape_str(input.shape()));
  int oh = (h - kernel_h) / stride_h + 1;
  int ow = (w - kernel_w) / stride_w + 1;

  const auto& in = input.data();
  std::vector<double> out(static_cast<std::size_t>(c) * oh * ow);
  std::vector<std::int64_t> argmax(out.size());
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        std::int64_t best_idx = -1;
        double best = 0.0;
        for (int i = 0; i < kernel_h; ++i)
          for (int j = 0; j < kernel_w; ++j) {
            std::int64_t idx = (static_cast<std::int64_t>(ci) * h + y * stride_h + i) * w +
                               x * stride_w + j;
            double v = in[static_cast<std::size_t>(idx)];
            if (best_idx < 0 || v > best) {
              best = v;
              best_idx = idx;
            }
          }
        std::size_t o = (static_cast<std::size_t>(ci) * oh + y) * ow + x;
        out[o] = best;
        argmax[o] = best_idx;
      }

  auto ip = input.node();
  return make_op({c, oh, ow}, std::move(out), {ip}, [ip, argmax](Node& self) {
    if (!ip->requires_grad) return;
    ip->ensure_grad();
    for (std::size_t o = 0; o < self.grad.size(); ++o)
      ip->grad[static_cast<std::size_t>(argmax[o])] += self.grad[o];
  });
}

// ---- lstm --------------------------------------------------------------------

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                                    const Tensor& w_ih, const Tensor& w_hh,
                                    const Tensor& bias) {
  if (h.shape().size() != 1 || c.shape().size() != 1 || x.shape().size() != 1)
    throw ShapeError("lstm_cell expects rank-1 x, h, c");
  int hidden = h.shape()[0];
  if (w_ih.shape() != Shape{4 * hidden, x.shape()[0]})
    throw ShapeError("lstm_cell w_ih shape " + shape_str(w_ih.shape()) +
                     " does not match input " + shape_str(x.shape()));
  if (w_hh.shape() != Shape{4 * hidden, hidden})
    throw ShapeError("lstm_cell w_hh shape " + shape_str(w_hh.shape()) +
                     " does not match hidden " + shape_str(h.shape()));
  if (bias.shape() != Shape{4 * hidden})
    throw ShapeError("lstm_cell bias shape " + shape_str(bias.shape()) +
                     " does not match hidden " + shape_str(h.shape()));

  Tensor gates = add(add(matmul(w_ih, x), matmul(w_hh, h)), bias);
  Tensor i = sigmoid(slice(gates, {0 * hidden}, {hidden}));
  Tensor f = sigmoid(slice(gates, {1 * hidden}, {hidden}));
  Tensor g = tanh(slice(gates, {2 * hidden}, {hidden}));
  Tensor o = sigmoid(slice(gates, {3 * hidden}, {hidden}));
  Tensor c_next = add(mul(f, c), mul(i, g));
  Tensor h_next = mul(o, tanh(c_next));
  return {h_next, c_next};
}

// ---- backward ------------------------------------------------------------------

void backward(const Tensor& loss) {
  if (loss.numel() != 1)
    throw NotScalar("backward requires a scalar loss, got shape " + shape_str(loss.shape()));

  // Reverse topological order via iterative post-order DFS.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* child = node->parents[next_child].get();
      ++next_child;
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads are per-pass scratch; only leaves accumulate across
  // calls. Clearing them here keeps a second backward over the same graph
  // from re-propagating what the first one already delivered.
  for (Node* n : order)
    if (n->backward_fn) n->grad.assign(n->data.size(), 0.0);

  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

void zero_grads(const std::vector<Tensor>& params) {
  for (const auto& p : params) p.node()->grad.assign(p.node()->data.size(), 0.0);
}

// ---- adam ----------------------------------------------------------------------

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].data().size(), 0.0);
      state.v[i].assign(params[i].data().size(), 0.0);
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam state buffer count does not match parameter count");

  state.step_count += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].data();
    auto& g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.size() || v.size() != p.size())
      throw ShapeError("adam moment shape does not match parameter " + std::to_string(i));
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

// ---- gradient checking -----------------------------------------------------------

double grad_check(const std::function<Tensor()>& fn, const std::vector<Tensor>& params,
                  double eps, std::size_t min_coords, std::uint64_t seed, double atol) {
  zero_grads(params);
  Tensor loss = fn();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.node()->grad);

  // Enumerate all coordinates, then subsample without replacement.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i].data().size(); ++j) coords.emplace_back(i, j);
  std::mt19937_64 rng(seed);
  if (coords.size() > min_coords) {
    for (std::size_t i = 0; i + 1 < coords.size(); ++i) {
      auto j = i + static_cast<std::size_t>(rng() % (coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(min_coords);
  }

  double worst = 0.0;
  for (auto [pi, j] : coords) {
    auto& value = params[pi].node()->data[j];
    double saved = value;
    value = saved + eps;
    double f_plus = fn().item();
    value = saved - eps;
    double f_minus = fn().item();
    value = saved;
    double numeric = (f_plus - f_minus) / (2.0 * eps);
    double a = analytic[pi].empty() ? 0.0 : analytic[pi][j];
    if (std::abs(a) < atol && std::abs(numeric) < atol) continue;
    double rel = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
    worst = std::max(worst, rel);
  }
  return worst;
}

Tensor xavier_uniform(const Shape& shape, int fan_in, int fan_out, std::mt19937_64& rng) {
  if (fan_in <= 0 || fan_out <= 0) throw InvalidValue("xavier fans must be positive");
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(static_cast<std::size_t>(numel_of(shape)));
  for (auto& v : values) v = dist(rng);
  return Tensor::from_vector(shape, std::move(values), true);
}

}  // namespace predrisk::ad
