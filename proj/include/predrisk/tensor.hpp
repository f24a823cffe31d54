#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "predrisk/errors.hpp"

// Minimal reverse-mode automatic differentiation over dense row-major
// double arrays. Operations record a backward rule on a tape held by the
// output node; backward(loss) walks the graph in reverse topological order
// and accumulates into grad buffers. Repeated backward calls without
// zeroing accumulate.
namespace predrisk::ad {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::int64_t numel_of(const Shape& s);

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized lazily; empty means all-zero
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;  // pulls self.grad into parents

  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double value, bool requires_grad = false);
  static Tensor from_vector(const Shape& shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->data.size()); }
  std::vector<double>& data() { return node_->data; }
  const std::vector<double>& data() const { return node_->data; }
  std::vector<double>& grad();
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();
  double item() const;  // scalar value; NotScalar otherwise

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// ---- primitives -----------------------------------------------------------

// (m,k) x (k,n) -> (m,n), or (m,k) x (k) -> (m).
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor div(const Tensor& a, const Tensor& b);  // elementwise
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);

Tensor concat(const std::vector<Tensor>& parts, int axis = 0);
// Contiguous block: offsets/sizes per dimension.
Tensor slice(const Tensor& a, const Shape& offsets, const Shape& sizes);
Tensor reshape(const Tensor& a, const Shape& shape);

Tensor leaky_relu(const Tensor& a, double negative_slope = 0.1);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
// Pass-through gradient inside [lo, hi], zero outside.
Tensor clamp(const Tensor& a, double lo, double hi);

// 1-D only; numerically stabilized.
Tensor softmax(const Tensor& a);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

// Place rank-1 tensors of length len as the (row, col) fibers of a
// (len, rows, cols) tensor, row-major cell order; undefined entries become
// zeros. cells.size() must equal rows*cols.
Tensor stack_grid(const std::vector<Tensor>& cells, int rows, int cols);

// input (C,H,W), kernel (F,C,kh,kw), bias (F); stride (sh,sw); no padding.
// Output (F, (H-kh)/sh+1, (W-kw)/sw+1).
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int stride_h = 1, int stride_w = 1);
// input (C,H,W); output (C, (H-kh)/sh+1, (W-kw)/sw+1).
Tensor maxpool2d(const Tensor& input, int kernel_h, int kernel_w,
                 int stride_h = 1, int stride_w = 1);

// Standard gate equations (input/forget/candidate/output), composed from
// the primitives above so the backward pass is automatic. Weight layout:
// w_ih (4H, I), w_hh (4H, H), bias (4H), gate order i, f, g, o.
std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                                    const Tensor& w_ih, const Tensor& w_hh,
                                    const Tensor& bias);

// ---- training utilities ----------------------------------------------------

void backward(const Tensor& loss);
void zero_grads(const std::vector<Tensor>& params);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr = 0.001);

// Central-difference check of d fn / d params against the recorded backward
// rules. Samples at least min_coords coordinates (all of them when fewer
// exist); returns the worst relative error |a-n| / (|a|+|n|+1e-12).
// Coordinates where both |analytic| and |numeric| fall below atol are skipped:
// the difference quotient carries truncation error ~ f'''*eps^2/6 plus
// rounding ~ ulp(f)/eps, so below that floor it measures noise, not the
// gradient. atol = 0 disables the guard.
double grad_check(const std::function<Tensor()>& fn, const std::vector<Tensor>& params,
                  double eps = 1e-5, std::size_t min_coords = 200,
                  std::uint64_t seed = 12345, double atol = 0.0);

// Uniform in +-sqrt(6/(fan_in+fan_out)) from the given generator.
Tensor xavier_uniform(const Shape& shape, int fan_in, int fan_out,
                      std::mt19937_64& rng);

}  // namespace predrisk::ad
