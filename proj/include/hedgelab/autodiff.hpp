#pragma once
#include <deque>
#include <span>
#include <vector>

namespace hedgelab::autodiff {

enum class Act { gelu, sigmoid, tanh };

// Small dense tensor living on a Tape. data is row-major; grad is allocated
// with the tensor and filled by backward().
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  int size() const { return int(data.size()); }
};

// Reverse-mode tape over the exact operator set the five architectures need.
// Build the graph once, then replay it cheaply per sample: set_values() on
// the input leaves, forward(), backward(loss). backward() clears intermediate
// grads (per-pass working storage) but accumulates into leaf grads, so
// successive calls sum leaf gradients until zero_grad().
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable leaf (parameters, probed inputs).
  Tensor* leaf(std::vector<int> shape, std::span<const double> v);
  // Non-differentiable input (labels, per-sample pnl terms).
  Tensor* constant(std::vector<int> shape, std::span<const double> v);
  Tensor* constant(double v);

  // out[j] = sum_i W[j,i]*x[i] + b[j]
  Tensor* affine(Tensor* x, Tensor* w, Tensor* b);
  Tensor* activation(Tensor* x, Act kind);
  // max-subtracted, overflow-safe
  Tensor* softmax(Tensor* x);
  // causal: out[s] = sum_i h[i]*x[s - dilation*i], x[<0] = 0, length preserved
  Tensor* dilated_conv1d(Tensor* x, Tensor* h, int dilation);
  // tanh(W_xh*x + W_hh*h_prev + b_h), the fused vanilla-RNN step
  Tensor* recurrent_cell(Tensor* x, Tensor* h_prev, Tensor* w_xh, Tensor* w_hh, Tensor* b_h);
  // elementwise; an operand of length 1 broadcasts
  Tensor* add(Tensor* a, Tensor* b);
  Tensor* mul(Tensor* a, Tensor* b);
  Tensor* scale_shift(Tensor* x, double scale, double shift);
  Tensor* square(Tensor* x);
  Tensor* sum(Tensor* x);
  Tensor* slice(Tensor* x, int start, int len);
  Tensor* index(Tensor* x, int i) { return slice(x, i, 1); }
  Tensor* stack(std::span<Tensor* const> parts);

  // overwrite a leaf/constant for graph replay (size must match)
  void set_values(Tensor* t, std::span<const double> v);
  void set_value(Tensor* t, double v);

  void forward();               // recompute every node output in creation order
  void backward(Tensor* loss);  // loss must be scalar; accumulates grads
  void zero_grad();

  size_t n_nodes() const { return nodes_.size(); }

 private:
  enum class Op {
    input, affine, act, softmax, conv1d, rnn_cell,
    add, mul, scale_shift, square, sum, slice, stack,
  };
  struct Node {
    Op op;
    Tensor* out;
    std::vector<Tensor*> in;
    int i0 = 0, i1 = 0;       // dilation / slice start,len / act kind
    double a = 0.0, b = 0.0;  // scale_shift coefficients
  };

  Tensor* alloc(std::vector<int> shape, bool requires_grad);
  Tensor* record(Op op, std::vector<Tensor*> in, std::vector<int> out_shape,
                 int i0 = 0, int i1 = 0, double a = 0.0, double b = 0.0);
  void run(const Node& n);
  void back(const Node& n);

  std::deque<Tensor> storage_;  // stable addresses for every tensor on the tape
  std::vector<Node> nodes_;
};

}  // namespace hedgelab::autodiff
