#include "hedgelab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hedgelab/analytics.hpp"
#include "hedgelab/errors.hpp"

namespace hedgelab::autodiff {

namespace {

std::string shape_str(const Tensor* t) {
  std::string s = "[";
  for (size_t i = 0; i < t->shape.size(); ++i)
    s += (i ? "x" : "") + std::to_string(t->shape[i]);
  return s + "]";
}

int numel(const std::vector<int>& shape) {
  return std::accumulate(shape.begin(), shape.end(), 1, std::multiplies<>());
}

}  // namespace

Tensor* Tape::alloc(std::vector<int> shape, bool requires_grad) {
  Tensor& t = storage_.emplace_back();
  t.shape = std::move(shape);
  t.data.assign(size_t(numel(t.shape)), 0.0);
  t.grad.assign(t.data.size(), 0.0);
  t.requires_grad = requires_grad;
  return &t;
}

Tensor* Tape::record(Op op, std::vector<Tensor*> in, std::vector<int> out_shape,
                     int i0, int i1, double a, double b) {
  bool rg = std::any_of(in.begin(), in.end(), [](Tensor* t) { return t->requires_grad; });
  Tensor* out = alloc(std::move(out_shape), rg);
  nodes_.push_back(Node{op, out, std::move(in), i0, i1, a, b});
  run(nodes_.back());
  return out;
}

Tensor* Tape::leaf(std::vector<int> shape, std::span<const double> v) {
  Tensor* t = alloc(std::move(shape), true);
  if (int(v.size()) != t->size())
    throw shape_error("leaf: got " + std::to_string(v.size()) + " values for shape " + shape_str(t));
  std::copy(v.begin(), v.end(), t->data.begin());
  nodes_.push_back(Node{Op::input, t, {}, 0, 0, 0.0, 0.0});
  return t;
}

Tensor* Tape::constant(std::vector<int> shape, std::span<const double> v) {
  Tensor* t = alloc(std::move(shape), false);
  if (int(v.size()) != t->size())
    throw shape_error("constant: got " + std::to_string(v.size()) + " values for shape " + shape_str(t));
  std::copy(v.begin(), v.end(), t->data.begin());
  nodes_.push_back(Node{Op::input, t, {}, 0, 0, 0.0, 0.0});
  return t;
}

Tensor* Tape::constant(double v) { return constant({1}, std::span<const double>(&v, 1)); }

Tensor* Tape::affine(Tensor* x, Tensor* w, Tensor* b) {
  if (w->shape.size() != 2)
    throw shape_error("affine: W must be 2-d, got " + shape_str(w));
  int m = w->shape[0], n = w->shape[1];
  if (x->size() != n)
    throw shape_error("affine: x " + shape_str(x) + " does not match W " + shape_str(w));
  if (b->size() != m)
    throw shape_error("affine: b " + shape_str(b) + " does not match W " + shape_str(w));
  return record(Op::affine, {x, w, b}, {m});
}

Tensor* Tape::activation(Tensor* x, Act kind) {
  return record(Op::act, {x}, x->shape, int(kind));
}

Tensor* Tape::softmax(Tensor* x) {
  if (x->size() < 1) throw shape_error("softmax: empty input");
  return record(Op::softmax, {x}, x->shape);
}

Tensor* Tape::dilated_conv1d(Tensor* x, Tensor* h, int dilation) {
  if (dilation < 1) throw shape_error("dilated_conv1d: dilation must be >= 1");
  if (h->size() < 1) throw shape_error("dilated_conv1d: empty kernel");
  return record(Op::conv1d, {x, h}, x->shape, dilation);
}

Tensor* Tape::recurrent_cell(Tensor* x, Tensor* h_prev, Tensor* w_xh, Tensor* w_hh, Tensor* b_h) {
  if (w_xh->shape.size() != 2 || w_hh->shape.size() != 2)
    throw shape_error("recurrent_cell: weights must be 2-d");
  int hid = w_xh->shape[0], n_in = w_xh->shape[1];
  if (x->size() != n_in)
    throw shape_error("recurrent_cell: x " + shape_str(x) + " does not match W_xh " + shape_str(w_xh));
  if (h_prev->size() != hid || w_hh->shape[0] != hid || w_hh->shape[1] != hid || b_h->size() != hid)
    throw shape_error("recurrent_cell: hidden shapes disagree (W_xh " + shape_str(w_xh) +
                      ", W_hh " + shape_str(w_hh) + ", h " + shape_str(h_prev) + ")");
  return record(Op::rnn_cell, {x, h_prev, w_xh, w_hh, b_h}, {hid});
}

namespace {

void check_broadcast(const Tensor* a, const Tensor* b, const char* what) {
  if (a->size() != b->size() && a->size() != 1 && b->size() != 1)
    throw shape_error(std::string(what) + ": " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

Tensor* Tape::add(Tensor* a, Tensor* b) {
  check_broadcast(a, b, "add");
  return record(Op::add, {a, b}, a->size() >= b->size() ? a->shape : b->shape);
}

Tensor* Tape::mul(Tensor* a, Tensor* b) {
  check_broadcast(a, b, "mul");
  return record(Op::mul, {a, b}, a->size() >= b->size() ? a->shape : b->shape);
}

Tensor* Tape::scale_shift(Tensor* x, double scale, double shift) {
  return record(Op::scale_shift, {x}, x->shape, 0, 0, scale, shift);
}

Tensor* Tape::square(Tensor* x) { return record(Op::square, {x}, x->shape); }

Tensor* Tape::sum(Tensor* x) { return record(Op::sum, {x}, {1}); }

Tensor* Tape::slice(Tensor* x, int start, int len) {
  if (start < 0 || len < 1 || start + len > x->size())
    throw shape_error("slice: [" + std::to_string(start) + "," + std::to_string(start + len) +
                      ") out of range for " + shape_str(x));
  return record(Op::slice, {x}, {len}, start, len);
}

Tensor* Tape::stack(std::span<Tensor* const> parts) {
  if (parts.empty()) throw shape_error("stack: no inputs");
  int total = 0;
  for (Tensor* p : parts) total += p->size();
  return record(Op::stack, {parts.begin(), parts.end()}, {total});
}

void Tape::set_values(Tensor* t, std::span<const double> v) {
  if (int(v.size()) != t->size())
    throw shape_error("set_values: got " + std::to_string(v.size()) + " values for " + shape_str(t));
  std::copy(v.begin(), v.end(), t->data.begin());
}

void Tape::set_value(Tensor* t, double v) { set_values(t, std::span<const double>(&v, 1)); }

void Tape::forward() {
  for (const Node& n : nodes_) run(n);
}

void Tape::backward(Tensor* loss) {
  if (loss->size() != 1) throw contract_error("backward: loss must be scalar");
  // intermediate grads are per-pass working storage; only leaves accumulate
  // across successive backward() calls
  for (const Node& n : nodes_)
    if (n.op != Op::input) std::fill(n.out->grad.begin(), n.out->grad.end(), 0.0);
  loss->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) back(*it);
}

void Tape::zero_grad() {
  for (Tensor& t : storage_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

void Tape::run(const Node& n) {
  double* y = n.out->data.data();
  switch (n.op) {
    case Op::input:
      break;  // values are whatever set_values() left there
    case Op::affine: {
      const Tensor *x = n.in[0], *w = n.in[1], *b = n.in[2];
      int m = w->shape[0], k = w->shape[1];
      for (int j = 0; j < m; ++j) {
        double acc = b->data[j];
        const double* wj = w->data.data() + size_t(j) * k;
        for (int i = 0; i < k; ++i) acc += wj[i] * x->data[i];
        y[j] = acc;
      }
      break;
    }
    case Op::act: {
      const Tensor* x = n.in[0];
      switch (Act(n.i0)) {
        case Act::gelu:
          for (int i = 0; i < x->size(); ++i)
            y[i] = x->data[i] * analytics::norm_cdf(x->data[i]);
          break;
        case Act::sigmoid:
          for (int i = 0; i < x->size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x->data[i]));
          break;
        case Act::tanh:
          for (int i = 0; i < x->size(); ++i) y[i] = std::tanh(x->data[i]);
          break;
      }
      break;
    }
    case Op::softmax: {
      const Tensor* x = n.in[0];
      double mx = *std::max_element(x->data.begin(), x->data.end());
      double total = 0.0;
      for (int i = 0; i < x->size(); ++i) total += (y[i] = std::exp(x->data[i] - mx));
      for (int i = 0; i < x->size(); ++i) y[i] /= total;
      break;
    }
    case Op::conv1d: {
      const Tensor *x = n.in[0], *h = n.in[1];
      int t_len = x->size(), k = h->size(), d = n.i0;
      for (int s = 0; s < t_len; ++s) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) {
          int src = s - d * i;
          if (src >= 0) acc += h->data[i] * x->data[src];
        }
        y[s] = acc;
      }
      break;
    }
    case Op::rnn_cell: {
      const Tensor *x = n.in[0], *hp = n.in[1], *wxh = n.in[2], *whh = n.in[3], *bh = n.in[4];
      int hid = wxh->shape[0], k = wxh->shape[1];
      for (int j = 0; j < hid; ++j) {
        double acc = bh->data[j];
        const double* wj = wxh->data.data() + size_t(j) * k;
        for (int i = 0; i < k; ++i) acc += wj[i] * x->data[i];
        const double* uj = whh->data.data() + size_t(j) * hid;
        for (int m = 0; m < hid; ++m) acc += uj[m] * hp->data[m];
        y[j] = std::tanh(acc);
      }
      break;
    }
    case Op::add: {
      const Tensor *a = n.in[0], *b = n.in[1];
      int len = n.out->size();
      for (int i = 0; i < len; ++i)
        y[i] = a->data[a->size() == 1 ? 0 : i] + b->data[b->size() == 1 ? 0 : i];
      break;
    }
    case Op::mul: {
      const Tensor *a = n.in[0], *b = n.in[1];
      int len = n.out->size();
      for (int i = 0; i < len; ++i)
        y[i] = a->data[a->size() == 1 ? 0 : i] * b->data[b->size() == 1 ? 0 : i];
      break;
    }
    case Op::scale_shift: {
      const Tensor* x = n.in[0];
      for (int i = 0; i < x->size(); ++i) y[i] = n.a * x->data[i] + n.b;
      break;
    }
    case Op::square: {
      const Tensor* x = n.in[0];
      for (int i = 0; i < x->size(); ++i) y[i] = x->data[i] * x->data[i];
      break;
    }
    case Op::sum: {
      const Tensor* x = n.in[0];
      double acc = 0.0;
      for (int i = 0; i < x->size(); ++i) acc += x->data[i];
      y[0] = acc;
      break;
    }
    case Op::slice: {
      const Tensor* x = n.in[0];
      for (int i = 0; i < n.i1; ++i) y[i] = x->data[n.i0 + i];
      break;
    }
    case Op::stack: {
      int pos = 0;
      for (const Tensor* p : n.in)
        for (int i = 0; i < p->size(); ++i) y[pos++] = p->data[i];
      break;
    }
  }
}

void Tape::back(const Node& n) {
  if (!n.out->requires_grad && n.op != Op::input) return;
  const double* gy = n.out->grad.data();
  switch (n.op) {
    case Op::input:
      break;
    case Op::affine: {
      Tensor *x = n.in[0], *w = n.in[1], *b = n.in[2];
      int m = w->shape[0], k = w->shape[1];
      for (int j = 0; j < m; ++j) {
        double g = gy[j];
        const double* wj = w->data.data() + size_t(j) * k;
        double* gwj = w->grad.data() + size_t(j) * k;
        for (int i = 0; i < k; ++i) {
          gwj[i] += g * x->data[i];
          x->grad[i] += g * wj[i];
        }
        b->grad[j] += g;
      }
      break;
    }
    case Op::act: {
      Tensor* x = n.in[0];
      switch (Act(n.i0)) {
        case Act::gelu:
          for (int i = 0; i < x->size(); ++i) {
            double v = x->data[i];
            x->grad[i] += gy[i] * (analytics::norm_cdf(v) + v * analytics::norm_pdf(v));
          }
          break;
        case Act::sigmoid:
          for (int i = 0; i < x->size(); ++i) {
            double s = n.out->data[i];
            x->grad[i] += gy[i] * s * (1.0 - s);
          }
          break;
        case Act::tanh:
          for (int i = 0; i < x->size(); ++i) {
            double t = n.out->data[i];
            x->grad[i] += gy[i] * (1.0 - t * t);
          }
          break;
      }
      break;
    }
    case Op::softmax: {
      Tensor* x = n.in[0];
      const double* s = n.out->data.data();
      double dot = 0.0;
      for (int i = 0; i < x->size(); ++i) dot += gy[i] * s[i];
      for (int i = 0; i < x->size(); ++i) x->grad[i] += s[i] * (gy[i] - dot);
      break;
    }
    case Op::conv1d: {
      Tensor *x = n.in[0], *h = n.in[1];
      int t_len = x->size(), k = h->size(), d = n.i0;
      for (int s = 0; s < t_len; ++s) {
        double g = gy[s];
        for (int i = 0; i < k; ++i) {
          int src = s - d * i;
          if (src >= 0) {
            x->grad[src] += g * h->data[i];
            h->grad[i] += g * x->data[src];
          }
        }
      }
      break;
    }
    case Op::rnn_cell: {
      Tensor *x = n.in[0], *hp = n.in[1], *wxh = n.in[2], *whh = n.in[3], *bh = n.in[4];
      int hid = wxh->shape[0], k = wxh->shape[1];
      for (int j = 0; j < hid; ++j) {
        double t = n.out->data[j];
        double gz = gy[j] * (1.0 - t * t);
        const double* wj = wxh->data.data() + size_t(j) * k;
        double* gwj = wxh->grad.data() + size_t(j) * k;
        for (int i = 0; i < k; ++i) {
          gwj[i] += gz * x->data[i];
          x->grad[i] += gz * wj[i];
        }
        const double* uj = whh->data.data() + size_t(j) * hid;
        double* guj = whh->grad.data() + size_t(j) * hid;
        for (int m = 0; m < hid; ++m) {
          guj[m] += gz * hp->data[m];
          hp->grad[m] += gz * uj[m];
        }
        bh->grad[j] += gz;
      }
      break;
    }
    case Op::add: {
      Tensor *a = n.in[0], *b = n.in[1];
      int len = n.out->size();
      for (int i = 0; i < len; ++i) {
        a->grad[a->size() == 1 ? 0 : i] += gy[i];
        b->grad[b->size() == 1 ? 0 : i] += gy[i];
      }
      break;
    }
    case Op::mul: {
      Tensor *a = n.in[0], *b = n.in[1];
      int len = n.out->size();
      for (int i = 0; i < len; ++i) {
        a->grad[a->size() == 1 ? 0 : i] += gy[i] * b->data[b->size() == 1 ? 0 : i];
        b->grad[b->size() == 1 ? 0 : i] += gy[i] * a->data[a->size() == 1 ? 0 : i];
      }
      break;
    }
    case Op::scale_shift: {
      Tensor* x = n.in[0];
      for (int i = 0; i < x->size(); ++i) x->grad[i] += n.a * gy[i];
      break;
    }
    case Op::square: {
      Tensor* x = n.in[0];
      for (int i = 0; i < x->size(); ++i) x->grad[i] += 2.0 * x->data[i] * gy[i];
      break;
    }
    case Op::sum: {
      Tensor* x = n.in[0];
      for (int i = 0; i < x->size(); ++i) x->grad[i] += gy[0];
      break;
    }
    case Op::slice: {
      Tensor* x = n.in[0];
      for (int i = 0; i < n.i1; ++i) x->grad[n.i0 + i] += gy[i];
      break;
    }
    case Op::stack: {
      int pos = 0;
      for (Tensor* p : n.in)
        for (int i = 0; i < p->size(); ++i) p->grad[i] += gy[pos++];
      break;
    }
  }
}

}  // namespace hedgelab::autodiff
