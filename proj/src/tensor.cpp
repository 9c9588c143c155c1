#include "ddp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace ddp {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

double sigmoid_fwd(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_fwd(double x) {
  if (x > 30.0) return x;          // log1p(exp(x)) == x to double precision
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

Tensor Tensor::variable(Mat value, std::string name) {
  Tensor t;
  t.n_ = std::make_shared<detail::TensorNode>();
  t.n_->rows = value.rows;
  t.n_->cols = value.cols;
  t.n_->data = std::move(value.v);
  t.n_->requires_grad = true;
  t.n_->name = std::move(name);
  return t;
}

Tensor Tensor::constant(Mat value) {
  Tensor t;
  t.n_ = std::make_shared<detail::TensorNode>();
  t.n_->rows = value.rows;
  t.n_->cols = value.cols;
  t.n_->data = std::move(value.v);
  t.n_->requires_grad = false;
  return t;
}

double Tensor::scalar() const {
  if (size() != 1)
    throw std::invalid_argument("scalar() on tensor of shape " + shape_string());
  return n_->data[0];
}

void Tensor::assign(const Mat& value) {
  if (value.rows != n_->rows || value.cols != n_->cols)
    throw std::invalid_argument("assign: shape mismatch " + shape_string() + " vs " +
                                shape_str(value.rows, value.cols));
  n_->data = value.v;
}

std::string Tensor::shape_string() const {
  return shape_str(n_->rows, n_->cols);
}

Tensor Tape::make_output(std::size_t rows, std::size_t cols,
                         std::vector<const Tensor*> inputs) {
  Tensor out;
  out.n_ = std::make_shared<detail::TensorNode>();
  out.n_->rows = rows;
  out.n_->cols = cols;
  out.n_->data.assign(rows * cols, 0.0);
  for (const Tensor* in : inputs)
    if (in->requires_grad()) out.n_->requires_grad = true;
  return out;
}

void Tape::record(std::vector<NodePtr> inputs, NodePtr output, std::function<void()> fn) {
  // Constant-only subgraphs leave nothing to differentiate.
  if (!output->requires_grad) return;
  records_.push_back(OpRecord{std::move(inputs), std::move(output), std::move(fn)});
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions disagree: " + a.shape_string() +
                                " vs " + b.shape_string());
  Tensor out = make_output(a.rows(), b.cols(), {&a, &b});
  detail::gemm_acc(a.n_->data.data(), b.n_->data.data(), out.n_->data.data(),
                   a.rows(), a.cols(), b.cols());
  auto an = a.n_, bn = b.n_, on = out.n_;
  record({an, bn}, on, [an, bn, on] {
    const std::size_t m = an->rows, k = an->cols, n = bn->cols;
    if (an->requires_grad) {
      an->ensure_grad();
      detail::gemm_nt_acc(on->grad.data(), bn->data.data(), an->grad.data(), m, n, k);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      detail::gemm_tn_acc(an->data.data(), on->grad.data(), bn->grad.data(), m, k, n);
    }
  });
  return out;
}

namespace {
enum class Ew { kAdd, kSub, kMul };
}

// Shared implementation for add/sub/mul with the scalar (1x1) broadcast rule.
static Tensor ew_binary(Tape& tape, const Tensor& a, const Tensor& b, Ew op);

Tensor Tape::add(const Tensor& a, const Tensor& b) { return ew_binary(*this, a, b, Ew::kAdd); }
Tensor Tape::sub(const Tensor& a, const Tensor& b) { return ew_binary(*this, a, b, Ew::kSub); }
Tensor Tape::mul(const Tensor& a, const Tensor& b) { return ew_binary(*this, a, b, Ew::kMul); }

static Tensor ew_binary(Tape& tape, const Tensor& a, const Tensor& b, Ew op) {
  const bool same = a.rows() == b.rows() && a.cols() == b.cols();
  const bool a_scalar = a.size() == 1;
  const bool b_scalar = b.size() == 1;
  if (!same && !a_scalar && !b_scalar)
    throw std::invalid_argument("elementwise: shapes not broadcastable: " + a.shape_string() +
                                " vs " + b.shape_string());
  struct Access {  // public-ish via friendship: Tape is friend of Tensor
    static Tensor run(Tape& tape, const Tensor& a, const Tensor& b, Ew op,
                      bool a_scalar, bool b_scalar, bool same) {
      const Tensor& big = (same || b_scalar) ? a : b;
      Tensor out = tape.make_output(big.rows(), big.cols(), {&a, &b});
      const auto& av = a.data();
      const auto& bv = b.data();
      auto& ov = out.n_->data;
      const std::size_t n = ov.size();
      for (std::size_t i = 0; i < n; ++i) {
        const double x = a_scalar && !same ? av[0] : av[i];
        const double y = b_scalar && !same ? bv[0] : bv[i];
        switch (op) {
          case Ew::kAdd: ov[i] = x + y; break;
          case Ew::kSub: ov[i] = x - y; break;
          case Ew::kMul: ov[i] = x * y; break;
        }
      }
      auto an = a.n_, bn = b.n_, on = out.n_;
      const bool bc_a = a_scalar && !same, bc_b = b_scalar && !same;
      tape.record({an, bn}, on, [an, bn, on, op, bc_a, bc_b] {
        const std::size_t n = on->data.size();
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            double g = on->grad[i];
            if (op == Ew::kMul) g *= bc_b ? bn->data[0] : bn->data[i];
            an->grad[bc_a ? 0 : i] += g;
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            double g = on->grad[i];
            switch (op) {
              case Ew::kAdd: break;
              case Ew::kSub: g = -g; break;
              case Ew::kMul: g *= bc_a ? an->data[0] : an->data[i]; break;
            }
            bn->grad[bc_b ? 0 : i] += g;
          }
        }
      });
      return out;
    }
  };
  return Access::run(tape, a, b, op, a_scalar, b_scalar, same);
}

Tensor Tape::unary_map(const Tensor& x, double (*f)(double), double (*dfdy)(double, double)) {
  Tensor out = make_output(x.rows(), x.cols(), {&x});
  const auto& xv = x.n_->data;
  auto& ov = out.n_->data;
  for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = f(xv[i]);
  auto xn = x.n_, on = out.n_;
  record({xn}, on, [xn, on, dfdy] {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < xn->data.size(); ++i)
      xn->grad[i] += dfdy(xn->data[i], on->data[i]) * on->grad[i];
  });
  return out;
}

Tensor Tape::sigmoid(const Tensor& x) {
  return unary_map(x, &sigmoid_fwd, [](double, double y) { return y * (1.0 - y); });
}

Tensor Tape::tanh(const Tensor& x) {
  return unary_map(x, [](double v) { return std::tanh(v); },
                   [](double, double y) { return 1.0 - y * y; });
}

Tensor Tape::relu(const Tensor& x) {
  return unary_map(x, [](double v) { return v > 0.0 ? v : 0.0; },
                   [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor Tape::softplus(const Tensor& x) {
  return unary_map(x, &softplus_fwd, [](double v, double) { return sigmoid_fwd(v); });
}

Tensor Tape::scale(const Tensor& x, double c) {
  Tensor out = make_output(x.rows(), x.cols(), {&x});
  for (std::size_t i = 0; i < x.size(); ++i) out.n_->data[i] = x.n_->data[i] * c;
  auto xn = x.n_, on = out.n_;
  record({xn}, on, [xn, on, c] {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < xn->data.size(); ++i) xn->grad[i] += c * on->grad[i];
  });
  return out;
}

Tensor Tape::sum(const Tensor& x) {
  Tensor out = make_output(1, 1, {&x});
  double acc = 0.0;
  for (double v : x.n_->data) acc += v;
  out.n_->data[0] = acc;
  auto xn = x.n_, on = out.n_;
  record({xn}, on, [xn, on] {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const double g = on->grad[0];
    for (double& gi : xn->grad) gi += g;
  });
  return out;
}

Tensor Tape::add_rowvec(const Tensor& m, const Tensor& v) {
  if (v.rows() != 1 || v.cols() != m.cols())
    throw std::invalid_argument("add_rowvec: expected [1x" + std::to_string(m.cols()) +
                                "] row vector, got " + v.shape_string());
  Tensor out = make_output(m.rows(), m.cols(), {&m, &v});
  const std::size_t r = m.rows(), c = m.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out.n_->data[i * c + j] = m.n_->data[i * c + j] + v.n_->data[j];
  auto mn = m.n_, vn = v.n_, on = out.n_;
  record({mn, vn}, on, [mn, vn, on] {
    const std::size_t r = mn->rows, c = mn->cols;
    if (mn->requires_grad) {
      mn->ensure_grad();
      for (std::size_t i = 0; i < r * c; ++i) mn->grad[i] += on->grad[i];
    }
    if (vn->requires_grad) {
      vn->ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) vn->grad[j] += on->grad[i * c + j];
    }
  });
  return out;
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("concat_cols: row counts differ: " + a.shape_string() +
                                " vs " + b.shape_string());
  const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out = make_output(r, ca + cb, {&a, &b});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out.n_->data[i * (ca + cb) + j] = a.n_->data[i * ca + j];
    for (std::size_t j = 0; j < cb; ++j) out.n_->data[i * (ca + cb) + ca + j] = b.n_->data[i * cb + j];
  }
  auto an = a.n_, bn = b.n_, on = out.n_;
  record({an, bn}, on, [an, bn, on] {
    const std::size_t r = an->rows, ca = an->cols, cb = bn->cols;
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < ca; ++j) an->grad[i * ca + j] += on->grad[i * (ca + cb) + j];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cb; ++j)
          bn->grad[i * cb + j] += on->grad[i * (ca + cb) + ca + j];
    }
  });
  return out;
}

Tensor Tape::stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows given");
  const std::size_t c = rows[0].cols();
  std::vector<const Tensor*> ptrs;
  for (const Tensor& t : rows) {
    if (t.rows() != 1 || t.cols() != c)
      throw std::invalid_argument("stack_rows: expected [1x" + std::to_string(c) +
                                  "] rows, got " + t.shape_string());
    ptrs.push_back(&t);
  }
  Tensor out = make_output(rows.size(), c, ptrs);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].n_->data.begin(), rows[i].n_->data.end(),
              out.n_->data.begin() + static_cast<std::ptrdiff_t>(i * c));
  std::vector<NodePtr> ins;
  ins.reserve(rows.size());
  for (const Tensor& t : rows) ins.push_back(t.n_);
  auto on = out.n_;
  auto ins_copy = ins;
  record(std::move(ins), on, [ins_copy, on] {
    const std::size_t c = on->cols;
    for (std::size_t i = 0; i < ins_copy.size(); ++i) {
      auto& in = ins_copy[i];
      if (!in->requires_grad) continue;
      in->ensure_grad();
      for (std::size_t j = 0; j < c; ++j) in->grad[j] += on->grad[i * c + j];
    }
  });
  return out;
}

Tensor Tape::select_row(const Tensor& m, std::size_t i) {
  if (i >= m.rows())
    throw std::invalid_argument("select_row: row " + std::to_string(i) +
                                " out of range for " + m.shape_string());
  const std::size_t c = m.cols();
  Tensor out = make_output(1, c, {&m});
  std::copy(m.n_->data.begin() + static_cast<std::ptrdiff_t>(i * c),
            m.n_->data.begin() + static_cast<std::ptrdiff_t>((i + 1) * c),
            out.n_->data.begin());
  auto mn = m.n_, on = out.n_;
  record({mn}, on, [mn, on, i] {
    if (!mn->requires_grad) return;
    mn->ensure_grad();
    const std::size_t c = mn->cols;
    for (std::size_t j = 0; j < c; ++j) mn->grad[i * c + j] += on->grad[j];
  });
  return out;
}

void Tape::backward(const Tensor& loss, BackwardOrder order) {
  if (consumed_)
    throw std::logic_error("backward: tape already consumed; run a new forward pass");
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar (1x1) tensor");
  std::size_t loss_rec = records_.size();
  for (std::size_t r = records_.size(); r-- > 0;) {
    if (records_[r].output == loss.n_) { loss_rec = r; break; }
  }
  if (loss_rec == records_.size())
    throw std::invalid_argument("backward: loss was not produced by this tape");
  consumed_ = true;

  loss.n_->ensure_grad();
  loss.n_->grad[0] = 1.0;

  if (order == BackwardOrder::kReverseRecording) {
    for (std::size_t r = records_.size(); r-- > 0;) {
      // Records whose output never received a gradient are off the loss path.
      if (!records_[r].output->grad_allocated()) continue;
      records_[r].grad_fn();
    }
    return;
  }

  // Alternative order: explicit dependency toposort (Kahn), smallest record
  // index first among the ready set. Exists to exercise the invariant that
  // gradient accumulation is order-independent.
  std::unordered_map<const detail::TensorNode*, std::size_t> producer;
  for (std::size_t r = 0; r < records_.size(); ++r) producer[records_[r].output.get()] = r;

  std::vector<char> reachable(records_.size(), 0);
  std::vector<std::size_t> stack = {loss_rec};
  reachable[loss_rec] = 1;
  while (!stack.empty()) {
    std::size_t r = stack.back();
    stack.pop_back();
    for (const auto& in : records_[r].inputs) {
      auto it = producer.find(in.get());
      if (it != producer.end() && !reachable[it->second]) {
        reachable[it->second] = 1;
        stack.push_back(it->second);
      }
    }
  }

  std::vector<std::size_t> pending(records_.size(), 0);
  for (std::size_t r = 0; r < records_.size(); ++r) {
    if (!reachable[r]) continue;
    for (const auto& in : records_[r].inputs) {
      auto it = producer.find(in.get());
      if (it != producer.end() && reachable[it->second]) ++pending[it->second];
    }
  }

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<std::size_t>> ready;
  for (std::size_t r = 0; r < records_.size(); ++r)
    if (reachable[r] && pending[r] == 0) ready.push(r);
  while (!ready.empty()) {
    std::size_t r = ready.top();
    ready.pop();
    records_[r].output->ensure_grad();
    records_[r].grad_fn();
    for (const auto& in : records_[r].inputs) {
      auto it = producer.find(in.get());
      if (it != producer.end() && reachable[it->second] && --pending[it->second] == 0)
        ready.push(it->second);
    }
  }
}

void sgd_step(std::vector<Tensor>& params, double lr) {
  if (lr < 0.0) throw std::invalid_argument("sgd_step: learning rate must be non-negative");
  for (Tensor& p : params)
    if (!p.has_grad())
      throw std::invalid_argument("sgd_step: parameter '" + p.name() + "' has no gradient");
  for (Tensor& p : params) {
    auto& node = *p.n_;
    for (std::size_t i = 0; i < node.data.size(); ++i) node.data[i] -= lr * node.grad[i];
    node.grad.clear();
  }
}

double global_grad_norm(const std::vector<Tensor>& params) {
  double sq = 0.0;
  for (const Tensor& p : params)
    if (p.has_grad())
      for (double g : p.grad()) sq += g * g;
  return std::sqrt(sq);
}

void clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (Tensor& p : params) {
    if (!p.has_grad()) continue;
    for (double& g : p.n_->grad) g *= s;
  }
}

void zero_grads(std::vector<Tensor>& params) {
  for (Tensor& p : params) p.zero_grad();
}

bool all_finite(const Tensor& t) {
  for (double v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace ddp
