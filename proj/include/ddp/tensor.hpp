#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ddp/mat.hpp"

namespace ddp {

namespace detail {
struct TensorNode {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;   // row-major
  std::vector<double> grad;   // empty until backward touches it
  bool requires_grad = false;
  std::string name;           // set for named parameters

  std::size_t size() const { return rows * cols; }
  bool grad_allocated() const { return !grad.empty(); }
  void ensure_grad() { if (grad.empty()) grad.assign(data.size(), 0.0); }
};
}  // namespace detail

// Shared handle to a dense 64-bit tensor participating in reverse-mode
// differentiation. Copies alias the same storage. Leaf tensors (parameters,
// constants) outlive any tape; intermediate tensors are produced by Tape ops.
class Tensor {
 public:
  Tensor() = default;

  // Leaf with gradient tracking; `name` identifies it in optimizer errors
  // and checkpoints.
  static Tensor variable(Mat value, std::string name);
  static Tensor constant(Mat value);

  bool defined() const { return n_ != nullptr; }
  std::size_t rows() const { return n_->rows; }
  std::size_t cols() const { return n_->cols; }
  std::size_t size() const { return n_->size(); }
  bool requires_grad() const { return n_->requires_grad; }
  const std::string& name() const { return n_->name; }

  double value(std::size_t i, std::size_t j) const { return n_->data[i * n_->cols + j]; }
  double scalar() const;  // value of a 1x1 tensor
  const std::vector<double>& data() const { return n_->data; }
  Mat to_mat() const { return Mat(n_->rows, n_->cols, n_->data); }

  bool has_grad() const { return n_->grad_allocated(); }
  const std::vector<double>& grad() const { return n_->grad; }
  Mat grad_mat() const { return Mat(n_->rows, n_->cols, n_->grad); }
  void zero_grad() { n_->grad.clear(); }

  // In-place update of a leaf's values (optimizer use; never call on a
  // tensor that sits on a live tape).
  void assign(const Mat& value);

  std::string shape_string() const;

  friend class Tape;
  friend bool same_node(const Tensor& a, const Tensor& b);
  friend void sgd_step(std::vector<Tensor>& params, double lr);
  friend void clip_grad_norm(std::vector<Tensor>& params, double max_norm);

 private:
  std::shared_ptr<detail::TensorNode> n_;
};

inline bool same_node(const Tensor& a, const Tensor& b) { return a.n_ == b.n_; }

// Records every primitive applied through it, in execution order. backward()
// replays the record once in reverse; a second backward without a fresh
// forward is an error. Gradients accumulate additively into every
// requires_grad tensor reachable from the loss.
class Tape {
 public:
  enum class BackwardOrder {
    kReverseRecording,  // default: reverse of execution order
    kDependencyKahn,    // alternative valid topological order (for testing)
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor matmul(const Tensor& a, const Tensor& b);
  // Elementwise; operands must be same-shape, or one side 1x1 (scalar
  // broadcast). No other broadcasting exists.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor sigmoid(const Tensor& x);
  Tensor tanh(const Tensor& x);
  Tensor relu(const Tensor& x);      // relu'(0) defined as 0
  Tensor softplus(const Tensor& x);  // ln(1+e^x), numerically stable
  Tensor scale(const Tensor& x, double c);
  Tensor sum(const Tensor& x);       // -> 1x1
  Tensor add_rowvec(const Tensor& m, const Tensor& v);   // m[n,c] + v[1,c] per row
  Tensor concat_cols(const Tensor& a, const Tensor& b);  // same rows
  Tensor stack_rows(const std::vector<Tensor>& rows);    // k tensors [1,c] -> [k,c]
  Tensor select_row(const Tensor& m, std::size_t i);     // -> [1,c]

  void backward(const Tensor& loss, BackwardOrder order = BackwardOrder::kReverseRecording);

  std::size_t num_ops() const { return records_.size(); }
  bool consumed() const { return consumed_; }

 private:
  using NodePtr = std::shared_ptr<detail::TensorNode>;
  struct OpRecord {
    std::vector<NodePtr> inputs;
    NodePtr output;
    std::function<void()> grad_fn;
  };

  Tensor make_output(std::size_t rows, std::size_t cols,
                     std::vector<const Tensor*> inputs);
  void record(std::vector<NodePtr> inputs, NodePtr output, std::function<void()> fn);
  Tensor unary_map(const Tensor& x, double (*f)(double), double (*dfdy)(double, double));

  std::vector<OpRecord> records_;
  bool consumed_ = false;
};

// p <- p - lr * p.grad for every parameter, then grads are zeroed.
// Throws std::invalid_argument naming the first parameter missing a grad.
void sgd_step(std::vector<Tensor>& params, double lr);

double global_grad_norm(const std::vector<Tensor>& params);

// Scales all grads by max_norm/norm when the global norm exceeds max_norm.
void clip_grad_norm(std::vector<Tensor>& params, double max_norm);

void zero_grads(std::vector<Tensor>& params);

bool all_finite(const Tensor& t);

}  // namespace ddp
