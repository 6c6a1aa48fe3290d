#pragma once

// Minimal reverse-mode differentiation over dense row-major matrices.
//
// A Tape records every operation in creation order, which is already a
// topological order, so backward is a single reverse sweep. Parameters live
// outside the tape and receive accumulated gradients when the sweep reaches
// their leaf nodes.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mospred::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

class Tape;

/// Handle to a tape node. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double item() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Backward rule of a recorded op: given the output adjoint, add each parent's
/// contribution into `parent_grads[i]`. Entries are null for parents that do
/// not require gradients.
using BackwardFn = std::function<void(const Matrix& grad_out, std::span<Matrix* const> parent_grads)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant_scalar(double value);

  /// Leaf bound to a parameter; its adjoint is added into `p.grad` on backward.
  Var param(Parameter& p);

  /// Records an arbitrary op. `value` must be finite.
  Var record(const char* op, Matrix value, std::vector<Var> parents, BackwardFn backward);

  /// Reverse sweep from a 1x1 root. Each node is visited exactly once.
  void backward(Var root);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Primitives. All throw ShapeError naming both operand shapes on mismatch.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
/// Adds the 1 x c row vector `row` to every row of `a`.
Var add_row_broadcast(Var a, Var row);
Var scale(Var a, double c);
Var add_constant(Var a, double c);
Var transpose(Var a);
/// Rows [begin, end) of `a`.
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index end);
Var concat_rows(std::span<const Var> parts);
/// Row-wise softmax with max subtraction.
Var softmax_rows(Var x);
Var tanh(Var x);
Var mean_all(Var x);
/// Mean squared difference, as a 1x1 node.
Var mse(Var pred, Var target);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

/// Relative error |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double a, double b);

/// Compares the tape's gradient of a scalar graph against central differences
/// for every coordinate of `params`. `build` must bind the parameters through
/// `Tape::param`. Parameter values and gradients are restored afterwards.
GradCheckReport grad_check(const std::function<Var(Tape&)>& build, std::span<Parameter* const> params,
                           double h = 1e-5, double tol = 1e-4);

}  // namespace mospred::ad
