#include "mospred/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "mospred/error.hpp"

namespace mospred::ad {

namespace {

std::string shape(const Matrix& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape(a) + " and " + shape(b));
}

void same_tape(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw ArgumentError(std::string(op) + ": operands belong to different tapes");
  }
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::item() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("item() on non-scalar node " + shape(v));
  }
  return v(0, 0);
}

Var Tape::constant(Matrix value) { return record("constant", std::move(value), {}, nullptr); }

Var Tape::constant_scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::param(Parameter& p) {
  auto v = record("param", p.value, {}, nullptr);
  auto& node = nodes_[v.id()];
  node.needs_grad = true;
  node.param = &p;
  if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
  return v;
}

Var Tape::record(const char* op, Matrix value, std::vector<Var> parents, BackwardFn backward) {
  if (consumed_) {
    throw ArgumentError("tape already swept; create a new tape per graph");
  }
  if (!value.allFinite()) {
    throw NumericError(std::string(op) + ": produced a non-finite value");
  }
  Node node;
  node.value = std::move(value);
  node.backward = std::move(backward);
  for (const auto& p : parents) {
    if (&p.tape() != this) {
      throw ArgumentError(std::string(op) + ": parent belongs to another tape");
    }
    node.parents.push_back(p.id());
    node.needs_grad = node.needs_grad || nodes_[p.id()].needs_grad;
  }
  if (!node.backward) node.needs_grad = false;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw ArgumentError("backward: root belongs to another tape");
  const auto& rv = nodes_[root.id()].value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw ArgumentError("backward: root must be a scalar, got " + shape(rv));
  }
  consumed_ = true;
  if (!nodes_[root.id()].needs_grad) return;
  nodes_[root.id()].grad = Matrix::Ones(1, 1);

  std::vector<Matrix*> parent_grads;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.needs_grad || node.grad.size() == 0) continue;
    if (node.param != nullptr) {
      node.param->grad += node.grad;
    }
    if (node.backward) {
      parent_grads.clear();
      for (auto pid : node.parents) {
        auto& parent = nodes_[pid];
        if (!parent.needs_grad) {
          parent_grads.push_back(nullptr);
          continue;
        }
        if (parent.grad.size() == 0) parent.grad = Matrix::Zero(parent.value.rows(), parent.value.cols());
        parent_grads.push_back(&parent.grad);
      }
      node.backward(node.grad, parent_grads);
    }
    node.grad.resize(0, 0);
  }
}

Var matmul(Var a, Var b) {
  same_tape(a, b, "matmul");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  Matrix out = av * bv;
  auto& tape = a.tape();
  return tape.record("matmul", std::move(out), {a, b}, [&tape, ia = a.id(), ib = b.id()](const Matrix& g, std::span<Matrix* const> pg) {
    if (pg[0]) pg[0]->noalias() += g * tape.value(ib).transpose();
    if (pg[1]) pg[1]->noalias() += tape.value(ia).transpose() * g;
  });
}

Var add(Var a, Var b) {
  same_tape(a, b, "add");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_error("add", av, bv);
  return a.tape().record("add", av + bv, {a, b}, [](const Matrix& g, std::span<Matrix* const> pg) {
    if (pg[0]) *pg[0] += g;
    if (pg[1]) *pg[1] += g;
  });
}

Var add_row_broadcast(Var a, Var row) {
  same_tape(a, row, "add_row_broadcast");
  const auto& av = a.value();
  const auto& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) shape_error("add_row_broadcast", av, rv);
  Matrix out = av.rowwise() + rv.row(0);
  return a.tape().record("add_row_broadcast", std::move(out), {a, row},
                         [](const Matrix& g, std::span<Matrix* const> pg) {
                           if (pg[0]) *pg[0] += g;
                           if (pg[1]) *pg[1] += g.colwise().sum();
                         });
}

Var scale(Var a, double c) {
  return a.tape().record("scale", a.value() * c, {a}, [c](const Matrix& g, std::span<Matrix* const> pg) {
    if (pg[0]) *pg[0] += c * g;
  });
}

Var add_constant(Var a, double c) {
  Matrix out = a.value().array() + c;
  return a.tape().record("add_constant", std::move(out), {a}, [](const Matrix& g, std::span<Matrix* const> pg) {
    if (pg[0]) *pg[0] += g;
  });
}

Var transpose(Var a) {
  Matrix out = a.value().transpose();
  return a.tape().record("transpose", std::move(out), {a}, [](const Matrix& g, std::span<Matrix* const> pg) {
    if (pg[0]) *pg[0] += g.transpose();
  });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index end) {
  const auto& av = a.value();
  if (begin < 0 || end > av.rows() || begin >= end) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + shape(av));
  }
  Matrix out = av.middleRows(begin, end - begin);
  return a.tape().record("slice_rows", std::move(out), {a}, [begin, end](const Matrix& g, std::span<Matrix* const> pg) {
    if (pg[0]) pg[0]->middleRows(begin, end - begin) += g;
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
  const auto cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    same_tape(parts.front(), p, "concat_rows");
    if (p.cols() != cols) shape_error("concat_rows", parts.front().value(), p.value());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    offsets.push_back(at);
    at += p.rows();
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  std::vector<Eigen::Index> counts;
  for (const auto& p : parts) counts.push_back(p.rows());
  return parts.front().tape().record(
      "concat_rows", std::move(out), std::move(parents),
      [offsets = std::move(offsets), counts = std::move(counts)](const Matrix& g, std::span<Matrix* const> pg) {
        for (std::size_t i = 0; i < pg.size(); ++i) {
          if (pg[i]) *pg[i] += g.middleRows(offsets[i], counts[i]);
        }
      });
}

Var softmax_rows(Var x) {
  const auto& xv = x.value();
  Matrix out(xv.rows(), xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double peak = xv.row(r).maxCoeff();
    out.row(r) = (xv.row(r).array() - peak).exp();
    out.row(r) /= out.row(r).sum();
  }
  auto& tape = x.tape();
  const auto id = tape.size();  // id of the node about to be recorded
  return tape.record("softmax_rows", std::move(out), {x}, [&tape, id](const Matrix& g, std::span<Matrix* const> pg) {
    if (!pg[0]) return;
    const auto& y = tape.value(id);
    const Eigen::VectorXd dot = (g.array() * y.array()).rowwise().sum();
    pg[0]->array() += y.array() * (g.array().colwise() - dot.array());
  });
}

Var tanh(Var x) {
  Matrix out = x.value().array().tanh();
  auto& tape = x.tape();
  const auto id = tape.size();
  return tape.record("tanh", std::move(out), {x}, [&tape, id](const Matrix& g, std::span<Matrix* const> pg) {
    if (!pg[0]) return;
    const auto& y = tape.value(id);
    pg[0]->array() += g.array() * (1.0 - y.array().square());
  });
}

Var mean_all(Var x) {
  const auto n = static_cast<double>(x.value().size());
  if (n == 0) throw ShapeError("mean_all: empty input");
  return x.tape().record("mean_all", Matrix::Constant(1, 1, x.value().sum() / n), {x},
                         [n](const Matrix& g, std::span<Matrix* const> pg) {
                           if (pg[0]) pg[0]->array() += g(0, 0) / n;
                         });
}

Var mse(Var pred, Var target) {
  same_tape(pred, target, "mse");
  const auto& pv = pred.value();
  const auto& tv = target.value();
  if (pv.rows() != tv.rows() || pv.cols() != tv.cols()) shape_error("mse", pv, tv);
  const auto n = static_cast<double>(pv.size());
  if (n == 0) throw ShapeError("mse: empty input");
  Matrix diff = pv - tv;
  const double value = diff.squaredNorm() / n;
  return pred.tape().record("mse", Matrix::Constant(1, 1, value), {pred, target},
                            [diff = std::move(diff), n](const Matrix& g, std::span<Matrix* const> pg) {
                              const double s = 2.0 * g(0, 0) / n;
                              if (pg[0]) *pg[0] += s * diff;
                              if (pg[1]) *pg[1] -= s * diff;
                            });
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradCheckReport grad_check(const std::function<Var(Tape&)>& build, std::span<Parameter* const> params,
                           double h, double tol) {
  if (!(h > 0.0) || h > 1e-2) throw ArgumentError("grad_check: step h must lie in (0, 1e-2]");

  std::vector<Matrix> saved_grads;
  for (auto* p : params) {
    saved_grads.push_back(p->grad);
    p->zero_grad();
  }

  auto evaluate = [&build]() {
    Tape tape;
    auto out = build(tape);
    if (out.rows() != 1 || out.cols() != 1) {
      throw ArgumentError("grad_check: graph output must be scalar");
    }
    return out.item();
  };

  {
    Tape tape;
    auto out = build(tape);
    if (out.rows() != 1 || out.cols() != 1) {
      throw ArgumentError("grad_check: graph output must be scalar");
    }
    tape.backward(out);
  }
  std::vector<Matrix> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      double& coord = p.value.data()[i];
      const double original = coord;
      coord = original + h;
      const double up = evaluate();
      coord = original - h;
      const double down = evaluate();
      coord = original;

      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k].data()[i];
      const double err = relative_error(a, numeric);
      ++report.coordinates;
      if (err > report.max_rel_error || report.worst_index < 0) {
        report.max_rel_error = err;
        report.worst_parameter = p.name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = saved_grads[k];
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace mospred::ad
