#include "tessera/nn/graph.hpp"

#include "tessera/error.hpp"

namespace tessera::nn {

std::size_t Expr::size() const { return graph->value(id).size(); }
std::size_t Expr::rows() const { return graph->rows(id); }
std::size_t Expr::cols() const { return graph->cols(id); }
std::span<const double> Expr::value() const { return graph->value(id); }

double Expr::scalar() const {
  const auto v = value();
  require(v.size() == 1, "scalar() on a non-scalar node");
  return v[0];
}

Graph::Graph(bool training, std::uint64_t seed) : training_(training), rng_(seed) {}

Expr Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Expr{this, static_cast<int>(nodes_.size() - 1)};
}

Expr Graph::input(std::vector<double> values, std::size_t rows, std::size_t cols) {
  require(values.size() == rows * cols, "input size must equal rows * cols");
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(values);
  return push(std::move(n));
}

Expr Graph::input(std::vector<double> values) {
  const std::size_t n = values.size();
  return input(std::move(values), n, 1);
}

Expr Graph::zeros(std::size_t n) { return input(std::vector<double>(n, 0.0), n, 1); }

Expr Graph::constant(double value) { return input({value}, 1, 1); }

Expr Graph::param(Parameter& p) {
  if (const auto it = param_ids_.find(&p); it != param_ids_.end()) return Expr{this, it->second};
  Node n;
  n.rows = p.value.rows();
  n.cols = p.value.cols();
  n.param = &p;
  const Expr e = push(std::move(n));
  param_ids_[&p] = e.id;
  return e;
}

Expr Graph::row(Parameter& table, std::size_t index) {
  require(index < table.value.rows(), "embedding index out of range for " + table.name);
  const std::size_t cols = table.value.cols();
  Node n;
  n.rows = cols;
  n.cols = 1;
  n.value.assign(table.value.data().begin() + static_cast<std::ptrdiff_t>(index * cols),
                 table.value.data().begin() + static_cast<std::ptrdiff_t>((index + 1) * cols));
  n.param = &table;
  n.param_row = index;
  n.is_row = true;
  return push(std::move(n));
}

Expr Graph::node(std::vector<double> value, std::size_t rows, std::size_t cols, Backward backward) {
  require(value.size() == rows * cols, "node size must equal rows * cols");
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  n.backward = std::move(backward);
  return push(std::move(n));
}

std::span<const double> Graph::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.param && !n.is_row) return n.param->value.data();
  return n.value;
}

std::span<double> Graph::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.param && !n.is_row) return n.param->grad.data();
  return n.grad;
}

void Graph::backward(Expr loss) {
  require(loss.graph == this, "loss belongs to another graph");
  require(value(loss.id).size() == 1, "backward() needs a scalar loss");
  for (auto& n : nodes_) {
    if (!(n.param && !n.is_row)) n.grad.assign(n.value.size(), 0.0);
  }
  grad(loss.id)[0] += 1.0;
  visited_.clear();
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    visited_.push_back(id);
    if (n.is_row) {
      auto* dst = n.param->grad.data().data() + n.param_row * n.value.size();
      for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += n.grad[i];
    } else if (n.backward) {
      n.backward(*this, id);
    }
  }
}

}  // namespace tessera::nn
