#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tessera/nn/tensor.hpp"

namespace tessera::nn {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Expr {
  Graph* graph = nullptr;
  int id = -1;

  std::size_t size() const;
  std::size_t rows() const;
  std::size_t cols() const;
  std::span<const double> value() const;
  /// Value of a 1-element node.
  double scalar() const;
};

/// Records operations in creation order and runs reverse-mode
/// differentiation. Creation order is a topological order, so backward
/// simply walks the nodes from last to first.
///
/// Gradients of parameter nodes accumulate straight into Parameter::grad.
class Graph {
 public:
  using Backward = std::function<void(Graph&, int)>;

  explicit Graph(bool training = false, std::uint64_t seed = 0);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Constant input (receives no gradient outside the graph).
  Expr input(std::vector<double> values, std::size_t rows, std::size_t cols = 1);
  Expr input(std::vector<double> values);
  Expr zeros(std::size_t n);
  Expr constant(double value);

  /// The parameter as a node; one node per parameter per graph.
  Expr param(Parameter& p);

  /// Row `index` of a 2-D parameter (embedding lookup); gradient is sparse.
  Expr row(Parameter& table, std::size_t index);

  /// Adds a computed node. `backward(graph, self)` must accumulate the
  /// node's gradient into the gradients of its inputs.
  Expr node(std::vector<double> value, std::size_t rows, std::size_t cols, Backward backward);

  std::span<const double> value(int id) const;
  /// Gradient buffer of a node. Only valid during backward().
  std::span<double> grad(int id);
  std::size_t rows(int id) const { return nodes_[static_cast<std::size_t>(id)].rows; }
  std::size_t cols(int id) const { return nodes_[static_cast<std::size_t>(id)].cols; }
  std::size_t size() const { return nodes_.size(); }

  /// Backpropagates d(loss)/d(loss) = 1. `loss` must hold one value.
  void backward(Expr loss);

  /// Node ids in the order the last backward() visited them.
  const std::vector<int>& backward_order() const { return visited_; }

  bool training() const { return training_; }
  Rng& rng() { return rng_; }

 private:
  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    Parameter* param = nullptr;
    std::size_t param_row = 0;
    bool is_row = false;
    Backward backward;
  };

  Expr push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_ids_;
  std::vector<int> visited_;
  bool training_;
  Rng rng_;
};

}  // namespace tessera::nn
