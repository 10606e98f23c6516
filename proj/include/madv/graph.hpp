#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "madv/tensor.hpp"

namespace madv {

/// Define-by-run tape. Operations append a node when at least one operand is
/// tracked; backprop() walks the nodes in reverse. A Graph is single-use:
/// build it, call backprop once, drop it.
class Graph {
 public:
  /// Receives the gradient of the loss w.r.t. the node's output and must add
  /// the operand contributions into their grad buffers.
  using BackwardFn = std::function<void(std::span<const double> out_grad)>;

  Graph() = default;
  /// A non-recording graph evaluates ops without taping anything, so outputs
  /// stay untracked even when parameters require grad.
  static Graph no_record() {
    Graph g;
    g.recording_ = false;
    return g;
  }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  /// Appends a node producing `output`. Marks `output` as tracked.
  void record(std::string op, std::vector<Tensor> inputs, Tensor& output, BackwardFn backward);

  std::size_t size() const { return nodes_.size(); }
  const std::string& op_name(std::size_t node) const { return nodes_.at(node).op; }
  /// Every operand of node k is a leaf or the output of a node with index < k.
  bool is_topological() const;
  /// Number of nodes whose backward rule ran in the last backprop.
  std::size_t visits() const { return visits_; }
  bool consumed() const { return consumed_; }
  bool recording() const { return recording_; }

 private:
  friend void backprop(Graph& graph, const Tensor& loss);

  struct Node {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
  bool consumed_ = false;
  bool recording_ = true;
};

/// Populates grad buffers of every tracked tensor that `loss` depends on.
/// Contributions add into existing buffers, so parameters must be reset
/// explicitly between optimizer steps.
void backprop(Graph& graph, const Tensor& loss);

}  // namespace madv
