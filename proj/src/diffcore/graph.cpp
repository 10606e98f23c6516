#include "madv/graph.hpp"

#include <stdexcept>
#include <unordered_set>

namespace madv {

void Graph::record(std::string op, std::vector<Tensor> inputs, Tensor& output, BackwardFn backward) {
  if (consumed_) throw std::logic_error("cannot record '" + op + "' on a graph that was already back-propagated");
  output.impl()->tracked = true;
  nodes_.push_back(Node{std::move(op), std::move(inputs), output, std::move(backward)});
}

bool Graph::is_topological() const {
  std::unordered_set<const detail::TensorImpl*> produced;
  std::unordered_set<const detail::TensorImpl*> outputs;
  for (const auto& node : nodes_) outputs.insert(node.output.impl().get());
  for (const auto& node : nodes_) {
    for (const auto& in : node.inputs) {
      const auto* key = in.impl().get();
      if (outputs.count(key) && !produced.count(key)) return false;
    }
    produced.insert(node.output.impl().get());
  }
  return true;
}

void backprop(Graph& graph, const Tensor& loss) {
  if (loss.size() != 1) throw std::invalid_argument("backprop needs a scalar loss, got shape " + shape_str(loss.shape()));
  if (graph.consumed_) throw std::logic_error("graph was already back-propagated");
  if (!loss.tracked()) throw std::invalid_argument("loss does not depend on any tensor that requires grad");

  std::size_t end = graph.nodes_.size();
  while (end > 0 && !graph.nodes_[end - 1].output.same_storage(loss)) --end;
  if (end == 0) throw std::invalid_argument("loss was not produced by this graph");

  graph.consumed_ = true;
  graph.visits_ = 0;
  Tensor seed = loss;
  seed.grad_mut()[0] += 1.0;
  for (std::size_t k = end; k-- > 0;) {
    auto& node = graph.nodes_[k];
    ++graph.visits_;
    if (!node.output.has_grad()) continue;  // not on a path to the loss
    node.backward(node.output.grad());
  }
}

}  // namespace madv
