#include <algorithm>
#include <stdexcept>

#include "madv/nets.hpp"
#include "madv/ops.hpp"

namespace madv::nets {

Network::Network(const Network& other) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back({p.name, p.tensor.clone()});
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    std::vector<NamedTensor> copy;
    copy.reserve(other.params_.size());
    for (const auto& p : other.params_) copy.push_back({p.name, p.tensor.clone()});
    params_ = std::move(copy);
  }
  return *this;
}

Tensor Network::infer(const Tensor& x) const {
  Graph g = Graph::no_record();
  return forward(g, x.detach());
}

std::vector<Tensor> Network::parameter_tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

void Network::set_trainable(bool on) {
  for (auto& p : params_) p.tensor.set_requires_grad(on);
}

bool Network::trainable() const {
  for (const auto& p : params_) {
    if (p.tensor.requires_grad()) return true;
  }
  return false;
}

void Network::load_parameters(const std::vector<NamedTensor>& values) {
  for (auto& p : params_) {
    const NamedTensor* match = nullptr;
    for (const auto& v : values) {
      if (v.name == p.name) {
        match = &v;
        break;
      }
    }
    if (!match) throw std::invalid_argument("missing parameter '" + p.name + "'");
    if (match->tensor.shape() != p.tensor.shape()) {
      throw std::invalid_argument("parameter '" + p.name + "' has shape " + shape_str(match->tensor.shape()) +
                                  ", expected " + shape_str(p.tensor.shape()));
    }
    auto dst = p.tensor.data();
    auto src = match->tensor.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

void Network::add_param(std::string name, Shape shape, double std, Rng& rng) {
  Tensor t(std::move(shape));
  if (std > 0.0) {
    std::normal_distribution<double> normal(0.0, std);
    for (auto& v : t.data()) v = normal(rng);
  }
  t.set_requires_grad(true);
  params_.push_back({std::move(name), std::move(t)});
}

}  // namespace madv::nets
