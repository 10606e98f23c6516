#pragma once

#include <vector>

#include "madv/attack.hpp"
#include "madv/optim.hpp"

namespace madv::attack::detail {

/// Generator-side GAN term for one fake sample.
Tensor generator_term(Graph& g, const Tensor& d_fake, GeneratorLoss kind);

/// One discriminator update on m reference/fake pairs with G held fixed.
/// Returns -mean(log D(v) + log(1 - D(G(z)))).
double discriminator_step(const nets::Network& generator, nets::Network& discriminator, AdamState& adam,
                          const std::vector<Tensor>& references, std::size_t m, Rng& rng);

void check_references(const std::vector<Tensor>& references, const Shape& expected);

}  // namespace madv::attack::detail
