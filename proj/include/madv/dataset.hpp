#pragma once

#include <cstddef>
#include <vector>

#include "madv/tensor.hpp"

namespace madv {

struct Example {
  Tensor input;
  std::size_t label = 0;
};

struct Dataset {
  std::vector<Example> train;
  std::vector<Example> test;
  std::size_t classes = 0;
};

}  // namespace madv
