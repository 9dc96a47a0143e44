#pragma once

#include <cstddef>
#include <vector>

namespace feddag {

struct Sample {
  std::vector<double> x;
  std::size_t label = 0;
  std::size_t domain = 0;

  bool operator==(const Sample&) const = default;
};

struct DomainDataset {
  std::size_t domain = 0;
  std::vector<Sample> train;
  std::vector<Sample> val;

  bool operator==(const DomainDataset&) const = default;
};

}  // namespace feddag
