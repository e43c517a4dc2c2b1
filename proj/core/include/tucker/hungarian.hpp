#pragma once

#include <vector>

#include "tucker/tensor.hpp"

namespace tucker {

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to each row. O(n^3).
std::vector<Index> hungarian_min_cost(const Matrix& cost);

}  // namespace tucker
