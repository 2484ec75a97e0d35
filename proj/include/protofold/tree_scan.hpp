#pragma once

// Prefix and suffix scans over a rooted tree stored in topological order
// (parent[k] < k for every non-root node, parent of the root is -1).

#include <cstddef>
#include <vector>

namespace protofold {

/// out[k] = op(out[parent[k]], value[k]); the root keeps value[root].
/// Used for the product of joint rotations along the linkage.
template <typename T, typename Op>
std::vector<T> tree_prefix(const std::vector<int>& parent, const std::vector<T>& value, Op op) {
  std::vector<T> out(value.size());
  for (std::size_t k = 0; k < value.size(); ++k) {
    const int p = parent[k];
    out[k] = p < 0 ? value[k] : op(out[static_cast<std::size_t>(p)], value[k]);
  }
  return out;
}

/// out[k] = value[k] + sum of out over the children of k (subtree sums).
template <typename T>
std::vector<T> tree_suffix(const std::vector<int>& parent, std::vector<T> value) {
  for (std::size_t k = value.size(); k-- > 0;) {
    const int p = parent[k];
    if (p >= 0) value[static_cast<std::size_t>(p)] += value[k];
  }
  return value;
}

}  // namespace protofold
