#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

namespace fms {

using Adjacency = std::vector<std::vector<std::size_t>>;

// Kosaraju with explicit stacks. Component ids are assigned in topological
// order of the condensation (sources first).
inline std::vector<std::size_t> strongly_connected_components(const Adjacency& adj,
                                                              std::size_t* num_components = nullptr) {
  const std::size_t n = adj.size();
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack = {{root, 0}};
    seen[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < adj[v].size()) {
        const std::size_t w = adj[v][next++];
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back({w, 0});
        }
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }

  Adjacency rev(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t w : adj[v]) rev[w].push_back(v);
  }
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> comp(n, kUnset);
  std::size_t count = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[*it] != kUnset) continue;
    std::vector<std::size_t> stack = {*it};
    comp[*it] = count;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : rev[v]) {
        if (comp[w] == kUnset) {
          comp[w] = count;
          stack.push_back(w);
        }
      }
    }
    ++count;
  }
  if (num_components) *num_components = count;
  return comp;
}

// Components with no arc leaving them, each as a sorted vertex list.
inline std::vector<std::vector<std::size_t>> terminal_components(const Adjacency& adj) {
  std::size_t count = 0;
  const auto comp = strongly_connected_components(adj, &count);
  std::vector<char> has_exit(count, 0);
  for (std::size_t v = 0; v < adj.size(); ++v) {
    for (std::size_t w : adj[v]) {
      if (comp[w] != comp[v]) has_exit[comp[v]] = 1;
    }
  }
  std::vector<std::vector<std::size_t>> members(count);
  for (std::size_t v = 0; v < adj.size(); ++v) members[comp[v]].push_back(v);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t c = 0; c < count; ++c) {
    if (!has_exit[c]) out.push_back(members[c]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fms
