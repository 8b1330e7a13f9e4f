#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "ckm/error.hpp"

namespace ckm {

using FlowCost = std::int64_t;
using FlowUnits = std::int64_t;

struct FlowArc {
  std::size_t from = 0;
  std::size_t to = 0;
  FlowUnits lower = 0;
  FlowUnits capacity = 0;
  FlowCost cost = 0;
};

// Directed network with lower/upper bounds and integer (fixed-point) costs.
// A solve asks for a flow of exactly `required_value` units from source to
// sink that satisfies every bound.
struct FlowNetwork {
  std::size_t nodes = 0;
  std::vector<FlowArc> arcs;
  std::size_t source = 0;
  std::size_t sink = 0;
  FlowUnits required_value = 0;

  std::size_t add_node() { return nodes++; }
  std::size_t add_arc(std::size_t from, std::size_t to, FlowUnits lower, FlowUnits capacity, FlowCost cost) {
    arcs.push_back({from, to, lower, capacity, cost});
    return arcs.size() - 1;
  }

  void validate() const {
    if (source >= nodes || sink >= nodes) throw InvalidArgument("flow: source/sink out of range");
    if (required_value < 0) throw InvalidArgument("flow: negative required value");
    for (const auto& a : arcs) {
      if (a.from >= nodes || a.to >= nodes) throw InvalidArgument("flow: arc endpoint out of range");
      if (a.lower < 0 || a.lower > a.capacity) throw InvalidArgument("flow: need 0 <= lower <= capacity");
      if (a.cost < 0) throw InvalidArgument("flow: arc costs must be non-negative");
    }
  }
};

struct FlowResult {
  bool feasible = false;
  std::vector<FlowUnits> flow;
  FlowCost total_cost = 0;
};

// Min-cost flow by successive shortest paths with Dijkstra on reduced costs.
// Lower bounds are removed by the usual excess transformation: the forced
// units become supplies/demands served from a super source / super sink.
// Infeasibility is reported through FlowResult::feasible.
inline FlowResult solve_min_cost_flow(const FlowNetwork& net) {
  net.validate();

  struct Edge {
    std::size_t to;
    FlowUnits cap;
    FlowCost cost;
  };
  const std::size_t n = net.nodes + 2;
  const std::size_t super_source = net.nodes;
  const std::size_t super_sink = net.nodes + 1;
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> adj(n);
  auto add_edge = [&](std::size_t u, std::size_t v, FlowUnits cap, FlowCost cost) {
    adj[u].push_back(edges.size());
    edges.push_back({v, cap, cost});
    adj[v].push_back(edges.size());
    edges.push_back({u, 0, -cost});
    return edges.size() - 2;
  };

  std::vector<FlowUnits> excess(net.nodes, 0);
  FlowCost base_cost = 0;
  std::vector<std::size_t> arc_edge(net.arcs.size());
  for (std::size_t i = 0; i < net.arcs.size(); ++i) {
    const auto& a = net.arcs[i];
    arc_edge[i] = add_edge(a.from, a.to, a.capacity - a.lower, a.cost);
    excess[a.to] += a.lower;
    excess[a.from] -= a.lower;
    base_cost += a.lower * a.cost;
  }
  excess[net.source] += net.required_value;
  excess[net.sink] -= net.required_value;

  FlowUnits need = 0;
  for (std::size_t v = 0; v < net.nodes; ++v) {
    if (excess[v] > 0) {
      add_edge(super_source, v, excess[v], 0);
      need += excess[v];
    } else if (excess[v] < 0) {
      add_edge(v, super_sink, -excess[v], 0);
    }
  }

  constexpr FlowCost kInf = std::numeric_limits<FlowCost>::max() / 4;
  std::vector<FlowCost> potential(n, 0);
  std::vector<FlowCost> dist(n);
  std::vector<std::size_t> via(n);
  FlowUnits sent = 0;
  FlowCost path_cost = 0;

  using Item = std::pair<FlowCost, std::size_t>;
  while (sent < need) {
    std::fill(dist.begin(), dist.end(), kInf);
    dist[super_source] = 0;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    heap.push({0, super_source});
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (d != dist[u]) continue;
      for (std::size_t e : adj[u]) {
        const Edge& ed = edges[e];
        if (ed.cap <= 0) continue;
        const FlowCost nd = d + ed.cost + potential[u] - potential[ed.to];
        if (nd < dist[ed.to]) {
          dist[ed.to] = nd;
          via[ed.to] = e;
          heap.push({nd, ed.to});
        }
      }
    }
    if (dist[super_sink] == kInf) break;
    for (std::size_t v = 0; v < n; ++v)
      if (dist[v] < kInf) potential[v] += dist[v];

    FlowUnits push = need - sent;
    for (std::size_t v = super_sink; v != super_source; v = edges[via[v] ^ 1].to) push = std::min(push, edges[via[v]].cap);
    for (std::size_t v = super_sink; v != super_source; v = edges[via[v] ^ 1].to) {
      edges[via[v]].cap -= push;
      edges[via[v] ^ 1].cap += push;
      path_cost += push * edges[via[v]].cost;
    }
    sent += push;
  }

  FlowResult out;
  if (sent < need) return out;
  out.feasible = true;
  out.flow.resize(net.arcs.size());
  for (std::size_t i = 0; i < net.arcs.size(); ++i) out.flow[i] = net.arcs[i].lower + edges[arc_edge[i] ^ 1].cap;
  out.total_cost = base_cost + path_cost;
  return out;
}

// Quantizes non-negative costs to integers: round(cost * 2^bits / max_cost),
// so the largest cost maps to 2^bits. All-zero input maps to all zeros.
inline std::vector<FlowCost> to_fixed_point(std::span<const double> costs, int precision_bits = 32) {
  if (precision_bits < 0 || precision_bits > 52) throw InvalidArgument("to_fixed_point: precision must be in [0, 52]");
  double max_cost = 0.0;
  for (double c : costs) {
    if (!std::isfinite(c) || c < 0.0) throw InvalidArgument("to_fixed_point: costs must be finite and non-negative");
    max_cost = std::max(max_cost, c);
  }
  std::vector<FlowCost> out(costs.size(), 0);
  if (max_cost == 0.0) return out;
  const double scale = std::ldexp(1.0, precision_bits) / max_cost;
  for (std::size_t i = 0; i < costs.size(); ++i) out[i] = static_cast<FlowCost>(std::llround(costs[i] * scale));
  return out;
}

}  // namespace ckm
