#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/flow.hpp"
#include "ckm/geometry.hpp"
#include "ckm/hyperbucket.hpp"

namespace ckm {

class Infeasible : public Error {
 public:
  using Error::Error;
};

namespace variant {
struct Classical {};
// Every center receives at least r points.
struct RGather {
  std::size_t r = 1;
};
// Every center receives at most r points.
struct RCapacity {
  std::size_t r = 1;
};
// No center owns two points of the same color.
struct Chromatic {};
// Every point is served by its l nearest admissible centers.
struct FaultTolerant {
  std::size_t l = 1;
};
// alpha * sum of squared distances + (1 - alpha) * disagreement with the
// dataset's target labels, minimized over center-to-target matchings.
struct SemiSupervised {
  double alpha = 1.0;
};
}  // namespace variant

using Variant = std::variant<variant::Classical, variant::RGather, variant::RCapacity, variant::Chromatic,
                             variant::FaultTolerant, variant::SemiSupervised>;

inline std::string variant_name(const Variant& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, variant::Classical>) return "classical";
        if constexpr (std::is_same_v<T, variant::RGather>) return "r_gather";
        if constexpr (std::is_same_v<T, variant::RCapacity>) return "r_capacity";
        if constexpr (std::is_same_v<T, variant::Chromatic>) return "chromatic";
        if constexpr (std::is_same_v<T, variant::FaultTolerant>) return "fault_tolerant";
        if constexpr (std::is_same_v<T, variant::SemiSupervised>) return "semi_supervised";
      },
      v);
}

inline void validate_variant(const Variant& v, std::size_t k) {
  if (const auto* g = std::get_if<variant::RGather>(&v); g && g->r < 1) throw InvalidArgument("r_gather: r must be >= 1");
  if (const auto* c = std::get_if<variant::RCapacity>(&v); c && c->r < 1)
    throw InvalidArgument("r_capacity: r must be >= 1");
  if (const auto* f = std::get_if<variant::FaultTolerant>(&v); f && (f->l < 1 || f->l > k))
    throw InvalidArgument("fault_tolerant: need 1 <= l <= k");
  if (const auto* s = std::get_if<variant::SemiSupervised>(&v); s && !(s->alpha >= 0.0 && s->alpha <= 1.0))
    throw InvalidArgument("semi_supervised: alpha must lie in [0, 1]");
}

inline constexpr int kDefaultPrecisionBits = 32;

// Shared fixed-point scale: the largest cost maps to 2^bits.
struct FixedPointScale {
  double scale = 0.0;

  static FixedPointScale for_max(double max_cost, int bits = kDefaultPrecisionBits) {
    return {max_cost > 0.0 ? std::ldexp(1.0, bits) / max_cost : 0.0};
  }
  FlowCost operator()(double cost) const { return static_cast<FlowCost>(std::llround(cost * scale)); }
};

// Edge cost of a point with squared distance `sqdist` to center i under the
// center-to-target matching `perm` (center i stands for target perm[i]).
inline double semi_supervised_cost_terms(double sqdist, std::size_t center, std::int64_t target,
                                         std::span<const std::size_t> perm, double alpha) {
  const bool agrees = target >= 0 && static_cast<std::size_t>(target) == perm[center];
  return agrees ? alpha * sqdist : alpha * sqdist + (1.0 - alpha);
}

// A left-side vertex of the assignment graph: a single point (exact graph)
// or a hyperbucket (compressed graph).
struct LeftItem {
  std::uint64_t multiplicity = 1;
  std::int64_t color = -1;
  std::int64_t label = -1;
  std::uint64_t allowed_mask = ~std::uint64_t{0};
  std::vector<double> costs;  // squared distance (or its representative) per center

  bool allows(std::size_t j) const { return (allowed_mask >> j) & 1U; }
};

struct ItemSolution {
  bool feasible = false;
  // Objective with real costs, and the fixed-point objective the flow optimized.
  double cost = std::numeric_limits<double>::infinity();
  FlowCost fixed_cost = std::numeric_limits<FlowCost>::max();
  // flows[item][center]: units of the item sent to the center.
  std::vector<std::vector<FlowUnits>> flows;
  std::optional<std::vector<std::size_t>> perm;
};

namespace detail {

inline double item_cost(const LeftItem& it, std::size_t j, const Variant& v, std::span<const std::size_t> perm) {
  if (const auto* s = std::get_if<variant::SemiSupervised>(&v))
    return semi_supervised_cost_terms(it.costs[j], j, it.label, perm, s->alpha);
  return it.costs[j];
}

inline std::vector<std::vector<std::size_t>> all_permutations(std::size_t k) {
  std::vector<std::size_t> p(k);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Largest real edge cost over every (item, center) pair and, for
// semi-supervised, every matching.
inline double max_edge_cost(std::span<const LeftItem> items, std::size_t k, const Variant& v) {
  double mx = 0.0;
  if (std::holds_alternative<variant::SemiSupervised>(v)) {
    for (const auto& perm : all_permutations(k))
      for (const auto& it : items)
        for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, item_cost(it, j, v, perm));
  } else {
    for (const auto& it : items)
      for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, it.costs[j]);
  }
  return mx;
}

struct SubsetFlow {
  bool feasible = false;
  FlowCost fixed_cost = 0;
  std::vector<std::vector<FlowUnits>> flows;
};

// Source -> item (multiplicity) -> admissible center -> sink, with the sink
// arcs shaped by the variant.
inline SubsetFlow solve_subset(std::span<const LeftItem> items, std::span<const std::size_t> members, std::size_t k,
                               const Variant& v, std::span<const std::size_t> perm, const FixedPointScale& q) {
  FlowNetwork net;
  net.source = net.add_node();
  net.sink = net.add_node();
  std::vector<std::size_t> center_node(k);
  for (auto& c : center_node) c = net.add_node();
  FlowUnits total = 0;
  for (std::size_t m : members) total += static_cast<FlowUnits>(items[m].multiplicity);
  net.required_value = total;

  std::vector<std::vector<std::size_t>> arc_of(members.size(), std::vector<std::size_t>(k, SIZE_MAX));
  for (std::size_t a = 0; a < members.size(); ++a) {
    const LeftItem& it = items[members[a]];
    const auto mult = static_cast<FlowUnits>(it.multiplicity);
    const std::size_t node = net.add_node();
    net.add_arc(net.source, node, 0, mult, 0);
    for (std::size_t j = 0; j < k; ++j) {
      if (!it.allows(j)) continue;
      arc_of[a][j] = net.add_arc(node, center_node[j], 0, mult, q(item_cost(it, j, v, perm)));
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    FlowUnits lower = 0, cap = total;
    if (const auto* g = std::get_if<variant::RGather>(&v)) lower = static_cast<FlowUnits>(g->r);
    if (const auto* c = std::get_if<variant::RCapacity>(&v)) cap = static_cast<FlowUnits>(c->r);
    if (std::holds_alternative<variant::Chromatic>(v) || std::holds_alternative<variant::FaultTolerant>(v)) cap = 1;
    if (lower > cap) return {};
    net.add_arc(center_node[j], net.sink, lower, cap, 0);
  }

  const FlowResult res = solve_min_cost_flow(net);
  SubsetFlow out;
  if (!res.feasible) return out;
  out.feasible = true;
  out.fixed_cost = res.total_cost;
  out.flows.assign(members.size(), std::vector<FlowUnits>(k, 0));
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t j = 0; j < k; ++j)
      if (arc_of[a][j] != SIZE_MAX) out.flows[a][j] = res.flow[arc_of[a][j]];
  return out;
}

inline double realized_cost(std::span<const LeftItem> items, const std::vector<std::vector<FlowUnits>>& flows,
                            std::size_t k, const Variant& v, std::span<const std::size_t> perm) {
  double total = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (flows[i][j] > 0) total += static_cast<double>(flows[i][j]) * item_cost(items[i], j, v, perm);
  return total;
}

}  // namespace detail

// Optimal constrained assignment of weighted left items to k centers. This
// is the common core of the exact and the compressed partition algorithms.
// Costs are quantized with one scale for the whole instance so that the
// flow objective is exact integer arithmetic.
inline ItemSolution solve_items(std::span<const LeftItem> items, std::size_t k, const Variant& v,
                                int precision_bits = kDefaultPrecisionBits) {
  validate_variant(v, k);
  for (const auto& it : items)
    if (it.costs.size() != k) throw DimensionMismatch("partition: cost row size differs from k");
  const FixedPointScale q = FixedPointScale::for_max(detail::max_edge_cost(items, k, v), precision_bits);
  std::vector<std::size_t> identity(k);
  std::iota(identity.begin(), identity.end(), 0);

  ItemSolution out;
  if (std::holds_alternative<variant::Classical>(v)) {
    // Unconstrained: nearest admissible center, ties to the lowest index.
    out.flows.assign(items.size(), std::vector<FlowUnits>(k, 0));
    out.fixed_cost = 0;
    out.cost = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      std::size_t best = SIZE_MAX;
      for (std::size_t j = 0; j < k; ++j)
        if (items[i].allows(j) && (best == SIZE_MAX || items[i].costs[j] < items[i].costs[best])) best = j;
      if (best == SIZE_MAX) return ItemSolution{};
      const auto m = static_cast<FlowUnits>(items[i].multiplicity);
      out.flows[i][best] = m;
      out.fixed_cost += m * q(items[i].costs[best]);
      out.cost += static_cast<double>(m) * items[i].costs[best];
    }
    out.feasible = true;
    return out;
  }

  if (std::holds_alternative<variant::Chromatic>(v) || std::holds_alternative<variant::FaultTolerant>(v)) {
    // Colors are independent; solve them one after another in color order.
    std::map<std::int64_t, std::vector<std::size_t>> by_color;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].color < 0) throw InvalidArgument("chromatic: every point needs a color");
      by_color[items[i].color].push_back(i);
    }
    out.flows.assign(items.size(), std::vector<FlowUnits>(k, 0));
    out.fixed_cost = 0;
    for (const auto& [color, members] : by_color) {
      const auto sub = detail::solve_subset(items, members, k, v, identity, q);
      if (!sub.feasible) return ItemSolution{};
      out.fixed_cost += sub.fixed_cost;
      for (std::size_t a = 0; a < members.size(); ++a) out.flows[members[a]] = sub.flows[a];
    }
    out.feasible = true;
    out.cost = detail::realized_cost(items, out.flows, k, v, identity);
    return out;
  }

  std::vector<std::size_t> all(items.size());
  std::iota(all.begin(), all.end(), 0);

  if (std::holds_alternative<variant::SemiSupervised>(v)) {
    for (const auto& it : items)
      if (it.label < 0) throw InvalidArgument("semi_supervised: every point needs a target label");
    for (const auto& perm : detail::all_permutations(k)) {
      // Without capacities the per-item minimum is a lower bound on the
      // flow; skip matchings that cannot beat the running best.
      FlowCost bound = 0;
      for (const auto& it : items) {
        FlowCost best = std::numeric_limits<FlowCost>::max();
        for (std::size_t j = 0; j < k; ++j)
          if (it.allows(j)) best = std::min(best, q(detail::item_cost(it, j, v, perm)));
        bound += static_cast<FlowCost>(it.multiplicity) * best;
      }
      if (out.feasible && bound >= out.fixed_cost) continue;
      const auto sub = detail::solve_subset(items, all, k, v, perm, q);
      if (!sub.feasible) continue;
      if (!out.feasible || sub.fixed_cost < out.fixed_cost) {
        out.feasible = true;
        out.fixed_cost = sub.fixed_cost;
        out.flows = sub.flows;
        out.perm = perm;
      }
    }
    if (out.feasible) out.cost = detail::realized_cost(items, out.flows, k, v, *out.perm);
    return out;
  }

  // r-gather / r-capacity
  const auto sub = detail::solve_subset(items, all, k, v, identity, q);
  if (!sub.feasible) return ItemSolution{};
  out.feasible = true;
  out.fixed_cost = sub.fixed_cost;
  out.flows = sub.flows;
  out.cost = detail::realized_cost(items, out.flows, k, v, identity);
  return out;
}

// Replicates each point l times; the replicas of point i are contiguous and
// share color i.
inline Dataset fault_tolerant_reduce(const Dataset& x, std::size_t l, std::size_t k) {
  if (l < 1) throw InvalidArgument("fault_tolerant_reduce: l must be >= 1");
  if (l > k) throw InvalidArgument("fault_tolerant_reduce: l must not exceed k");
  Dataset out;
  out.points.reserve(x.size() * l);
  out.colors.emplace();
  out.colors->reserve(x.size() * l);
  if (x.targets) out.targets.emplace();
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t r = 0; r < l; ++r) {
      out.points.push_back(x.points[i]);
      out.colors->push_back(static_cast<std::int64_t>(i));
      if (x.targets) out.targets->push_back((*x.targets)[i]);
    }
  }
  return out;
}

inline std::vector<LeftItem> items_from_points(const Dataset& x, const CenterSet& c) {
  x.validate();
  if (c.empty()) throw EmptyInput("partition: empty center set");
  if (!x.empty() && c[0].dim() != x.dim()) throw DimensionMismatch("partition: center/point dimension mismatch");
  std::vector<LeftItem> items(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    items[i].costs.resize(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) items[i].costs[j] = squared_dist(x.points[i], c[j]);
    if (x.colors) items[i].color = (*x.colors)[i];
    if (x.targets) items[i].label = (*x.targets)[i];
  }
  return items;
}

struct PartitionOutcome {
  bool feasible = false;
  double cost = std::numeric_limits<double>::infinity();
  FlowCost fixed_cost = std::numeric_limits<FlowCost>::max();
  Assignment assignment;
  std::optional<std::vector<std::size_t>> perm;
};

// Exact-graph partition algorithm: optimal feasible assignment of every
// point of `x` to the centers `c` under variant `v`.
inline PartitionOutcome partition_solve(const Dataset& x, const CenterSet& c, const Variant& v,
                                        int precision_bits = kDefaultPrecisionBits) {
  validate_variant(v, c.size());
  PartitionOutcome out;
  const std::size_t k = c.size();

  if (const auto* ft = std::get_if<variant::FaultTolerant>(&v)) {
    const Dataset reduced = fault_tolerant_reduce(x, ft->l, k);
    const auto items = items_from_points(reduced, c);
    const ItemSolution sol = solve_items(items, k, variant::Chromatic{}, precision_bits);
    if (!sol.feasible) return out;
    out.feasible = true;
    out.cost = sol.cost;
    out.fixed_cost = sol.fixed_cost;
    out.assignment.multiplicity = ft->l;
    out.assignment.owners_flat.reserve(reduced.size());
    // Replicas are contiguous, so replica r of point i sits at i*l + r.
    for (std::size_t r = 0; r < reduced.size(); ++r)
      for (std::size_t j = 0; j < k; ++j)
        if (sol.flows[r][j] > 0) out.assignment.owners_flat.push_back(j);
    out.assignment.cost = sol.cost;
    return out;
  }

  const auto items = items_from_points(x, c);
  const ItemSolution sol = solve_items(items, k, v, precision_bits);
  if (!sol.feasible) return out;
  out.feasible = true;
  out.cost = sol.cost;
  out.fixed_cost = sol.fixed_cost;
  out.perm = sol.perm;
  out.assignment.owners_flat.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (sol.flows[i][j] > 0) out.assignment.owners_flat[i] = j;
  out.assignment.cost = sol.cost;
  return out;
}

// Cost-only partition algorithm; +infinity when no feasible clustering exists.
inline double partition_cost(const Dataset& x, const CenterSet& c, const Variant& v) {
  return partition_solve(x, c, v).cost;
}

inline Assignment partition_assign(const Dataset& x, const CenterSet& c, const Variant& v) {
  auto out = partition_solve(x, c, v);
  if (!out.feasible) throw Infeasible("partition: constraints cannot be satisfied for " + variant_name(v));
  return std::move(out.assignment);
}

// Checks the variant's structural constraints on an assignment. Returns an
// empty string when it holds, otherwise a description of the violation.
inline std::string check_assignment(const Dataset& x, std::size_t k, const Variant& v, const Assignment& a) {
  const std::size_t expected_mult = std::holds_alternative<variant::FaultTolerant>(v)
                                        ? std::get<variant::FaultTolerant>(v).l
                                        : std::size_t{1};
  if (a.multiplicity != expected_mult) return "wrong multiplicity";
  if (a.num_points() != x.size() || a.owners_flat.size() != x.size() * a.multiplicity) return "wrong point count";
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto owners = a.owners(i);
    for (std::size_t q = 0; q < owners.size(); ++q) {
      if (owners[q] >= k) return "center index out of range";
      for (std::size_t p = 0; p < q; ++p)
        if (owners[p] == owners[q]) return "point owns a center twice";
      ++counts[owners[q]];
    }
  }
  if (const auto* g = std::get_if<variant::RGather>(&v))
    for (std::size_t j = 0; j < k; ++j)
      if (counts[j] < g->r) return "r-gather violated at center " + std::to_string(j);
  if (const auto* c = std::get_if<variant::RCapacity>(&v))
    for (std::size_t j = 0; j < k; ++j)
      if (counts[j] > c->r) return "r-capacity violated at center " + std::to_string(j);
  if (std::holds_alternative<variant::Chromatic>(v)) {
    if (!x.colors) return "chromatic assignment on uncolored data";
    std::map<std::pair<std::int64_t, std::size_t>, int> seen;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (++seen[{(*x.colors)[i], a.owner(i)}] > 1) return "two points of one color share a center";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Compressed-graph partition algorithms.

inline std::vector<LeftItem> items_from_graph(const CompressedGraph& g) {
  std::vector<LeftItem> items(g.vertices().size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& vtx = g.vertices()[i];
    items[i].multiplicity = vtx.multiplicity;
    items[i].label = vtx.key.label;
    items[i].allowed_mask = vtx.key.allowed_mask;
    items[i].costs = vtx.weights;
  }
  return items;
}

// The solved compressed graph plus its residual flow: what the assignment
// pass consumes. Each vertex's flow units are handed out one per point.
class CompressedPlan {
 public:
  CompressedPlan() = default;

  // Cost-only pass over a compressed graph. Chromatic data needs one graph
  // per color; see solve_by_color.
  static CompressedPlan solve(const CompressedGraph& g, const Variant& v, int precision_bits = kDefaultPrecisionBits) {
    CompressedPlan plan;
    plan.graphs_.push_back(g);
    plan.variant_ = v;
    const std::size_t k = g.num_centers();
    validate_variant(v, k);
    if (std::holds_alternative<variant::Chromatic>(v))
      throw InvalidArgument("compressed chromatic partition needs per-color graphs");
    const auto items = items_from_graph(g);
    if (const auto* ft = std::get_if<variant::FaultTolerant>(&v)) {
      // Each point is its own color class of l replicas; the best l centers
      // depend only on the hyperbucket, so one solve per vertex suffices.
      plan.fault_owners_.resize(items.size());
      plan.feasible_ = true;
      plan.fixed_cost_ = 0;
      plan.cost_ = 0.0;
      const FixedPointScale q = FixedPointScale::for_max(detail::max_edge_cost(items, k, v), precision_bits);
      for (std::size_t i = 0; i < items.size(); ++i) {
        LeftItem single = items[i];
        single.multiplicity = ft->l;
        single.color = 0;
        std::vector<std::size_t> identity(k);
        std::iota(identity.begin(), identity.end(), 0);
        const std::size_t only = 0;
        const auto sub = detail::solve_subset(std::span<const LeftItem>(&single, 1), std::span<const std::size_t>(&only, 1),
                                              k, v, identity, q);
        if (!sub.feasible) {
          plan.feasible_ = false;
          return plan;
        }
        const auto n_v = static_cast<FlowCost>(items[i].multiplicity);
        plan.fixed_cost_ += n_v * sub.fixed_cost;
        for (std::size_t j = 0; j < k; ++j)
          if (sub.flows[0][j] > 0) {
            plan.fault_owners_[i].push_back(j);
            plan.cost_ += static_cast<double>(n_v) * items[i].costs[j];
          }
      }
      plan.fault_l_ = ft->l;
      return plan;
    }
    const ItemSolution sol = solve_items(items, k, v, precision_bits);
    plan.feasible_ = sol.feasible;
    plan.cost_ = sol.cost;
    plan.fixed_cost_ = sol.fixed_cost;
    plan.perm_ = sol.perm;
    plan.remaining_.push_back(sol.flows);
    return plan;
  }

  // Chromatic data in sequential-chromatic order: one graph per color,
  // solved one color after another.
  static CompressedPlan solve_by_color(std::map<std::int64_t, CompressedGraph> graphs,
                                       int precision_bits = kDefaultPrecisionBits) {
    CompressedPlan plan;
    plan.variant_ = variant::Chromatic{};
    plan.feasible_ = true;
    plan.cost_ = 0.0;
    plan.fixed_cost_ = 0;
    if (graphs.empty()) return plan;
    const std::size_t k = graphs.begin()->second.num_centers();
    // One scale across colors keeps the fixed-point total meaningful.
    double mx = 0.0;
    for (const auto& [color, g] : graphs) {
      const auto items = items_from_graph(g);
      mx = std::max(mx, detail::max_edge_cost(items, k, variant::Chromatic{}));
    }
    const FixedPointScale q = FixedPointScale::for_max(mx, precision_bits);
    std::vector<std::size_t> identity(k);
    std::iota(identity.begin(), identity.end(), 0);
    for (auto& [color, g] : graphs) {
      const auto items = items_from_graph(g);
      std::vector<std::size_t> all(items.size());
      std::iota(all.begin(), all.end(), 0);
      const auto sub = detail::solve_subset(items, all, k, variant::Chromatic{}, identity, q);
      if (!sub.feasible) {
        plan.feasible_ = false;
        return plan;
      }
      plan.fixed_cost_ += sub.fixed_cost;
      plan.cost_ += detail::realized_cost(items, sub.flows, k, variant::Chromatic{}, identity);
      plan.color_slot_[color] = plan.graphs_.size();
      plan.graphs_.push_back(std::move(g));
      plan.remaining_.push_back(sub.flows);
    }
    return plan;
  }

  bool feasible() const noexcept { return feasible_; }
  // Objective on representative weights (the compressed cost-only answer).
  double cost() const noexcept { return cost_; }
  FlowCost fixed_cost() const noexcept { return fixed_cost_; }
  const std::optional<std::vector<std::size_t>>& perm() const noexcept { return perm_; }
  const Variant& variant_kind() const noexcept { return variant_; }
  std::size_t num_vertices() const {
    std::size_t s = 0;
    for (const auto& g : graphs_) s += g.vertices().size();
    return s;
  }

  // Assignment step for one streamed point: identify it with one of the
  // remaining copies at phi(p) and consume one unit of that copy's flow.
  std::vector<std::size_t> assign_next(const StreamRecord& rec) {
    if (!feasible_) throw Infeasible("compressed plan is infeasible");
    if (fault_l_ > 0) {
      const auto& g = graphs_.front();
      const auto v = g.find(g.key_of(rec.point, g.options().use_labels ? rec.target : std::nullopt));
      if (!v) throw InvalidArgument("assignment pass: point maps to no hyperbucket");
      return fault_owners_[*v];
    }
    std::size_t slot = 0;
    if (std::holds_alternative<variant::Chromatic>(variant_)) {
      if (!rec.color) throw InvalidArgument("assignment pass: chromatic point without color");
      auto it = color_slot_.find(*rec.color);
      if (it == color_slot_.end()) throw InvalidArgument("assignment pass: unseen color");
      slot = it->second;
    }
    const auto& g = graphs_[slot];
    const auto v = g.find(g.key_of(rec.point, g.options().use_labels ? rec.target : std::nullopt));
    if (!v) throw InvalidArgument("assignment pass: point maps to no hyperbucket");
    auto& row = remaining_[slot][*v];
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] > 0) {
        --row[j];
        return {j};
      }
    }
    throw InvalidArgument("assignment pass: hyperbucket has no flow left");
  }

  const CompressedGraph& graph(std::size_t slot = 0) const { return graphs_.at(slot); }

 private:
  std::vector<CompressedGraph> graphs_;
  std::map<std::int64_t, std::size_t> color_slot_;
  std::vector<std::vector<std::vector<FlowUnits>>> remaining_;
  std::vector<std::vector<std::size_t>> fault_owners_;
  std::size_t fault_l_ = 0;
  Variant variant_;
  bool feasible_ = false;
  double cost_ = std::numeric_limits<double>::infinity();
  FlowCost fixed_cost_ = std::numeric_limits<FlowCost>::max();
  std::optional<std::vector<std::size_t>> perm_;
};

// Assignment pass over a stream using a solved plan. The cost is priced
// with true distances (and, for semi-supervised, the matched disagreement).
inline Assignment assign_from_plan(StreamSource& src, CompressedPlan& plan) {
  Assignment a;
  bool first = true;
  const CenterSet& c = plan.graph().centers();
  const auto* semi = std::get_if<variant::SemiSupervised>(&plan.variant_kind());
  for_each_record(src, [&](const StreamRecord& rec) {
    const auto owners = plan.assign_next(rec);
    if (first) {
      a.multiplicity = owners.size();
      first = false;
    }
    for (std::size_t j : owners) {
      a.owners_flat.push_back(j);
      const double d = squared_dist(rec.point, c[j]);
      a.cost += semi ? semi_supervised_cost_terms(d, j, rec.target.value_or(-1), *plan.perm(), semi->alpha) : d;
    }
  });
  return a;
}

}  // namespace ckm
