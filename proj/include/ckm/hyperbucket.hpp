#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/stream.hpp"

namespace ckm {

// Bucket index meaning "distance contracted to zero".
inline constexpr std::int32_t kZeroBucket = std::numeric_limits<std::int32_t>::min();

// Geometric bucket of a squared distance: the unique i with
// (1+eps)^i <= sqdist < (1+eps)^(i+1). Zero maps to kZeroBucket.
inline std::int32_t bucket_index(double sqdist, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("bucket_index: epsilon must be positive");
  if (!(sqdist >= 0.0) || !std::isfinite(sqdist)) throw InvalidArgument("bucket_index: bad squared distance");
  if (sqdist == 0.0) return kZeroBucket;
  const double base = 1.0 + epsilon;
  auto i = static_cast<std::int32_t>(std::floor(std::log(sqdist) / std::log1p(epsilon)));
  // log rounding can be off by one at the boundaries.
  while (std::pow(base, i) > sqdist) --i;
  while (std::pow(base, i + 1) <= sqdist) ++i;
  return i;
}

inline double bucket_weight(std::int32_t index, double epsilon) {
  if (index == kZeroBucket) return 0.0;
  return std::pow(1.0 + epsilon, index);
}

// Left-vertex identity: one bucket per center, an optional target label
// (semi-supervised costs depend on it), and the set of centers the point
// may use (all of them unless aspect-ratio removal restricts it).
struct BucketKey {
  std::vector<std::int32_t> buckets;
  std::int64_t label = -1;
  std::uint64_t allowed_mask = ~std::uint64_t{0};

  bool allows(std::size_t center) const { return (allowed_mask >> center) & 1U; }
  friend bool operator==(const BucketKey&, const BucketKey&) = default;
};

struct BucketKeyHash {
  std::size_t operator()(const BucketKey& k) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 0x100000001b3ULL;
    };
    for (std::int32_t b : k.buckets) mix(static_cast<std::uint32_t>(b));
    mix(static_cast<std::uint64_t>(k.label));
    mix(k.allowed_mask);
    return static_cast<std::size_t>(h);
  }
};

// Aspect-ratio removal for a guessed scale u (a distance): distances below
// u / n^2 are contracted to zero, and a point may only use centers within
// 4u of it plus its nearest center.
struct AspectGuess {
  double u = 0.0;
  std::size_t n = 0;
};

struct BucketingOptions {
  double epsilon = 0.5;
  bool use_labels = false;
  std::optional<AspectGuess> aspect;
};

inline BucketKey make_bucket_key(const Point& p, const CenterSet& c, const BucketingOptions& opt,
                                 std::optional<std::int64_t> label = std::nullopt) {
  if (c.empty()) throw EmptyInput("bucket key: empty center set");
  if (c.size() > 64) throw InvalidArgument("bucket key: at most 64 centers are supported");
  BucketKey key;
  key.buckets.resize(c.size());
  std::vector<double> sq(c.size());
  std::size_t nearest = 0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    sq[j] = squared_dist(p, c[j]);
    if (sq[j] < sq[nearest]) nearest = j;
  }
  if (opt.aspect) {
    const double u = opt.aspect->u;
    if (!(u > 0.0)) throw InvalidArgument("aspect removal: u must be positive");
    const double nn = static_cast<double>(std::max<std::size_t>(opt.aspect->n, 1));
    const double contract = (u / (nn * nn)) * (u / (nn * nn));
    const double reach = 16.0 * u * u;
    key.allowed_mask = 0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      key.buckets[j] = sq[j] < contract ? kZeroBucket : bucket_index(sq[j], opt.epsilon);
      if (sq[j] <= reach || j == nearest) key.allowed_mask |= std::uint64_t{1} << j;
    }
  } else {
    for (std::size_t j = 0; j < c.size(); ++j) key.buckets[j] = bucket_index(sq[j], opt.epsilon);
  }
  if (opt.use_labels) {
    if (!label) throw InvalidArgument("bucket key: label required");
    key.label = *label;
  }
  return key;
}

inline BucketKey aspect_removal_keys(const Point& p, const CenterSet& c, double u, double epsilon, std::size_t n) {
  BucketingOptions opt;
  opt.epsilon = epsilon;
  opt.aspect = AspectGuess{u, n};
  return make_bucket_key(p, c, opt);
}

// Compressed bipartite representation of (X, C): left vertices are the
// non-empty hyperbuckets with their multiplicities, right vertices are the
// centers, and edge (v, c_j) carries the representative squared distance.
class CompressedGraph {
 public:
  struct Vertex {
    BucketKey key;
    std::uint64_t multiplicity = 0;
    std::vector<double> weights;
  };

  CompressedGraph() = default;
  CompressedGraph(CenterSet centers, BucketingOptions options)
      : centers_(std::move(centers)), options_(options) {
    if (centers_.empty()) throw EmptyInput("compressed graph: empty center set");
  }

  const CenterSet& centers() const noexcept { return centers_; }
  const BucketingOptions& options() const noexcept { return options_; }
  std::size_t num_centers() const noexcept { return centers_.size(); }
  const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
  std::uint64_t total_points() const noexcept { return total_; }

  // phi(p): the left vertex the point maps to, if present.
  std::optional<std::size_t> find(const BucketKey& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  BucketKey key_of(const Point& p, std::optional<std::int64_t> label = std::nullopt) const {
    return make_bucket_key(p, centers_, options_, label);
  }

  std::size_t add(const Point& p, std::optional<std::int64_t> label = std::nullopt) {
    return add_key(key_of(p, label), 1);
  }

  std::size_t add_key(BucketKey key, std::uint64_t count) {
    total_ += count;
    auto it = index_.find(key);
    if (it != index_.end()) {
      vertices_[it->second].multiplicity += count;
      return it->second;
    }
    Vertex v;
    v.weights.resize(key.buckets.size());
    for (std::size_t j = 0; j < key.buckets.size(); ++j) v.weights[j] = bucket_weight(key.buckets[j], options_.epsilon);
    v.key = key;
    v.multiplicity = count;
    index_.emplace(std::move(key), vertices_.size());
    vertices_.push_back(std::move(v));
    return vertices_.size() - 1;
  }

 private:
  CenterSet centers_;
  BucketingOptions options_;
  std::vector<Vertex> vertices_;
  std::unordered_map<BucketKey, std::size_t, BucketKeyHash> index_;
  std::uint64_t total_ = 0;
};

// One pass over the stream; vertices appear in first-seen order. Each left
// vertex is charged to the meter as one point.
inline CompressedGraph build_compressed(StreamSource& src, const CenterSet& c, const BucketingOptions& opt,
                                        SpaceMeter* meter = nullptr) {
  CompressedGraph g(c, opt);
  MeterLease lease(meter, 0);
  for_each_record(src, [&](const StreamRecord& r) {
    g.add(r.point, opt.use_labels ? r.target : std::nullopt);
    if (g.vertices().size() != lease.points()) lease.resize(g.vertices().size());
  });
  return g;
}

inline CompressedGraph build_compressed(std::span<const Point> x, const CenterSet& c, const BucketingOptions& opt,
                                        std::span<const std::int64_t> labels = {}) {
  CompressedGraph g(c, opt);
  for (std::size_t i = 0; i < x.size(); ++i)
    g.add(x[i], opt.use_labels ? std::optional<std::int64_t>(labels[i]) : std::nullopt);
  return g;
}

struct HyperbucketCensus {
  std::size_t interesting = 0;
  std::size_t non_interesting = 0;
};

// Splits the non-empty hyperbuckets into interesting (every coordinate's
// range meets some [eps^2 |c-c'|^2, |c-c'|^2 / eps^2] window) and the rest.
inline HyperbucketCensus hyperbucket_census(const CompressedGraph& g) {
  const auto& c = g.centers();
  const double eps = g.options().epsilon;
  auto interesting = [&](std::size_t j, std::int32_t idx) {
    if (idx == kZeroBucket) return false;
    const double lo = bucket_weight(idx, eps);
    const double hi = lo * (1.0 + eps);
    for (std::size_t o = 0; o < c.size(); ++o) {
      if (o == j) continue;
      const double d2 = squared_dist(c[j], c[o]);
      const double wlo = eps * eps * d2;
      const double whi = d2 / (eps * eps);
      if (lo <= whi && hi > wlo) return true;
    }
    return false;
  };
  HyperbucketCensus out;
  for (const auto& v : g.vertices()) {
    bool all = true;
    for (std::size_t j = 0; j < v.key.buckets.size() && all; ++j) all = interesting(j, v.key.buckets[j]);
    (all ? out.interesting : out.non_interesting) += 1;
  }
  return out;
}

// Scale guesses for aspect-ratio removal: every pairwise center distance u
// (raised to d* when d* is larger) plus d* itself, deduplicated and sorted.
inline std::vector<double> aspect_guesses(const CenterSet& c, double d_star) {
  std::vector<double> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) out.push_back(std::max(std::sqrt(squared_dist(c[i], c[j])), d_star));
  out.push_back(d_star);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove_if(out.begin(), out.end(), [](double u) { return !(u > 0.0); }), out.end());
  return out;
}

}  // namespace ckm
