#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "ccepe/common.hpp"

namespace ccepe {

/// A single downward-closed set system over slots 0..n-1.
///
/// The feasible family is the downward closure of the maximal sets; it is never
/// stored except as a bitmask cache for explicit systems. Unconstrained and
/// cardinality systems are kept symbolic so large digital-goods and k-unit
/// instances stay cheap.
class SetSystemRealization {
 public:
  struct Unconstrained {};
  struct Cardinality {
    int k = 0;
  };
  struct Explicit {
    std::vector<Subset> maximal_sets;
  };
  using Structure = std::variant<Unconstrained, Cardinality, Explicit>;

  static SetSystemRealization unconstrained(int n);
  static SetSystemRealization cardinality(int n, int k);
  /// Dominated sets are dropped so the stored list is an antichain.
  static SetSystemRealization from_maximal_sets(int n, std::vector<Subset> sets);

  int n() const { return n_; }
  const Structure& structure() const { return structure_; }

  /// Invariant under every relabeling of slots.
  bool symmetric() const { return !std::holds_alternative<Explicit>(structure_); }

  bool is_feasible(std::span<const int> subset) const;

  /// Materialized antichain of maximal feasible sets; throws CapacityError past `limit`.
  std::vector<Subset> maximal_sets(std::size_t limit = 1'000'000) const;

  /// Slot s of this system becomes slot perm[s] of the result.
  SetSystemRealization relabeled(std::span<const int> perm) const;

  /// Bitmasks of the whole feasible family (explicit systems only).
  const std::vector<std::uint64_t>& feasible_masks() const { return masks_; }

  friend bool operator==(const SetSystemRealization& a, const SetSystemRealization& b);

 private:
  SetSystemRealization(int n, Structure s);

  int n_ = 0;
  Structure structure_;
  std::vector<std::uint64_t> masks_;
};

struct DigitalGoods {
  int n = 0;
};

struct KUnit {
  int n = 0;
  int k = 0;
};

/// Agent slots on the left side of a bipartite graph; a set is feasible when it can
/// be matched into the right side without exceeding capacities. An empty adjacency
/// list means every slot is adjacent to every right vertex.
struct BipartiteMatching {
  int n = 0;
  std::vector<int> capacities;
  std::vector<std::vector<int>> adjacency;
};

struct ExplicitMixture {
  std::vector<std::pair<double, SetSystemRealization>> components;
};

using EnvironmentKind = std::variant<DigitalGoods, KUnit, BipartiteMatching, ExplicitMixture>;

/// A distribution over set systems, optionally symmetrized by a uniformly random
/// relabeling of slots.
class Environment {
 public:
  struct Component {
    double weight;
    SetSystemRealization system;
  };

  Environment(EnvironmentKind kind, bool permuted = false);

  static Environment digital_goods(int n) { return Environment(DigitalGoods{n}); }
  static Environment k_unit(int n, int k) { return Environment(KUnit{n, k}); }

  int n() const { return n_; }
  bool permuted() const { return permuted_; }
  const EnvironmentKind& kind() const { return kind_; }
  const std::vector<Component>& components() const { return components_; }

  /// True when slot identities are irrelevant (permuted, or every component symmetric).
  bool symmetric() const;

 private:
  EnvironmentKind kind_;
  bool permuted_ = false;
  int n_ = 0;
  std::vector<Component> components_;
};

SetSystemRealization sample_realization(const Environment& env, std::uint64_t seed);

/// A maximum-weight feasible set, drawn uniformly among all maximizers.
Subset maximize_weights(const SetSystemRealization& sys, std::span<const double> weights,
                        std::uint64_t seed, TiePolicy policy = TiePolicy::pool);

/// Exact per-slot inclusion probabilities of `maximize_weights` on a fixed system.
Values slot_allocation(const SetSystemRealization& sys, std::span<const double> weights,
                       TiePolicy policy = TiePolicy::pool);

/// x[r] = probability the slot holding the rank-r weight is selected, in expectation
/// over the mixture, the relabeling, and tie-breaking.
Values allocation_by_rank(const Environment& env, std::span<const double> weights, const Mode& mode,
                          TiePolicy policy = TiePolicy::pool);

/// Probability that the singleton holding rank 0 is feasible.
double top_slot_feasible_probability(const Environment& env);

/// Largest permuted explicit instance `allocation_by_rank` will enumerate exactly.
inline constexpr int kMaxExactPermutedSlots = 8;

}  // namespace ccepe
