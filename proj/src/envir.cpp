#include "ccepe/envir.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <numeric>
#include <string>

#include "ccepe/rng.hpp"

namespace ccepe {
namespace {

constexpr int kMaxExplicitSlots = 62;
constexpr int kMaxExplicitSetSize = 20;

std::uint64_t to_mask(std::span<const int> s) {
  std::uint64_t m = 0;
  for (int i : s) m |= std::uint64_t{1} << i;
  return m;
}

Subset from_mask(std::uint64_t m) {
  Subset s;
  while (m != 0) {
    s.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return s;
}

void check_subset(std::span<const int> s, int n) {
  for (int i : s) {
    if (i < 0 || i >= n) {
      throw InputError("slot index " + std::to_string(i) + " out of range for n=" + std::to_string(n));
    }
  }
}

double weight_scale(std::span<const double> w) {
  double s = 1.0;
  for (double x : w) s = std::max(s, std::abs(x));
  return s;
}

bool is_zero(double w, double scale) { return std::abs(w) <= tol::kGrid * scale; }
bool is_positive(double w, double scale) { return w > tol::kGrid * scale; }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Argmax sets of an explicit family (as masks).
std::vector<std::uint64_t> argmax_masks(const SetSystemRealization& sys, std::span<const double> w,
                                        TiePolicy policy) {
  const double scale = weight_scale(w);
  std::uint64_t allowed = 0;
  for (int i = 0; i < sys.n(); ++i) {
    if (policy == TiePolicy::pool ? w[i] >= -tol::kGrid * scale : is_positive(w[i], scale)) {
      allowed |= std::uint64_t{1} << i;
    }
  }
  const auto& family = sys.feasible_masks();
  std::vector<double> sums(family.size());
  double best = 0.0;
  for (std::size_t f = 0; f < family.size(); ++f) {
    if ((family[f] & ~allowed) != 0) continue;
    double s = 0.0;
    for (std::uint64_t m = family[f]; m != 0; m &= m - 1) s += w[std::countr_zero(m)];
    sums[f] = s;
    best = std::max(best, s);
  }
  std::vector<std::uint64_t> out;
  const double slack = tol::kSum * std::max(1.0, std::abs(best));
  for (std::size_t f = 0; f < family.size(); ++f) {
    if ((family[f] & ~allowed) != 0) continue;
    if (sums[f] >= best - slack) out.push_back(family[f]);
  }
  return out;
}

// Slots by weight class for the cardinality closed form.
struct CardinalityPlan {
  std::vector<int> sure;     // always selected
  std::vector<int> tied;     // positive ties competing for `tied_slots`
  int tied_slots = 0;
  std::vector<int> zeros;    // zero weights filling up to `zero_room` (pool only)
  int zero_room = 0;
};

CardinalityPlan plan_cardinality(int k, std::span<const double> w, TiePolicy policy) {
  const double scale = weight_scale(w);
  CardinalityPlan plan;
  std::vector<int> positives;
  for (int i = 0; i < static_cast<int>(w.size()); ++i) {
    if (is_positive(w[i], scale)) {
      positives.push_back(i);
    } else if (is_zero(w[i], scale) && policy == TiePolicy::pool) {
      plan.zeros.push_back(i);
    }
  }
  if (k <= 0) {
    plan.zeros.clear();
    return plan;
  }
  if (static_cast<int>(positives.size()) >= k) {
    std::stable_sort(positives.begin(), positives.end(), [&](int a, int b) { return w[a] > w[b]; });
    const double threshold = w[positives[k - 1]];
    for (int i : positives) {
      if (tol::near(w[i], threshold)) {
        plan.tied.push_back(i);
      } else if (w[i] > threshold) {
        plan.sure.push_back(i);
      }
    }
    plan.tied_slots = k - static_cast<int>(plan.sure.size());
    plan.zeros.clear();
  } else {
    plan.sure = positives;
    plan.zero_room = k - static_cast<int>(positives.size());
  }
  return plan;
}

// Inclusion probability of one member when a subset of size <= room is drawn
// uniformly from a pool of `count`.
double bounded_subset_inclusion(int count, int room) {
  const int top = std::min(count, room);
  double num = 0.0;
  double den = 0.0;
  for (int s = 0; s <= top; ++s) {
    den += binomial(count, s);
    if (s >= 1) num += binomial(count - 1, s - 1);
  }
  return den > 0.0 ? num / den : 0.0;
}

bool bipartite_matchable(const BipartiteMatching& b, std::uint64_t subset) {
  // Expand each right vertex into `capacity` copies and run augmenting paths.
  std::vector<int> copy_owner;
  for (int r = 0; r < static_cast<int>(b.capacities.size()); ++r) {
    for (int c = 0; c < b.capacities[r]; ++c) copy_owner.push_back(r);
  }
  std::vector<int> match(copy_owner.size(), -1);
  auto adjacent = [&](int slot, int right) {
    if (b.adjacency.empty()) return true;
    const auto& adj = b.adjacency[slot];
    return std::find(adj.begin(), adj.end(), right) != adj.end();
  };
  std::vector<char> seen;
  std::function<bool(int)> augment = [&](int slot) {
    for (std::size_t c = 0; c < copy_owner.size(); ++c) {
      if (seen[c] || !adjacent(slot, copy_owner[c])) continue;
      seen[c] = 1;
      if (match[c] < 0 || augment(match[c])) {
        match[c] = slot;
        return true;
      }
    }
    return false;
  };
  for (int slot = 0; slot < b.n; ++slot) {
    if (((subset >> slot) & 1) == 0) continue;
    seen.assign(copy_owner.size(), 0);
    if (!augment(slot)) return false;
  }
  return true;
}

SetSystemRealization bipartite_system(const BipartiteMatching& b) {
  if (b.n < 0 || b.n > 16) throw InputError("bipartite matching environments support n <= 16");
  if (!b.adjacency.empty() && static_cast<int>(b.adjacency.size()) != b.n) {
    throw InputError("bipartite adjacency must list every slot");
  }
  for (int c : b.capacities) {
    if (c < 0) throw InputError("bipartite capacities must be nonnegative");
  }
  for (const auto& adj : b.adjacency) {
    for (int r : adj) {
      if (r < 0 || r >= static_cast<int>(b.capacities.size())) throw InputError("bipartite edge to unknown vertex");
    }
  }
  const std::uint64_t total = std::uint64_t{1} << b.n;
  std::vector<char> feasible(total);
  for (std::uint64_t m = 0; m < total; ++m) feasible[m] = bipartite_matchable(b, m);
  std::vector<Subset> maximal;
  for (std::uint64_t m = 0; m < total; ++m) {
    if (!feasible[m]) continue;
    bool extendable = false;
    for (int i = 0; i < b.n && !extendable; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      extendable = (m & bit) == 0 && feasible[m | bit];
    }
    if (!extendable) maximal.push_back(from_mask(m));
  }
  return SetSystemRealization::from_maximal_sets(b.n, std::move(maximal));
}

}  // namespace

SetSystemRealization::SetSystemRealization(int n, Structure s) : n_(n), structure_(std::move(s)) {}

SetSystemRealization SetSystemRealization::unconstrained(int n) {
  if (n < 0) throw InputError("n must be nonnegative");
  return {n, Unconstrained{}};
}

SetSystemRealization SetSystemRealization::cardinality(int n, int k) {
  if (n < 0 || k < 0) throw InputError("n and k must be nonnegative");
  if (k >= n) return unconstrained(n);
  return {n, Cardinality{k}};
}

SetSystemRealization SetSystemRealization::from_maximal_sets(int n, std::vector<Subset> sets) {
  if (n < 0 || n > kMaxExplicitSlots) {
    throw InputError("explicit set systems support n <= " + std::to_string(kMaxExplicitSlots));
  }
  std::vector<std::uint64_t> masks;
  for (auto& s : sets) {
    check_subset(s, n);
    masks.push_back(to_mask(s));
  }
  std::sort(masks.begin(), masks.end());
  masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
  std::vector<std::uint64_t> antichain;
  for (std::uint64_t a : masks) {
    bool dominated = false;
    for (std::uint64_t b : masks) {
      if (a != b && (a & b) == a) {
        dominated = true;
        break;
      }
    }
    if (!dominated) antichain.push_back(a);
  }
  if (antichain.empty()) antichain.push_back(0);

  Explicit e;
  for (std::uint64_t m : antichain) e.maximal_sets.push_back(from_mask(m));
  std::sort(e.maximal_sets.begin(), e.maximal_sets.end());

  SetSystemRealization sys{n, std::move(e)};
  std::vector<std::uint64_t> family;
  for (std::uint64_t top : antichain) {
    if (std::popcount(top) > kMaxExplicitSetSize) {
      throw CapacityError("maximal set too large to enumerate its closure");
    }
    // Enumerate all submasks of `top`.
    for (std::uint64_t sub = top;; sub = (sub - 1) & top) {
      family.push_back(sub);
      if (sub == 0) break;
    }
  }
  std::sort(family.begin(), family.end());
  family.erase(std::unique(family.begin(), family.end()), family.end());
  sys.masks_ = std::move(family);
  return sys;
}

bool SetSystemRealization::is_feasible(std::span<const int> subset) const {
  check_subset(subset, n_);
  Subset s(subset.begin(), subset.end());
  std::sort(s.begin(), s.end());
  const auto distinct = std::unique(s.begin(), s.end()) - s.begin();
  return std::visit(
      [&](const auto& st) -> bool {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return true;
        } else if constexpr (std::is_same_v<T, Cardinality>) {
          return distinct <= st.k;
        } else {
          const std::uint64_t m = to_mask(s);
          return std::binary_search(masks_.begin(), masks_.end(), m);
        }
      },
      structure_);
}

std::vector<Subset> SetSystemRealization::maximal_sets(std::size_t limit) const {
  return std::visit(
      [&](const auto& st) -> std::vector<Subset> {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          Subset all(n_);
          std::iota(all.begin(), all.end(), 0);
          return {all};
        } else if constexpr (std::is_same_v<T, Cardinality>) {
          if (binomial(n_, st.k) > static_cast<double>(limit)) {
            throw CapacityError("too many maximal sets to materialize");
          }
          std::vector<Subset> out;
          Subset cur;
          std::function<void(int)> rec = [&](int start) {
            if (static_cast<int>(cur.size()) == st.k) {
              out.push_back(cur);
              return;
            }
            for (int i = start; i < n_; ++i) {
              cur.push_back(i);
              rec(i + 1);
              cur.pop_back();
            }
          };
          rec(0);
          return out;
        } else {
          return st.maximal_sets;
        }
      },
      structure_);
}

SetSystemRealization SetSystemRealization::relabeled(std::span<const int> perm) const {
  if (static_cast<int>(perm.size()) != n_) throw InputError("permutation size mismatch");
  if (symmetric()) return *this;
  std::vector<Subset> sets;
  for (const auto& s : std::get<Explicit>(structure_).maximal_sets) {
    Subset t;
    for (int i : s) t.push_back(perm[i]);
    std::sort(t.begin(), t.end());
    sets.push_back(std::move(t));
  }
  return from_maximal_sets(n_, std::move(sets));
}

bool operator==(const SetSystemRealization& a, const SetSystemRealization& b) {
  if (a.n_ != b.n_ || a.structure_.index() != b.structure_.index()) return false;
  if (const auto* ca = std::get_if<SetSystemRealization::Cardinality>(&a.structure_)) {
    return ca->k == std::get<SetSystemRealization::Cardinality>(b.structure_).k;
  }
  if (const auto* ea = std::get_if<SetSystemRealization::Explicit>(&a.structure_)) {
    return ea->maximal_sets == std::get<SetSystemRealization::Explicit>(b.structure_).maximal_sets;
  }
  return true;
}

Environment::Environment(EnvironmentKind kind, bool permuted) : kind_(std::move(kind)), permuted_(permuted) {
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, DigitalGoods>) {
          n_ = k.n;
          components_.push_back({1.0, SetSystemRealization::unconstrained(k.n)});
        } else if constexpr (std::is_same_v<T, KUnit>) {
          n_ = k.n;
          components_.push_back({1.0, SetSystemRealization::cardinality(k.n, k.k)});
        } else if constexpr (std::is_same_v<T, BipartiteMatching>) {
          n_ = k.n;
          components_.push_back({1.0, bipartite_system(k)});
        } else {
          if (k.components.empty()) throw InputError("explicit mixture needs at least one component");
          n_ = k.components.front().second.n();
          double total = 0.0;
          for (const auto& [w, sys] : k.components) {
            if (!(w >= 0.0)) throw InputError("mixture weights must be nonnegative");
            if (sys.n() != n_) throw InputError("mixture components must share n");
            total += w;
            components_.push_back({w, sys});
          }
          if (std::abs(total - 1.0) > 1e-9) throw InputError("mixture weights must sum to 1");
        }
      },
      kind_);
  if (n_ < 0) throw InputError("n must be nonnegative");
}

bool Environment::symmetric() const {
  if (permuted_) return true;
  return std::all_of(components_.begin(), components_.end(),
                     [](const Component& c) { return c.system.symmetric(); });
}

SetSystemRealization sample_realization(const Environment& env, std::uint64_t seed) {
  Rng rng(seed);
  const auto& comps = env.components();
  std::size_t pick = comps.size() - 1;
  double u = rng.uniform01();
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (u < comps[c].weight) {
      pick = c;
      break;
    }
    u -= comps[c].weight;
  }
  const auto& sys = comps[pick].system;
  if (!env.permuted() || sys.symmetric()) return sys;
  std::vector<int> perm(env.n());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<int>(perm));
  return sys.relabeled(perm);
}

Subset maximize_weights(const SetSystemRealization& sys, std::span<const double> weights, std::uint64_t seed,
                        TiePolicy policy) {
  if (static_cast<int>(weights.size()) != sys.n()) throw InputError("weight vector length must equal n");
  Rng rng(seed);
  const double scale = weight_scale(weights);
  Subset out;
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, SetSystemRealization::Unconstrained>) {
          for (int i = 0; i < sys.n(); ++i) {
            if (is_positive(weights[i], scale)) {
              out.push_back(i);
            } else if (policy == TiePolicy::pool && is_zero(weights[i], scale) && rng.bernoulli(0.5)) {
              out.push_back(i);
            }
          }
        } else if constexpr (std::is_same_v<T, SetSystemRealization::Cardinality>) {
          auto plan = plan_cardinality(st.k, weights, policy);
          out = plan.sure;
          rng.shuffle(std::span<int>(plan.tied));
          out.insert(out.end(), plan.tied.begin(), plan.tied.begin() + plan.tied_slots);
          if (plan.zero_room > 0 && !plan.zeros.empty()) {
            const int count = static_cast<int>(plan.zeros.size());
            const int top = std::min(count, plan.zero_room);
            double total = 0.0;
            for (int s = 0; s <= top; ++s) total += binomial(count, s);
            double u = rng.uniform01() * total;
            int size = top;
            for (int s = 0; s <= top; ++s) {
              const double b = binomial(count, s);
              if (u < b) {
                size = s;
                break;
              }
              u -= b;
            }
            rng.shuffle(std::span<int>(plan.zeros));
            out.insert(out.end(), plan.zeros.begin(), plan.zeros.begin() + size);
          }
          std::sort(out.begin(), out.end());
        } else {
          const auto best = argmax_masks(sys, weights, policy);
          out = from_mask(best[rng.below(best.size())]);
        }
      },
      sys.structure());
  return out;
}

Values slot_allocation(const SetSystemRealization& sys, std::span<const double> weights, TiePolicy policy) {
  if (static_cast<int>(weights.size()) != sys.n()) throw InputError("weight vector length must equal n");
  const double scale = weight_scale(weights);
  Values x(sys.n(), 0.0);
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, SetSystemRealization::Unconstrained>) {
          for (int i = 0; i < sys.n(); ++i) {
            if (is_positive(weights[i], scale)) {
              x[i] = 1.0;
            } else if (policy == TiePolicy::pool && is_zero(weights[i], scale)) {
              x[i] = 0.5;
            }
          }
        } else if constexpr (std::is_same_v<T, SetSystemRealization::Cardinality>) {
          const auto plan = plan_cardinality(st.k, weights, policy);
          for (int i : plan.sure) x[i] = 1.0;
          for (int i : plan.tied) x[i] = static_cast<double>(plan.tied_slots) / plan.tied.size();
          if (plan.zero_room > 0 && !plan.zeros.empty()) {
            const double q = bounded_subset_inclusion(static_cast<int>(plan.zeros.size()), plan.zero_room);
            for (int i : plan.zeros) x[i] = q;
          }
        } else {
          const auto best = argmax_masks(sys, weights, policy);
          for (std::uint64_t m : best) {
            for (; m != 0; m &= m - 1) x[std::countr_zero(m)] += 1.0;
          }
          for (double& v : x) v /= static_cast<double>(best.size());
        }
      },
      sys.structure());
  return x;
}

Values allocation_by_rank(const Environment& env, std::span<const double> weights, const Mode& mode,
                          TiePolicy policy) {
  const int n = env.n();
  if (static_cast<int>(weights.size()) != n) throw InputError("weight vector length must equal n");
  Values x(n, 0.0);
  if (const auto* mc = std::get_if<MonteCarlo>(&mode)) {
    if (mc->trials <= 0) throw InputError("Monte-Carlo mode needs a positive trial count");
    for (std::int64_t t = 0; t < mc->trials; ++t) {
      const std::uint64_t s = mix_seed(mc->seed, static_cast<std::uint64_t>(t));
      const auto sys = sample_realization(env, mix_seed(s, 1));
      for (int i : maximize_weights(sys, weights, mix_seed(s, 2), policy)) x[i] += 1.0;
    }
    for (double& v : x) v /= static_cast<double>(mc->trials);
    return x;
  }

  for (const auto& comp : env.components()) {
    if (comp.weight == 0.0) continue;
    if (!env.permuted() || comp.system.symmetric()) {
      const auto y = slot_allocation(comp.system, weights, policy);
      for (int r = 0; r < n; ++r) x[r] += comp.weight * y[r];
      continue;
    }
    if (n > kMaxExactPermutedSlots) {
      throw CapacityError("exact allocation over permutations supports n <= " +
                          std::to_string(kMaxExactPermutedSlots));
    }
    // Rank r sits on slot perm[r]; identical slot-weight layouts share one solve.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::map<Values, Values> cache;
    Values acc(n, 0.0);
    double count = 0.0;
    Values slot_w(n);
    do {
      for (int r = 0; r < n; ++r) slot_w[perm[r]] = weights[r];
      auto it = cache.find(slot_w);
      if (it == cache.end()) it = cache.emplace(slot_w, slot_allocation(comp.system, slot_w, policy)).first;
      for (int r = 0; r < n; ++r) acc[r] += it->second[perm[r]];
      count += 1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (int r = 0; r < n; ++r) x[r] += comp.weight * acc[r] / count;
  }
  return x;
}

double top_slot_feasible_probability(const Environment& env) {
  if (env.n() == 0) return 0.0;
  double q = 0.0;
  for (const auto& comp : env.components()) {
    const auto& sys = comp.system;
    double p = 0.0;
    if (env.permuted() && !sys.symmetric()) {
      int ok = 0;
      for (int s = 0; s < sys.n(); ++s) {
        const int single[] = {s};
        if (sys.is_feasible(single)) ++ok;
      }
      p = static_cast<double>(ok) / sys.n();
    } else {
      const int single[] = {0};
      p = sys.is_feasible(single) ? 1.0 : 0.0;
    }
    q += comp.weight * p;
  }
  return q;
}

}  // namespace ccepe
