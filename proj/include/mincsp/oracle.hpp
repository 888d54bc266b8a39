#pragma once

#include <mincsp/language.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace mincsp {

struct OracleBudget {
  std::uint64_t max_evaluations = std::uint64_t(1) << 32;
};

// Pinned-optimum table: entry absent where the pinned instance is infeasible.
struct PartialCostTable {
  int dsize = 0;
  int arity = 0;
  std::vector<std::optional<Rational>> values;
  bool total = false;

  PartialCostTable() = default;
  PartialCostTable(int d, int k)
      : dsize(d), arity(k), values(pow_u64(static_cast<std::uint64_t>(d), k)) {}

  const std::optional<Rational>& at(std::size_t idx) const { return values[idx]; }
  std::optional<Rational>& at(std::size_t idx) { return values[idx]; }

  void set_total_flag() {
    total = true;
    for (const auto& v : values)
      if (!v) {
        total = false;
        break;
      }
  }
};

namespace detail {

// Weights scaled to integers by the lcm of denominators; measures become
// int64 sums, which is what makes full enumeration usable as a test oracle.
struct ScaledInstance {
  std::vector<std::int64_t> weights;  // aligned with inst.terms
  BigInt scale = 1;
  bool ok = false;
};

inline ScaledInstance scale_instance(const Instance& inst) {
  ScaledInstance s;
  BigInt l = 1;
  for (const auto& t : inst.terms) l = lcm_big(l, denominator(t.weight));
  if (l == 0) l = 1;
  s.scale = l;
  BigInt total = 0;
  for (const auto& t : inst.terms) {
    BigInt w = numerator(t.weight) * (l / denominator(t.weight));
    total += abs(w);
    if (w > std::numeric_limits<std::int64_t>::max() / 4 ||
        w < std::numeric_limits<std::int64_t>::min() / 4)
      return s;
    s.weights.push_back(static_cast<std::int64_t>(w));
  }
  if (total > std::numeric_limits<std::int64_t>::max() / 4) return s;
  s.ok = true;
  return s;
}

inline Rational unscale(std::int64_t v, const BigInt& scale) {
  return Rational(BigInt(v), scale);
}

// Enumerates all assignments in lexicographic order (variable 0 most
// significant) and reports the exact measure of each feasible one. Variables
// forced by singleton unary constraints are fixed, not enumerated.
template <typename Visit>
void scan_assignments(const Language& lang, const Instance& inst, const OracleBudget& budget,
                      Visit&& visit) {
  const int d = lang.domain.size();
  const int n = static_cast<int>(inst.variables.size());

  std::vector<Elem> pinned(static_cast<std::size_t>(n), -1);
  std::vector<const ConstraintApp*> dynamic;
  for (const auto& c : inst.constraints) {
    const Relation& rel = lang.relations[static_cast<std::size_t>(c.relation)];
    if (rel.arity == 1 && rel.tuple_count() == 1) {
      Elem e = 0;
      while (!rel.contains(static_cast<std::size_t>(e))) ++e;
      auto v = static_cast<std::size_t>(c.scope[0]);
      if (pinned[v] != -1 && pinned[v] != e) return;  // contradictory pins
      pinned[v] = e;
    } else {
      dynamic.push_back(&c);
    }
  }

  std::vector<int> free_vars;
  for (int v = 0; v < n; ++v)
    if (pinned[static_cast<std::size_t>(v)] == -1) free_vars.push_back(v);

  std::uint64_t count = 1;
  for (std::size_t i = 0; i < free_vars.size(); ++i) {
    if (count > budget.max_evaluations / static_cast<std::uint64_t>(d))
      throw BudgetError("assignment enumeration budget exceeded");
    count *= static_cast<std::uint64_t>(d);
  }

  ScaledInstance scaled = scale_instance(inst);
  Assignment sigma(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v)
    if (pinned[static_cast<std::size_t>(v)] != -1)
      sigma[static_cast<std::size_t>(v)] = pinned[static_cast<std::size_t>(v)];

  auto run = [&](auto&& measure_fn) {
    for (;;) {
      measure_fn();
      std::size_t i = free_vars.size();
      while (i-- > 0) {
        auto v = static_cast<std::size_t>(free_vars[i]);
        if (sigma[v] != d - 1) break;
        sigma[v] = 0;
        if (i == 0) return;
      }
      if (free_vars.empty()) return;
      ++sigma[static_cast<std::size_t>(free_vars[i])];
    }
  };

  auto feasible = [&]() {
    for (const ConstraintApp* c : dynamic) {
      const Relation& rel = lang.relations[static_cast<std::size_t>(c->relation)];
      std::size_t idx = 0;
      for (int v : c->scope)
        idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(sigma[static_cast<std::size_t>(v)]);
      if (!rel.contains(idx)) return false;
    }
    return true;
  };

  if (scaled.ok) {
    run([&]() {
      if (!feasible()) return;
      std::int64_t m = 0;
      for (std::size_t ti = 0; ti < inst.terms.size(); ++ti) {
        const Term& t = inst.terms[ti];
        const CostFunction& f = lang.functions[static_cast<std::size_t>(t.function)];
        std::size_t idx = 0;
        for (int v : t.scope)
          idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(sigma[static_cast<std::size_t>(v)]);
        if (!f.is_zero(idx)) m += scaled.weights[ti];
      }
      visit(sigma, unscale(m, scaled.scale));
    });
  } else {
    run([&]() {
      auto m = measure(lang, inst, sigma);
      if (m) visit(sigma, *m);
    });
  }
}

}  // namespace detail

// Exact optimum with the lexicographically least optimal assignment;
// nullopt when no assignment satisfies the crisp constraints.
inline std::optional<std::pair<Rational, Assignment>> solve_brute(
    const Language& lang, const Instance& inst, const OracleBudget& budget = {}) {
  std::optional<Rational> best;
  Assignment witness;
  detail::scan_assignments(lang, inst, budget, [&](const Assignment& sigma, const Rational& m) {
    if (!best || m < *best) {
      best = m;
      witness = sigma;
    }
  });
  if (!best) return std::nullopt;
  return std::make_pair(*best, witness);
}

// Projection of the optimal-solution set onto the given variables.
inline Relation project_optsol(const Language& lang, const Instance& inst,
                               const std::vector<int>& vars, const OracleBudget& budget = {}) {
  const int d = lang.domain.size();
  std::optional<Rational> best;
  std::vector<char> hits(pow_u64(static_cast<std::uint64_t>(d), static_cast<int>(vars.size())), 0);
  detail::scan_assignments(lang, inst, budget, [&](const Assignment& sigma, const Rational& m) {
    std::size_t idx = 0;
    for (int v : vars)
      idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(sigma[static_cast<std::size_t>(v)]);
    if (!best || m < *best) {
      best = m;
      std::fill(hits.begin(), hits.end(), 0);
      hits[idx] = 1;
    } else if (m == *best) {
      hits[idx] = 1;
    }
  });
  if (!best) throw PreconditionError("project_optsol: infeasible instance");
  Relation r("optsol", static_cast<int>(vars.size()), d);
  r.member = std::move(hits);
  return r;
}

// Table of pinned optima over the given variables (weighted expressive power).
inline PartialCostTable express(const Language& lang, const Instance& inst,
                                const std::vector<int>& vars, const OracleBudget& budget = {}) {
  const int d = lang.domain.size();
  PartialCostTable table(d, static_cast<int>(vars.size()));
  detail::scan_assignments(lang, inst, budget, [&](const Assignment& sigma, const Rational& m) {
    std::size_t idx = 0;
    for (int v : vars)
      idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(sigma[static_cast<std::size_t>(v)]);
    auto& cell = table.at(idx);
    if (!cell || m < *cell) cell = m;
  });
  table.set_total_flag();
  return table;
}

// Smallest positive gap between a sub-optimal and an optimal measure;
// nullopt when every feasible assignment has the same measure.
inline std::optional<Rational> min_gap(const Language& lang, const Instance& inst,
                                       const OracleBudget& budget = {}) {
  std::optional<Rational> best, second;
  bool any = false;
  detail::scan_assignments(lang, inst, budget, [&](const Assignment&, const Rational& m) {
    any = true;
    if (!best || m < *best) {
      if (best && (!second || *best < *second)) second = *best;
      best = m;
    } else if (m > *best && (!second || m < *second)) {
      second = m;
    }
  });
  if (!any) throw PreconditionError("min_gap: infeasible instance");
  if (!second) return std::nullopt;
  return *second - *best;
}

}  // namespace mincsp
