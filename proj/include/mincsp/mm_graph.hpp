#pragma once

#include <mincsp/core_endo.hpp>
#include <mincsp/morphisms.hpp>
#include <mincsp/oracle.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mincsp {

// ---------------------------------------------------------------------------
// Vertices: partial idempotent commutative pairs on a 1- or 2-element support
// whose images either permute the support or avoid it entirely.
// ---------------------------------------------------------------------------

struct Vertex {
  Elem a = 0, b = 0;        // support, a <= b
  Elem fimg = 0, gimg = 0;  // images of (a,b)

  bool singleton() const { return a == b; }
  bool conservative() const { return a != b && fimg == a && gimg == b; }
  bool conservative_any() const {
    return a != b && ((fimg == a && gimg == b) || (fimg == b && gimg == a));
  }
  Vertex bar() const { return Vertex{a, b, gimg, fimg}; }

  std::string id(const Domain& dom) const {
    if (singleton()) return "[" + dom.label(a) + "]";
    if (conservative_any()) return "<" + dom.label(fimg) + dom.label(gimg) + ">";
    return "(" + dom.label(a) + dom.label(b) + "->" + dom.label(fimg) + dom.label(gimg) + ")";
  }

  auto operator<=>(const Vertex&) const = default;
};

inline std::vector<Vertex> enumerate_vertices(int dsize) {
  std::vector<Vertex> out;
  for (Elem e = 0; e < dsize; ++e) out.push_back(Vertex{e, e, e, e});
  for (Elem a = 0; a < dsize; ++a)
    for (Elem b = a + 1; b < dsize; ++b) {
      out.push_back(Vertex{a, b, a, b});
      out.push_back(Vertex{a, b, b, a});
      for (Elem x = 0; x < dsize; ++x) {
        if (x == a || x == b) continue;
        for (Elem y = 0; y < dsize; ++y) {
          if (y == a || y == b) continue;
          out.push_back(Vertex{a, b, x, y});
        }
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Sigma sets: which 2-element subsets are optimal-projection definable.
// ---------------------------------------------------------------------------

using ElemPair = std::pair<Elem, Elem>;  // ordered lo < hi

inline std::vector<ElemPair> sigma_all(int dsize) {
  std::vector<ElemPair> out;
  for (Elem x = 0; x < dsize; ++x)
    for (Elem y = x + 1; y < dsize; ++y) out.emplace_back(x, y);
  return out;
}

inline ElemPair complement_pair(int dsize, ElemPair p) {
  std::vector<Elem> rest;
  for (Elem e = 0; e < dsize; ++e)
    if (e != p.first && e != p.second) rest.push_back(e);
  return {rest[0], rest[1]};
}

// The positional sets on four elements: the middle pair plays the defect.
inline std::vector<ElemPair> sigma_ad(int dsize) {
  std::vector<ElemPair> out;
  for (auto p : sigma_all(dsize))
    if (!(p == ElemPair{1, 2})) out.push_back(p);
  return out;
}

inline std::vector<ElemPair> sigma_0(int dsize) {
  std::vector<ElemPair> out;
  for (auto p : sigma_all(dsize))
    if (!(p == ElemPair{1, 2}) && !(p == ElemPair{0, 3})) out.push_back(p);
  return out;
}

struct SigmaCertificate {
  ElemPair pair;
  Instance gadget;  // over the extended language
  int var = 0;      // projection variable
};

struct SigmaSets {
  std::map<ElemPair, SigmaCertificate> certified;
  std::map<ElemPair, std::string> inferred;  // membership -> recorded assumption

  bool has(ElemPair p) const { return certified.count(p) || inferred.count(p); }
};

// ---------------------------------------------------------------------------
// Edge certificates and the graph.
// ---------------------------------------------------------------------------

struct ExpressedTable {
  int dsize = 0;
  std::vector<Rational> vals;  // d*d, row = first designated variable

  const Rational& at(Elem x, Elem y) const {
    return vals[static_cast<std::size_t>(x) * static_cast<std::size_t>(dsize) + static_cast<std::size_t>(y)];
  }
  Rational& at(Elem x, Elem y) {
    return vals[static_cast<std::size_t>(x) * static_cast<std::size_t>(dsize) + static_cast<std::size_t>(y)];
  }
};

// Strict-inequality witness for one vertex pair: the gadget expresses `table`
// over its first two variables, rows indexed by the first.
struct EdgeCertificate {
  Vertex u, v;  // u indexes rows
  Instance gadget;
  ExpressedTable table;
};

inline bool edge_condition(const ExpressedTable& t, const Vertex& u, const Vertex& v) {
  Rational lhs1 = t.at(u.a, v.a) + t.at(u.b, v.b);
  Rational lhs2 = t.at(u.a, v.b) + t.at(u.b, v.a);
  Rational rhs = t.at(u.fimg, v.fimg) + t.at(u.gimg, v.gimg);
  return std::min(lhs1, lhs2) < rhs;
}

struct GadgetBudget {
  int max_aux = 2;
  std::vector<Rational> weights = {Rational(1), Rational(2), Rational(1, 2)};
  int max_terms = 6;
  std::uint64_t max_gadgets = 150000;
};

using EdgeKey = std::pair<int, int>;  // vertex indices, lo <= hi

struct DerivedEdge {
  EdgeKey edge;
  std::string rule;                 // "bar" or "chain_step"
  std::vector<EdgeKey> premises;    // earlier edges this one is built from
  std::vector<ElemPair> sigma_used; // memberships consumed by the rule
};

// Sound reading of the rules with negative or disjunctive conclusions: the
// disjunction is recorded, never asserted. A disjunct is a conjunction of
// edges; the node is satisfied once some disjunct is fully present.
struct DisjunctionNode {
  std::string rule;  // "shift_support", "loop_pair_transfer", "loop_split"
  std::vector<EdgeKey> premises;
  std::vector<std::vector<EdgeKey>> disjuncts;
  bool satisfied = false;
};

struct MultimorphismGraph {
  Language language;
  Language ext;             // language plus constant relations
  std::vector<int> consts;  // element -> constant relation index in ext
  std::vector<Vertex> vertices;
  std::map<EdgeKey, EdgeCertificate> certified;
  std::vector<DerivedEdge> derived;
  std::set<EdgeKey> derived_set;
  std::vector<DisjunctionNode> disjunctions;
  SigmaSets sigma;
  bool incomplete = false;  // gadget budget exhausted before the space ran out
  std::uint64_t gadgets_scanned = 0;

  int vertex_index(const Vertex& v) const {
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (vertices[i] == v) return static_cast<int>(i);
    return -1;
  }

  EdgeKey key(int i, int j) const { return {std::min(i, j), std::max(i, j)}; }

  bool has_edge(int i, int j) const {
    EdgeKey k = key(i, j);
    return certified.count(k) || derived_set.count(k);
  }

  ElemPair support(int i) const {
    const Vertex& v = vertices[static_cast<std::size_t>(i)];
    return {v.a, v.b};
  }
};

// ---------------------------------------------------------------------------
// Bounded gadget search.
// ---------------------------------------------------------------------------

namespace graph_detail {

struct Atom {
  int func = 0;
  std::vector<int> slots;  // 0 = x, 1 = y, 2.. = aux, then constants
};

struct ScanHooks {
  // called for every enumerated gadget with its integer express table (scaled
  // by `scale`) and per-variable optimal-value masks (free variables only)
  std::function<void(const std::vector<std::pair<int, int>>& terms,
                     const std::vector<std::int64_t>& table,
                     const std::vector<unsigned>& opt_masks, int naux)>
      on_gadget;
};

class GadgetScanner {
 public:
  GadgetScanner(const Language& lang, const GadgetBudget& budget)
      : lang_(lang), budget_(budget), d_(lang.domain.size()) {
    n_var_slots_ = 2 + budget_.max_aux;
    for (std::size_t fi = 0; fi < lang_.functions.size(); ++fi) {
      const CostFunction& f = lang_.functions[fi];
      std::vector<int> slots(static_cast<std::size_t>(f.arity), 0);
      for (;;) {
        bool has_var = false;
        for (int s : slots)
          if (s < n_var_slots_) has_var = true;
        if (has_var) atoms_.push_back(Atom{static_cast<int>(fi), slots});
        int i = f.arity - 1;
        while (i >= 0 && slots[static_cast<std::size_t>(i)] == n_var_slots_ + d_ - 1) {
          slots[static_cast<std::size_t>(i)] = 0;
          --i;
        }
        if (i < 0) break;
        ++slots[static_cast<std::size_t>(i)];
      }
    }
    // integer weights: clear denominators of the weight set once
    weight_scale_ = 1;
    for (const auto& w : budget_.weights) weight_scale_ = lcm_big(weight_scale_, denominator(w));
    for (const auto& w : budget_.weights) {
      BigInt s = numerator(w) * (weight_scale_ / denominator(w));
      int_weights_.push_back(static_cast<std::int64_t>(s));
    }
  }

  const BigInt& weight_scale() const { return weight_scale_; }
  std::uint64_t scanned() const { return scanned_; }
  bool incomplete() const { return incomplete_; }

  // Terms are (atom index, weight index) pairs, strictly increasing by the
  // combined id, enumerated by term count then lexicographically.
  void run(const ScanHooks& hooks) {
    // the empty gadget: one variable, full projection
    {
      std::vector<std::int64_t> table(static_cast<std::size_t>(d_) * static_cast<std::size_t>(d_), 0);
      std::vector<unsigned> masks(2, (1u << d_) - 1);
      hooks.on_gadget({}, table, masks, 0);
      ++scanned_;
    }
    const std::size_t n = atoms_.size() * budget_.weights.size();
    std::vector<std::pair<int, int>> terms;
    for (int len = 1; len <= budget_.max_terms; ++len) {
      std::vector<std::size_t> combo(static_cast<std::size_t>(len));
      for (int i = 0; i < len; ++i) combo[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
      if (static_cast<std::size_t>(len) > n) break;
      for (;;) {
        if (scanned_ >= budget_.max_gadgets) {
          incomplete_ = true;
          return;
        }
        terms.clear();
        for (std::size_t id : combo)
          terms.emplace_back(static_cast<int>(id / budget_.weights.size()),
                             static_cast<int>(id % budget_.weights.size()));
        if (accept(terms)) {
          evaluate(terms, hooks);
          ++scanned_;
        }
        // next combination
        int i = len - 1;
        while (i >= 0 && combo[static_cast<std::size_t>(i)] == n - static_cast<std::size_t>(len - i)) --i;
        if (i < 0) break;
        ++combo[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < len; ++j)
          combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }

  // Materialises a term list as an instance over the extended language.
  Instance materialize(const std::vector<std::pair<int, int>>& terms,
                       const std::vector<int>& const_rels) const {
    Instance inst;
    inst.variables = {"x", "y"};
    int naux = 0;
    unsigned cmask = 0;
    for (const auto& [ai, wi] : terms) {
      for (int s : atoms_[static_cast<std::size_t>(ai)].slots) {
        if (s >= 2 && s < n_var_slots_) naux = std::max(naux, s - 1);
        if (s >= n_var_slots_) cmask |= 1u << (s - n_var_slots_);
      }
    }
    for (int k = 0; k < naux; ++k) inst.variables.push_back("s" + std::to_string(k));
    std::vector<int> const_var(static_cast<std::size_t>(d_), -1);
    for (Elem e = 0; e < d_; ++e) {
      if (!(cmask & (1u << e))) continue;
      const_var[static_cast<std::size_t>(e)] =
          static_cast<int>(inst.variables.size());
      inst.variables.push_back("k_" + lang_.domain.label(e));
      inst.constraints.push_back({const_rels[static_cast<std::size_t>(e)],
                                  {const_var[static_cast<std::size_t>(e)]}});
    }
    for (const auto& [ai, wi] : terms) {
      const Atom& atom = atoms_[static_cast<std::size_t>(ai)];
      Term t;
      t.function = atom.func;
      t.weight = budget_.weights[static_cast<std::size_t>(wi)];
      for (int s : atom.slots) {
        if (s < n_var_slots_)
          t.scope.push_back(s);
        else
          t.scope.push_back(const_var[static_cast<std::size_t>(s - n_var_slots_)]);
      }
      inst.terms.push_back(std::move(t));
    }
    return inst;
  }

 private:
  bool accept(const std::vector<std::pair<int, int>>& terms) const {
    unsigned used = 0;
    for (const auto& [ai, wi] : terms)
      for (int s : atoms_[static_cast<std::size_t>(ai)].slots)
        if (s < n_var_slots_) used |= 1u << s;
    if (!(used & 1u)) return false;  // x must occur
    // aux slots must be used densely
    for (int k = 3; k < n_var_slots_; ++k)
      if ((used & (1u << k)) && !(used & (1u << (k - 1)))) return false;
    // canonical under aux transposition
    if (budget_.max_aux >= 2 && (used & (1u << 2)) && (used & (1u << 3))) {
      std::vector<std::pair<int, int>> swapped;
      for (const auto& [ai, wi] : terms) {
        Atom a = atoms_[static_cast<std::size_t>(ai)];
        for (int& s : a.slots)
          if (s == 2)
            s = 3;
          else if (s == 3)
            s = 2;
        int id = atom_index(a);
        swapped.emplace_back(id, wi);
      }
      std::sort(swapped.begin(), swapped.end());
      if (swapped < terms) return false;
    }
    return true;
  }

  int atom_index(const Atom& a) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), a, [](const Atom& l, const Atom& r) {
      if (l.func != r.func) return l.func < r.func;
      return l.slots < r.slots;
    });
    return static_cast<int>(it - atoms_.begin());
  }

  void evaluate(const std::vector<std::pair<int, int>>& terms, const ScanHooks& hooks) {
    int naux = 0;
    for (const auto& [ai, wi] : terms)
      for (int s : atoms_[static_cast<std::size_t>(ai)].slots)
        if (s >= 2 && s < n_var_slots_) naux = std::max(naux, s - 1);
    const int nf = 2 + naux;

    struct FlatTerm {
      const CostFunction* f;
      std::int64_t w;
      std::vector<int> slots;  // < nf -> variable position, otherwise ~elem
    };
    std::vector<FlatTerm> flats;
    for (const auto& [ai, wi] : terms) {
      const Atom& atom = atoms_[static_cast<std::size_t>(ai)];
      FlatTerm ft;
      ft.f = &lang_.functions[static_cast<std::size_t>(atom.func)];
      ft.w = int_weights_[static_cast<std::size_t>(wi)];
      for (int s : atom.slots) ft.slots.push_back(s < n_var_slots_ ? s : ~(s - n_var_slots_));
      flats.push_back(std::move(ft));
    }

    const std::size_t dsz = static_cast<std::size_t>(d_);
    std::vector<std::int64_t> table(dsz * dsz, std::numeric_limits<std::int64_t>::max());
    std::vector<unsigned> masks(static_cast<std::size_t>(nf), 0);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();

    std::vector<Elem> assign(static_cast<std::size_t>(nf), 0);
    for (;;) {
      std::int64_t m = 0;
      for (const auto& ft : flats) {
        std::size_t idx = 0;
        for (int s : ft.slots) {
          Elem e = s >= 0 ? assign[static_cast<std::size_t>(s)] : static_cast<Elem>(~s);
          idx = idx * dsz + static_cast<std::size_t>(e);
        }
        if (!ft.f->is_zero(idx)) m += ft.w;
      }
      std::size_t cell = static_cast<std::size_t>(assign[0]) * dsz + static_cast<std::size_t>(assign[1]);
      if (m < table[cell]) table[cell] = m;
      if (m < best) {
        best = m;
        for (auto& mask : masks) mask = 0;
      }
      if (m == best)
        for (int v = 0; v < nf; ++v) masks[static_cast<std::size_t>(v)] |= 1u << assign[static_cast<std::size_t>(v)];

      int i = nf - 1;
      while (i >= 0 && assign[static_cast<std::size_t>(i)] == d_ - 1) {
        assign[static_cast<std::size_t>(i)] = 0;
        --i;
      }
      if (i < 0) break;
      ++assign[static_cast<std::size_t>(i)];
    }
    hooks.on_gadget(terms, table, masks, naux);
  }

  const Language& lang_;
  GadgetBudget budget_;
  int d_;
  int n_var_slots_ = 0;
  std::vector<Atom> atoms_;
  std::vector<std::int64_t> int_weights_;
  BigInt weight_scale_ = 1;
  std::uint64_t scanned_ = 0;
  bool incomplete_ = false;
};

}  // namespace graph_detail

// ---------------------------------------------------------------------------
// Graph construction.
// ---------------------------------------------------------------------------

inline MultimorphismGraph build_graph(const Language& lang, const GadgetBudget& budget = {}) {
  if (!is_core(lang)) throw PreconditionError("graph construction requires a core language");
  MultimorphismGraph g;
  g.language = lang;
  auto [ext, consts] = with_constants(lang);
  g.ext = std::move(ext);
  g.consts = consts;
  const int d = lang.domain.size();
  g.vertices = enumerate_vertices(d);

  graph_detail::GadgetScanner scanner(lang, budget);
  const std::int64_t unreachable = std::numeric_limits<std::int64_t>::max();

  graph_detail::ScanHooks hooks;
  hooks.on_gadget = [&](const std::vector<std::pair<int, int>>& terms,
                        const std::vector<std::int64_t>& table,
                        const std::vector<unsigned>& masks, int naux) {
    (void)naux;
    // sigma: any free variable whose optimal projection is a 2-set
    for (std::size_t v = 0; v < masks.size(); ++v) {
      unsigned m = masks[v];
      if (std::popcount(m) != 2) continue;
      Elem lo = static_cast<Elem>(std::countr_zero(m));
      Elem hi = static_cast<Elem>(std::bit_width(m) - 1);
      ElemPair p{lo, hi};
      if (g.sigma.certified.count(p)) continue;
      SigmaCertificate cert;
      cert.pair = p;
      cert.gadget = scanner.materialize(terms, g.consts);
      cert.var = static_cast<int>(v);
      g.sigma.certified.emplace(p, std::move(cert));
    }
    // edges: both orientations of every vertex pair
    auto rational_table = [&]() {
      ExpressedTable t;
      t.dsize = d;
      for (std::int64_t v : table)
        t.vals.push_back(v == unreachable ? Rational(0) : Rational(BigInt(v), scanner.weight_scale()));
      return t;
    };
    auto tab = [&](Elem x, Elem y) {
      return table[static_cast<std::size_t>(x) * static_cast<std::size_t>(d) + static_cast<std::size_t>(y)];
    };
    const int nv = static_cast<int>(g.vertices.size());
    for (int i = 0; i < nv; ++i) {
      for (int j = i; j < nv; ++j) {
        if (g.certified.count({i, j})) continue;
        const Vertex& u = g.vertices[static_cast<std::size_t>(i)];
        const Vertex& w = g.vertices[static_cast<std::size_t>(j)];
        bool hit = false;
        bool rows_u = true;
        {
          std::int64_t lhs = std::min(tab(u.a, w.a) + tab(u.b, w.b), tab(u.a, w.b) + tab(u.b, w.a));
          std::int64_t rhs = tab(u.fimg, w.fimg) + tab(u.gimg, w.gimg);
          if (lhs < rhs) hit = true;
        }
        if (!hit) {
          std::int64_t lhs = std::min(tab(w.a, u.a) + tab(w.b, u.b), tab(w.a, u.b) + tab(w.b, u.a));
          std::int64_t rhs = tab(w.fimg, u.fimg) + tab(w.gimg, u.gimg);
          if (lhs < rhs) {
            hit = true;
            rows_u = false;
          }
        }
        if (!hit) continue;
        EdgeCertificate cert;
        cert.u = rows_u ? u : w;
        cert.v = rows_u ? w : u;
        cert.gadget = scanner.materialize(terms, g.consts);
        cert.table = rational_table();
        g.certified.emplace(EdgeKey{i, j}, std::move(cert));
      }
    }
  };

  scanner.run(hooks);
  g.gadgets_scanned = scanner.scanned();
  g.incomplete = scanner.incomplete();

  // inference: an uncertified pair, taken as not definable, forces every pair
  // other than it and its complement in (four-element domains only)
  if (d == 4) {
    for (ElemPair p : sigma_all(d)) {
      if (g.sigma.certified.count(p)) continue;
      ElemPair q = complement_pair(d, p);
      for (ElemPair r : sigma_all(d)) {
        if (r == p || r == q) continue;
        if (g.sigma.certified.count(r) || g.sigma.inferred.count(r)) continue;
        g.sigma.inferred.emplace(
            r, "assuming {" + lang.domain.label(p.first) + "," + lang.domain.label(p.second) +
                   "} is not definable");
      }
    }
  }
  return g;
}

inline SigmaSets certify_sigma(const Language& lang, const GadgetBudget& budget = {}) {
  return build_graph(lang, budget).sigma;
}

inline std::vector<EdgeCertificate> search_edges(const Language& lang,
                                                 const GadgetBudget& budget = {}) {
  MultimorphismGraph g = build_graph(lang, budget);
  std::vector<EdgeCertificate> out;
  for (auto& [k, cert] : g.certified) out.push_back(cert);
  return out;
}

// Re-expresses the certificate gadget and re-checks the strict inequality.
inline bool replay_certificate(const MultimorphismGraph& g, const EdgeCertificate& cert) {
  PartialCostTable t = express(g.ext, cert.gadget, {0, 1});
  if (!t.total) return false;
  const int d = g.language.domain.size();
  ExpressedTable et;
  et.dsize = d;
  for (const auto& v : t.values) et.vals.push_back(*v);
  for (Elem x = 0; x < d; ++x)
    for (Elem y = 0; y < d; ++y)
      if (et.at(x, y) != cert.table.at(x, y)) return false;
  return edge_condition(et, cert.u, cert.v);
}

// ---------------------------------------------------------------------------
// Closure under the sound derivation rules.
// ---------------------------------------------------------------------------

inline void close_edges(MultimorphismGraph& g) {
  const int nv = static_cast<int>(g.vertices.size());
  std::vector<int> bar_of(static_cast<std::size_t>(nv));
  for (int i = 0; i < nv; ++i)
    bar_of[static_cast<std::size_t>(i)] = g.vertex_index(g.vertices[static_cast<std::size_t>(i)].bar());

  auto add_derived = [&](EdgeKey e, std::string rule, std::vector<EdgeKey> prem,
                         std::vector<ElemPair> sig) {
    if (g.certified.count(e) || g.derived_set.count(e)) return false;
    g.derived_set.insert(e);
    g.derived.push_back(DerivedEdge{e, std::move(rule), std::move(prem), std::move(sig)});
    return true;
  };

  std::vector<int> conservative;
  for (int i = 0; i < nv; ++i)
    if (g.vertices[static_cast<std::size_t>(i)].conservative_any()) conservative.push_back(i);

  bool changed = true;
  while (changed) {
    changed = false;
    // bar symmetry
    std::vector<EdgeKey> known;
    for (const auto& [k, c] : g.certified) known.push_back(k);
    for (const auto& k : g.derived_set) known.push_back(k);
    for (EdgeKey k : known) {
      EdgeKey barred = g.key(bar_of[static_cast<std::size_t>(k.first)],
                             bar_of[static_cast<std::size_t>(k.second)]);
      if (add_derived(barred, "bar", {k}, {})) changed = true;
    }
    // conservative chain step through a definable middle support
    for (int yi : conservative) {
      ElemPair sup = g.support(yi);
      if (!g.sigma.has(sup)) continue;
      for (int xi : conservative) {
        if (!g.has_edge(xi, yi)) continue;
        for (int zi : conservative) {
          if (!g.has_edge(yi, zi)) continue;
          EdgeKey e = g.key(xi, bar_of[static_cast<std::size_t>(zi)]);
          if (add_derived(e, "chain_step", {g.key(xi, yi), g.key(yi, zi)}, {sup})) changed = true;
        }
      }
    }
  }

  // disjunctive rules are recorded, not asserted
  auto cvertex = [&](Elem f, Elem gq) {
    return g.vertex_index(Vertex{std::min(f, gq), std::max(f, gq), f, gq});
  };
  const int d = g.language.domain.size();
  g.disjunctions.clear();
  std::vector<EdgeKey> all_edges;
  for (const auto& [k, c] : g.certified) all_edges.push_back(k);
  for (const auto& k : g.derived_set) all_edges.push_back(k);
  std::sort(all_edges.begin(), all_edges.end());

  auto satisfied = [&](const std::vector<std::vector<EdgeKey>>& disjuncts) {
    for (const auto& con : disjuncts) {
      bool all = true;
      for (EdgeKey e : con)
        if (!g.certified.count(e) && !g.derived_set.count(e)) all = false;
      if (all) return true;
    }
    return false;
  };

  for (EdgeKey k : all_edges) {
    const Vertex& u = g.vertices[static_cast<std::size_t>(k.first)];
    const Vertex& w = g.vertices[static_cast<std::size_t>(k.second)];
    if (!u.conservative_any() || !w.conservative_any()) continue;
    // support shifting: one endpoint may slide to any third element
    for (int side = 0; side < 2; ++side) {
      const Vertex& mov = side ? u : w;
      int fix_i = side ? k.second : k.first;
      for (Elem x = 0; x < d; ++x) {
        if (x == mov.a || x == mov.b) continue;
        int v1 = cvertex(mov.fimg, x);
        int v2 = cvertex(x, mov.gimg);
        DisjunctionNode node;
        node.rule = "shift_support";
        node.premises = {k};
        node.disjuncts = {{g.key(fix_i, v1)}, {g.key(fix_i, v2)}};
        node.satisfied = satisfied(node.disjuncts);
        g.disjunctions.push_back(std::move(node));
      }
    }
  }

  // loops transfer along loop-free triangles; recorded disjunctively
  for (Elem x = 0; x < d; ++x)
    for (Elem z = 0; z < d; ++z) {
      if (x == z) continue;
      int xz = cvertex(x, z);
      EdgeKey loop = g.key(xz, xz);
      if (!g.certified.count(loop) && !g.derived_set.count(loop)) continue;
      for (Elem y = 0; y < d; ++y) {
        if (y == x || y == z) continue;
        int xy = cvertex(x, y);
        int yz = cvertex(y, z);
        DisjunctionNode node;
        node.rule = "loop_split";
        node.premises = {loop};
        node.disjuncts = {{g.key(xy, xy)}, {g.key(yz, yz)}, {g.key(xy, yz)}};
        node.satisfied = satisfied(node.disjuncts);
        g.disjunctions.push_back(std::move(node));
      }
    }
}

// ---------------------------------------------------------------------------
// Lemma-9-style normalization of a conservative edge certificate.
// ---------------------------------------------------------------------------

struct NormalizedEdge {
  Vertex u, v;
  ExpressedTable table;  // equal cross terms strictly below equal diagonal terms
  Instance gadget;
};

namespace graph_detail {

// Swaps the roles of the two designated variables of a gadget.
inline Instance transpose_gadget(const Instance& gadget) {
  Instance out = gadget;
  auto remap = [](int v) { return v == 0 ? 1 : (v == 1 ? 0 : v); };
  for (auto& t : out.terms)
    for (int& v : t.scope) v = remap(v);
  for (auto& c : out.constraints)
    for (int& v : c.scope) v = remap(v);
  return out;
}

// Splices a weighted copy of a unary-separator gadget onto one variable.
inline void splice_separator(Instance& host, int target_var, const UnarySeparator& sep,
                             const Rational& weight, const std::string& tag) {
  std::vector<int> var_map(sep.gadget.variables.size(), -1);
  var_map[static_cast<std::size_t>(sep.projection_var)] = target_var;
  for (std::size_t v = 0; v < sep.gadget.variables.size(); ++v)
    if (var_map[v] < 0) var_map[v] = host.add_variable(sep.gadget.variables[v] + tag);
  for (const auto& t : sep.gadget.terms) {
    Term nt;
    nt.function = t.function;
    nt.weight = t.weight * weight;
    for (int v : t.scope) nt.scope.push_back(var_map[static_cast<std::size_t>(v)]);
    host.terms.push_back(std::move(nt));
  }
  for (const auto& c : sep.gadget.constraints) {
    ConstraintApp nc;
    nc.relation = c.relation;
    for (int v : c.scope) nc.scope.push_back(var_map[static_cast<std::size_t>(v)]);
    host.constraints.push_back(std::move(nc));
  }
}

}  // namespace graph_detail

inline NormalizedEdge normalize_edge_function(const MultimorphismGraph& g,
                                              const EdgeCertificate& cert) {
  if (!cert.u.conservative_any() || !cert.v.conservative_any())
    throw PreconditionError("normalization applies to conservative vertex pairs");
  const int d = g.language.domain.size();
  Elem a1 = cert.u.fimg, b1 = cert.u.gimg;
  Elem a2 = cert.v.fimg, b2 = cert.v.gimg;

  NormalizedEdge out;
  out.u = cert.u;
  out.v = cert.v;
  out.table = cert.table;
  out.gadget = cert.gadget;

  auto& t = out.table;
  // equalise the cross terms by a separator on the row support
  if (t.at(a1, b2) != t.at(b1, a2)) {
    bool raise_a1 = t.at(a1, b2) < t.at(b1, a2);
    Elem lo = raise_a1 ? b1 : a1;  // separator is 0 at lo
    Elem hi = raise_a1 ? a1 : b1;
    Rational lambda = raise_a1 ? t.at(b1, a2) - t.at(a1, b2) : t.at(a1, b2) - t.at(b1, a2);
    auto sep = unary_separator(g.language, lo, hi);
    if (!sep) throw PreconditionError("normalization requires a core language");
    for (Elem x = 0; x < d; ++x)
      for (Elem y = 0; y < d; ++y)
        t.at(x, y) += lambda * *sep->table.at(static_cast<std::size_t>(x));
    graph_detail::splice_separator(out.gadget, 0, *sep, lambda, "@row");
  }
  if (t.at(a1, a2) < t.at(b1, b2)) {
    std::swap(a1, b1);
    std::swap(a2, b2);
  }
  Rational gamma = (t.at(a1, a2) - t.at(b1, b2)) / 2;
  if (gamma > 0) {
    auto row = unary_separator(g.language, a1, b1);
    auto col = unary_separator(g.language, a2, b2);
    if (!row || !col) throw PreconditionError("normalization requires a core language");
    for (Elem x = 0; x < d; ++x)
      for (Elem y = 0; y < d; ++y)
        t.at(x, y) += gamma * (*row->table.at(static_cast<std::size_t>(x)) +
                               *col->table.at(static_cast<std::size_t>(y)));
    graph_detail::splice_separator(out.gadget, 0, *row, gamma, "@r");
    graph_detail::splice_separator(out.gadget, 1, *col, gamma, "@c");
  }

  if (!(t.at(a1, b2) == t.at(b1, a2) && t.at(a1, b2) < t.at(a1, a2) &&
        t.at(a1, a2) == t.at(b1, b2)))
    throw Error("normalization did not reach the canonical shape");
  return out;
}

// ---------------------------------------------------------------------------
// Materialisation of derived edges and hardness witnesses.
// ---------------------------------------------------------------------------

inline std::optional<const DerivedEdge*> find_derivation(const MultimorphismGraph& g, EdgeKey e) {
  for (const auto& de : g.derived)
    if (de.edge == e) return &de;
  return std::nullopt;
}

// Rebuilds an explicit certificate for a derived edge by composing the
// normalised premise certificates through the definable middle support.
// Returns nullopt when an inferred (certificate-free) membership blocks it.
inline std::optional<EdgeCertificate> materialize_edge(const MultimorphismGraph& g, EdgeKey e,
                                                       int depth = 0) {
  if (depth > 8) return std::nullopt;
  auto it = g.certified.find(e);
  if (it != g.certified.end()) return it->second;
  auto de = find_derivation(g, e);
  if (!de) return std::nullopt;

  if ((*de)->rule == "bar") {
    auto prem = materialize_edge(g, (*de)->premises[0], depth + 1);
    if (!prem) return std::nullopt;
    EdgeCertificate cert = *prem;
    cert.u = cert.u.bar();
    cert.v = cert.v.bar();
    if (!edge_condition(cert.table, cert.u, cert.v)) return std::nullopt;
    return cert;
  }

  // chain_step: premises {x,y}, {y,z}; conclusion {x, bar z}
  auto p1 = materialize_edge(g, (*de)->premises[0], depth + 1);
  auto p2 = materialize_edge(g, (*de)->premises[1], depth + 1);
  if (!p1 || !p2) return std::nullopt;
  ElemPair mid = (*de)->sigma_used[0];
  auto sit = g.sigma.certified.find(mid);
  if (sit == g.sigma.certified.end()) return std::nullopt;  // inferred only

  // orient both certificates so that the middle support sits on the column
  // side of the first and the row side of the second
  auto oriented = [&](const EdgeCertificate& c, bool mid_on_rows) -> std::optional<NormalizedEdge> {
    EdgeCertificate cc = c;
    ElemPair su{cc.u.a, cc.u.b}, sv{cc.v.a, cc.v.b};
    if ((mid_on_rows && su != mid) || (!mid_on_rows && sv != mid)) {
      if ((mid_on_rows && sv != mid) || (!mid_on_rows && su != mid)) return std::nullopt;
      // transpose the table and swap the vertices
      ExpressedTable tt;
      tt.dsize = cc.table.dsize;
      tt.vals.resize(cc.table.vals.size());
      for (Elem x = 0; x < tt.dsize; ++x)
        for (Elem y = 0; y < tt.dsize; ++y) tt.at(x, y) = cc.table.at(y, x);
      std::swap(cc.u, cc.v);
      cc.gadget = graph_detail::transpose_gadget(cc.gadget);
      cc.table = std::move(tt);
    }
    return normalize_edge_function(g, cc);
  };
  auto n1 = oriented(*p1, false);
  auto n2 = oriented(*p2, true);
  if (!n1 || !n2) return std::nullopt;

  // composed host: terms of both normalised gadgets glued on a middle
  // variable, whose range is then restricted by the definable pair
  Language ext = g.ext;
  Relation r("mid_pair", 1, g.language.domain.size());
  r.add(static_cast<std::size_t>(mid.first));
  r.add(static_cast<std::size_t>(mid.second));
  while (ext.relation_index(r.name)) r.name += "'";
  int rel = static_cast<int>(ext.relations.size());
  ext.relations.push_back(r);

  Instance host;
  host.variables = {"x", "y", "m"};
  auto glue = [&](const Instance& gadget, int row_var, int col_var, const std::string& tag) {
    std::vector<int> vmap(gadget.variables.size(), -1);
    vmap[0] = row_var;
    vmap[1] = col_var;
    for (std::size_t v = 2; v < gadget.variables.size(); ++v)
      vmap[v] = host.add_variable(gadget.variables[v] + tag);
    for (const auto& t : gadget.terms) {
      Term nt;
      nt.function = t.function;
      nt.weight = t.weight;
      for (int v : t.scope) nt.scope.push_back(vmap[static_cast<std::size_t>(v)]);
      host.terms.push_back(std::move(nt));
    }
    for (const auto& c : gadget.constraints) {
      ConstraintApp nc;
      nc.relation = c.relation;
      for (int v : c.scope) nc.scope.push_back(vmap[static_cast<std::size_t>(v)]);
      host.constraints.push_back(std::move(nc));
    }
  };
  glue(n1->gadget, 0, 2, "@L");
  glue(n2->gadget, 2, 1, "@R");
  host.constraints.push_back({rel, {2}});

  // check the middle relation really is the optimal projection of its gadget
  RelationDefinition defn{sit->second.gadget, {sit->second.var}};
  Instance composed;
  try {
    composed = eliminate_relation(ext, host, rel, defn);
  } catch (const Error&) {
    return std::nullopt;
  }
  // replay cost is exponential in the unpinned variables only
  {
    std::vector<char> pin(composed.variables.size(), 0);
    for (const auto& c : composed.constraints) {
      const Relation& r = ext.relations[static_cast<std::size_t>(c.relation)];
      if (r.arity == 1 && r.tuple_count() == 1) pin[static_cast<std::size_t>(c.scope[0])] = 1;
    }
    int free_vars = 0;
    for (char c : pin) free_vars += !c;
    if (free_vars > 10) return std::nullopt;
  }
  PartialCostTable pt = express(ext, composed, {0, 1});
  if (!pt.total) return std::nullopt;

  EdgeCertificate cert;
  cert.u = g.vertices[static_cast<std::size_t>(e.first)];
  cert.v = g.vertices[static_cast<std::size_t>(e.second)];
  cert.table.dsize = g.language.domain.size();
  for (const auto& v : pt.values) cert.table.vals.push_back(*v);
  cert.gadget = composed;
  if (!edge_condition(cert.table, cert.u, cert.v)) {
    // derived edges are unordered; retry with the endpoints swapped
    std::swap(cert.u, cert.v);
    ExpressedTable tt;
    tt.dsize = cert.table.dsize;
    tt.vals.resize(cert.table.vals.size());
    for (Elem x = 0; x < tt.dsize; ++x)
      for (Elem y = 0; y < tt.dsize; ++y) tt.at(x, y) = cert.table.at(y, x);
    cert.table = std::move(tt);
    cert.gadget = graph_detail::transpose_gadget(cert.gadget);
    if (!edge_condition(cert.table, cert.u, cert.v)) return std::nullopt;
  }
  return cert;
}

struct HardnessWitness {
  Vertex vertex;    // conservative vertex carrying the loop
  ElemPair pair;    // its support
  bool loop_certified = false;
  bool sigma_certified = false;
  std::optional<EdgeCertificate> loop_certificate;  // certified or materialised
  std::vector<EdgeKey> loop_trace;                  // derivation premises when derived
  std::optional<SigmaCertificate> sigma_certificate;
  std::string sigma_note;
  std::optional<NormalizedEdge> normalized;
  // The final step is external: a definable pair carrying a loop of this shape
  // yields NP-hardness by Prop. 5.1 of Cohen, Cooper, Jeavons, Krokhin,
  // "The complexity of soft constraint satisfaction" (AIJ 2006).
  std::string note =
      "reduction completes via Prop. 5.1 of Cohen et al., The complexity of soft "
      "constraint satisfaction (Artif. Intell. 2006)";
};

inline std::optional<HardnessWitness> find_hardness_witness(const MultimorphismGraph& g) {
  const int nv = static_cast<int>(g.vertices.size());
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < nv; ++i) {
      const Vertex& v = g.vertices[static_cast<std::size_t>(i)];
      if (!v.conservative_any()) continue;
      EdgeKey loop{i, i};
      bool certified = g.certified.count(loop) > 0;
      bool derived = g.derived_set.count(loop) > 0;
      if (pass == 0 ? !certified : (certified || !derived)) continue;
      ElemPair sup{v.a, v.b};
      if (!g.sigma.has(sup)) continue;

      HardnessWitness w;
      w.vertex = v;
      w.pair = sup;
      w.loop_certified = certified;
      if (certified) {
        w.loop_certificate = g.certified.at(loop);
      } else {
        auto de = find_derivation(g, loop);
        if (de) w.loop_trace = (*de)->premises;
        w.loop_certificate = materialize_edge(g, loop);
      }
      auto sit = g.sigma.certified.find(sup);
      if (sit != g.sigma.certified.end()) {
        w.sigma_certified = true;
        w.sigma_certificate = sit->second;
      } else {
        w.sigma_note = g.sigma.inferred.at(sup);
      }
      if (w.loop_certificate) {
        try {
          w.normalized = normalize_edge_function(g, *w.loop_certificate);
        } catch (const Error&) {
        }
      }
      return w;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Candidate extraction.
// ---------------------------------------------------------------------------

struct Candidate {
  std::variant<ChainOrder, OneDefectChain> structure;
  std::string provenance;

  BinaryOpPair pair() const {
    if (const auto* c = std::get_if<ChainOrder>(&structure)) return c->op_pair();
    return std::get<OneDefectChain>(structure).pair;
  }

  bool is_chain() const { return std::holds_alternative<ChainOrder>(structure); }
};

namespace graph_detail {

// 2-colorings of the non-isolated part of an induced conservative subgraph.
// Returns one R_I constraint set per coloring (bounded enumeration).
inline std::vector<std::vector<ElemPair>> coloring_orders(const MultimorphismGraph& g,
                                                          const std::vector<int>& verts) {
  std::vector<std::vector<ElemPair>> out;
  std::map<int, std::vector<int>> adj;
  std::set<int> non_isolated;
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i; j < verts.size(); ++j)
      if (g.has_edge(verts[i], verts[j])) {
        if (verts[i] == verts[j]) return out;  // a loop blocks every coloring
        adj[verts[i]].push_back(verts[j]);
        adj[verts[j]].push_back(verts[i]);
        non_isolated.insert(verts[i]);
        non_isolated.insert(verts[j]);
      }

  std::map<int, int> comp;
  std::vector<std::vector<int>> comps;
  for (int v : non_isolated) {
    if (comp.count(v)) continue;
    std::vector<int> stack{v}, members;
    comp[v] = static_cast<int>(comps.size());
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      members.push_back(u);
      for (int w : adj[u])
        if (!comp.count(w)) {
          comp[w] = comp[v];
          stack.push_back(w);
        }
    }
    comps.push_back(members);
  }

  // bipartition each component
  std::map<int, int> side;
  for (const auto& members : comps) {
    std::vector<int> stack{members[0]};
    side[members[0]] = 0;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int w : adj[u]) {
        if (!side.count(w)) {
          side[w] = 1 - side[u];
          stack.push_back(w);
        } else if (side[w] == side[u]) {
          return out;  // odd cycle
        }
      }
    }
  }

  const std::size_t k = comps.size();
  const std::size_t limit = k >= 10 ? 1024 : (std::size_t(1) << k);
  for (std::size_t mask = 0; mask < std::max<std::size_t>(1, limit); ++mask) {
    std::vector<ElemPair> ri;
    for (int v : non_isolated) {
      int flip = (mask >> static_cast<std::size_t>(comp[v])) & 1;
      if ((side[v] ^ flip) == 0) {
        const Vertex& vx = g.vertices[static_cast<std::size_t>(v)];
        ri.emplace_back(vx.fimg, vx.gimg);  // fimg below gimg
      }
    }
    std::sort(ri.begin(), ri.end());
    out.push_back(std::move(ri));
    if (k == 0) break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// True when no certified or derived edge (or loop) lies inside the vertex
// family of the candidate pair.
inline bool family_edge_free(const MultimorphismGraph& g, const BinaryOpPair& pair) {
  const int d = g.language.domain.size();
  std::vector<int> family;
  for (Elem e = 0; e < d; ++e) family.push_back(g.vertex_index(Vertex{e, e, e, e}));
  for (Elem a = 0; a < d; ++a)
    for (Elem b = a + 1; b < d; ++b)
      family.push_back(g.vertex_index(Vertex{a, b, pair.f(a, b), pair.g(a, b)}));
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = i; j < family.size(); ++j)
      if (g.has_edge(family[i], family[j])) return false;
  return true;
}

}  // namespace graph_detail

// Chain candidates from 2-colorings of the certified conservative subgraph,
// 1-defect candidates from colorings with one support pair removed. Heuristic
// by construction; callers verify each candidate directly.
inline std::vector<Candidate> extract_candidates(const MultimorphismGraph& g) {
  const int d = g.language.domain.size();
  std::vector<Candidate> out;
  std::set<std::pair<std::vector<Elem>, std::vector<Elem>>> seen;  // (f,g) tables

  auto emit = [&](std::variant<ChainOrder, OneDefectChain> s, std::string prov) {
    Candidate c{std::move(s), std::move(prov)};
    BinaryOpPair p = c.pair();
    if (!seen.insert({p.f.table, p.g.table}).second) return;
    if (!graph_detail::family_edge_free(g, p)) return;
    out.push_back(std::move(c));
  };

  std::vector<int> conservative;
  for (std::size_t i = 0; i < g.vertices.size(); ++i)
    if (g.vertices[i].conservative_any()) conservative.push_back(static_cast<int>(i));

  auto respects = [](const std::vector<ElemPair>& ri, auto&& less) {
    for (ElemPair p : ri)
      if (!less(p.first, p.second)) return false;
    return true;
  };

  for (const auto& ri : graph_detail::coloring_orders(g, conservative)) {
    for (const auto& chain : enumerate_chains(g.language.domain)) {
      auto pos = chain.positions();
      if (respects(ri, [&](Elem x, Elem y) {
            return pos[static_cast<std::size_t>(x)] < pos[static_cast<std::size_t>(y)];
          }))
        emit(chain, "2-coloring linear extension: " + chain.describe(g.language.domain));
    }
  }

  if (d == 4) {
    for (ElemPair defect : sigma_all(d)) {
      std::vector<int> sub;
      for (int v : conservative) {
        ElemPair sup = g.support(v);
        if (sup == defect) continue;
        sub.push_back(v);
      }
      for (const auto& ri : graph_detail::coloring_orders(g, sub)) {
        for (const auto& odc : enumerate_one_defect(g.language.domain)) {
          if (!(ElemPair{odc.defect_lo, odc.defect_hi} == defect)) continue;
          if (!respects(ri, [&](Elem x, Elem y) { return odc.less(x, y); })) continue;
          emit(odc, "defect {" + g.language.domain.label(defect.first) + "," +
                        g.language.domain.label(defect.second) +
                        "} coloring extension: " + odc.describe(g.language.domain));
        }
      }
    }
  }
  return out;
}

// Sound filter: keeps candidates that verify directly against the language.
inline std::vector<Candidate> verify_candidates(const MultimorphismGraph& g,
                                                const std::vector<Candidate>& cands) {
  std::vector<Candidate> out;
  for (const auto& c : cands)
    if (is_multimorphism(c.pair(), g.language).ok) out.push_back(c);
  return out;
}

// ---------------------------------------------------------------------------
// Output formats.
// ---------------------------------------------------------------------------

inline std::string graph_to_dot(const MultimorphismGraph& g) {
  std::string s = "graph partial_multimorphisms {\n";
  const Domain& dom = g.language.domain;
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    const Vertex& v = g.vertices[i];
    bool used = false;
    for (const auto& [k, c] : g.certified)
      if (k.first == static_cast<int>(i) || k.second == static_cast<int>(i)) used = true;
    for (const auto& k : g.derived_set)
      if (k.first == static_cast<int>(i) || k.second == static_cast<int>(i)) used = true;
    if (!used && !v.conservative_any()) continue;
    s += "  v" + std::to_string(i) + " [label=\"" + v.id(dom) + "\"";
    if (v.conservative_any()) s += ", shape=box";
    if (v.singleton()) s += ", shape=circle";
    s += "];\n";
  }
  for (const auto& [k, c] : g.certified)
    s += "  v" + std::to_string(k.first) + " -- v" + std::to_string(k.second) + ";\n";
  for (const auto& de : g.derived)
    s += "  v" + std::to_string(de.edge.first) + " -- v" + std::to_string(de.edge.second) +
         " [style=dashed, label=\"" + de.rule + "\"];\n";
  s += "}\n";
  return s;
}

inline Json edge_certificate_to_json(const MultimorphismGraph& g, const EdgeCertificate& c) {
  Json j;
  j["u"] = c.u.id(g.language.domain);
  j["v"] = c.v.id(g.language.domain);
  j["gadget"] = serialize_instance_json(g.ext, c.gadget);
  Json rows = Json::array();
  for (Elem x = 0; x < c.table.dsize; ++x) {
    Json row = Json::array();
    for (Elem y = 0; y < c.table.dsize; ++y) row.push_back(format_rational(c.table.at(x, y)));
    rows.push_back(std::move(row));
  }
  j["table"] = std::move(rows);
  return j;
}

inline Json graph_to_json(const MultimorphismGraph& g) {
  Json j;
  const Domain& dom = g.language.domain;
  j["vertices"] = Json::array();
  for (const auto& v : g.vertices) j["vertices"].push_back(v.id(dom));
  j["certified_edges"] = Json::array();
  for (const auto& [k, c] : g.certified) {
    Json e = edge_certificate_to_json(g, c);
    e["key"] = Json::array({k.first, k.second});
    j["certified_edges"].push_back(std::move(e));
  }
  j["derived_edges"] = Json::array();
  for (const auto& de : g.derived) {
    Json e;
    e["key"] = Json::array({de.edge.first, de.edge.second});
    e["rule"] = de.rule;
    Json prem = Json::array();
    for (EdgeKey p : de.premises) prem.push_back(Json::array({p.first, p.second}));
    e["premises"] = std::move(prem);
    Json sig = Json::array();
    for (ElemPair p : de.sigma_used)
      sig.push_back(Json::array({dom.label(p.first), dom.label(p.second)}));
    e["sigma_used"] = std::move(sig);
    j["derived_edges"].push_back(std::move(e));
  }
  j["sigma_certified"] = Json::array();
  for (const auto& [p, cert] : g.sigma.certified) {
    Json s;
    s["pair"] = Json::array({dom.label(p.first), dom.label(p.second)});
    s["var"] = cert.gadget.variables[static_cast<std::size_t>(cert.var)];
    s["gadget"] = serialize_instance_json(g.ext, cert.gadget);
    j["sigma_certified"].push_back(std::move(s));
  }
  j["sigma_inferred"] = Json::array();
  for (const auto& [p, note] : g.sigma.inferred) {
    Json s;
    s["pair"] = Json::array({dom.label(p.first), dom.label(p.second)});
    s["note"] = note;
    j["sigma_inferred"].push_back(std::move(s));
  }
  j["disjunctions"] = Json::array();
  for (const auto& dn : g.disjunctions) {
    Json s;
    s["rule"] = dn.rule;
    s["satisfied"] = dn.satisfied;
    Json prem = Json::array();
    for (EdgeKey p : dn.premises) prem.push_back(Json::array({p.first, p.second}));
    s["premises"] = std::move(prem);
    Json dis = Json::array();
    for (const auto& con : dn.disjuncts) {
      Json cj = Json::array();
      for (EdgeKey p : con) cj.push_back(Json::array({p.first, p.second}));
      dis.push_back(std::move(cj));
    }
    s["disjuncts"] = std::move(dis);
    j["disjunctions"].push_back(std::move(s));
  }
  j["incomplete"] = g.incomplete;
  j["gadgets_scanned"] = g.gadgets_scanned;
  return j;
}

}  // namespace mincsp
