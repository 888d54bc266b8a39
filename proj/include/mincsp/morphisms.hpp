#pragma once

#include <mincsp/language.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mincsp {

struct BinaryOp {
  int dsize = 0;
  std::vector<Elem> table;  // row-major in domain order

  BinaryOp() = default;
  explicit BinaryOp(int d) : dsize(d), table(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0) {}

  Elem operator()(Elem x, Elem y) const {
    return table[static_cast<std::size_t>(x) * static_cast<std::size_t>(dsize) + static_cast<std::size_t>(y)];
  }
  Elem& at(Elem x, Elem y) {
    return table[static_cast<std::size_t>(x) * static_cast<std::size_t>(dsize) + static_cast<std::size_t>(y)];
  }

  bool idempotent() const {
    for (Elem x = 0; x < dsize; ++x)
      if ((*this)(x, x) != x) return false;
    return true;
  }
  bool commutative() const {
    for (Elem x = 0; x < dsize; ++x)
      for (Elem y = x + 1; y < dsize; ++y)
        if ((*this)(x, y) != (*this)(y, x)) return false;
    return true;
  }

  bool operator==(const BinaryOp&) const = default;
};

// Idempotent, commutative, and f(f(x,y),x) = f(x,y) everywhere.
inline bool check_2semilattice(const BinaryOp& f) {
  if (!f.idempotent() || !f.commutative()) return false;
  for (Elem x = 0; x < f.dsize; ++x)
    for (Elem y = 0; y < f.dsize; ++y)
      if (f(f(x, y), x) != f(x, y)) return false;
  return true;
}

struct BinaryOpPair {
  BinaryOp f, g;
  bool operator==(const BinaryOpPair&) const = default;
};

struct ChainOrder {
  std::vector<Elem> order;  // order[0] is the least element

  int dsize() const { return static_cast<int>(order.size()); }

  std::vector<int> positions() const {
    std::vector<int> pos(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    return pos;
  }

  BinaryOpPair op_pair() const {
    const int d = dsize();
    auto pos = positions();
    BinaryOpPair p{BinaryOp(d), BinaryOp(d)};
    for (Elem x = 0; x < d; ++x)
      for (Elem y = 0; y < d; ++y) {
        bool xle = pos[static_cast<std::size_t>(x)] <= pos[static_cast<std::size_t>(y)];
        p.f.at(x, y) = xle ? x : y;
        p.g.at(x, y) = xle ? y : x;
      }
    return p;
  }

  std::string describe(const Domain& dom) const {
    std::string s;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i) s += "<";
      s += dom.label(order[i]);
    }
    return s;
  }

  bool operator==(const ChainOrder&) const = default;
};

// All |D|! chains, in lexicographic order of the order sequence.
inline std::vector<ChainOrder> enumerate_chains(const Domain& dom) {
  std::vector<Elem> perm(static_cast<std::size_t>(dom.size()));
  for (Elem e = 0; e < dom.size(); ++e) perm[static_cast<std::size_t>(e)] = e;
  std::vector<ChainOrder> out;
  do {
    out.push_back(ChainOrder{perm});
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Almost-total order: a single incomparable pair {defect_lo, defect_hi}
// inserted at one gap of a chain on the remaining elements. Off the defect the
// operations are glb/lub; on it they map to the two forced outside elements.
struct OneDefectChain {
  Elem defect_lo = -1, defect_hi = -1;  // defect pair, domain-index order
  std::vector<Elem> rest;               // remaining elements, increasing in the order
  int gap = 0;                          // antichain position: below rest[gap], or at the top
  BinaryOpPair pair;

  enum class Placement { Minimal, Interior, Maximal };

  // Maximal: defect above every comparable element; Minimal: below; Interior:
  // strictly between two comparable elements (the product-lattice case at |D|=4).
  Placement placement() const {
    if (gap == 0) return Placement::Minimal;
    if (gap == static_cast<int>(rest.size())) return Placement::Maximal;
    return Placement::Interior;
  }

  bool in_defect(Elem x) const { return x == defect_lo || x == defect_hi; }

  // Rank used for comparisons: defect elements share the rank of their gap.
  int rank(Elem x) const {
    if (in_defect(x)) return gap;
    for (std::size_t i = 0; i < rest.size(); ++i)
      if (rest[i] == x) return static_cast<int>(i) + (static_cast<int>(i) >= gap ? 1 : 0);
    return -1;
  }

  bool comparable(Elem x, Elem y) const { return x == y || !in_defect(x) || !in_defect(y); }

  bool less(Elem x, Elem y) const { return comparable(x, y) && x != y && rank(x) < rank(y); }

  std::string describe(const Domain& dom) const {
    std::string s = "defect{" + dom.label(defect_lo) + "," + dom.label(defect_hi) + "} ";
    for (int i = 0; i <= static_cast<int>(rest.size()); ++i) {
      if (i == gap) {
        if (i) s += "<";
        s += "{" + dom.label(defect_lo) + "," + dom.label(defect_hi) + "}";
      }
      if (i < static_cast<int>(rest.size())) {
        if (i || gap == 0) s += "<";
        s += dom.label(rest[static_cast<std::size_t>(i)]);
      }
    }
    return s;
  }
};

namespace detail {

inline OneDefectChain make_one_defect(int dsize, Elem lo, Elem hi, std::vector<Elem> rest, int gap) {
  OneDefectChain c;
  c.defect_lo = lo;
  c.defect_hi = hi;
  c.rest = std::move(rest);
  c.gap = gap;
  c.pair.f = BinaryOp(dsize);
  c.pair.g = BinaryOp(dsize);
  for (Elem x = 0; x < dsize; ++x)
    for (Elem y = 0; y < dsize; ++y) {
      if (x == y) {
        c.pair.f.at(x, y) = x;
        c.pair.g.at(x, y) = x;
      } else if (c.in_defect(x) && c.in_defect(y)) {
        c.pair.f.at(x, y) = c.rest[0];
        c.pair.g.at(x, y) = c.rest[1];
      } else {
        bool xless = c.rank(x) < c.rank(y);
        c.pair.f.at(x, y) = xless ? x : y;
        c.pair.g.at(x, y) = xless ? y : x;
      }
    }
  return c;
}

}  // namespace detail

// All 1-defect chains on a 4-element domain: 6 defect pairs x 2 orders of the
// remaining elements x 3 antichain positions. The defect images are forced to
// the two comparable elements in order.
inline std::vector<OneDefectChain> enumerate_one_defect(const Domain& dom) {
  const int d = dom.size();
  if (d < 3) throw PreconditionError("1-defect chains need at least 3 elements");
  if (d == 3) return {};  // a single outside element cannot carry two distinct images
  if (d != 4) throw PreconditionError("1-defect enumeration is implemented for |D| = 4");
  std::vector<OneDefectChain> out;
  for (Elem lo = 0; lo < d; ++lo)
    for (Elem hi = lo + 1; hi < d; ++hi) {
      std::vector<Elem> others;
      for (Elem e = 0; e < d; ++e)
        if (e != lo && e != hi) others.push_back(e);
      for (int swap = 0; swap < 2; ++swap) {
        std::vector<Elem> rest = others;
        if (swap) std::swap(rest[0], rest[1]);
        for (int gap = 0; gap <= 2; ++gap)
          out.push_back(detail::make_one_defect(d, lo, hi, rest, gap));
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Multimorphism checking.
// ---------------------------------------------------------------------------

struct MmViolation {
  int function = -1;
  Tuple x, y;
};

struct MmCheck {
  bool ok = true;
  std::optional<MmViolation> violation;
};

inline int hamming(const Tuple& x, const Tuple& y) {
  int h = 0;
  for (std::size_t i = 0; i < x.size(); ++i) h += x[i] != y[i];
  return h;
}

namespace detail {

// Scans all tuple pairs of one function; keeps the (Hamming distance, lex)
// minimal violation.
inline std::optional<MmViolation> check_function(const BinaryOpPair& p, const CostFunction& f,
                                                 int fi, int d) {
  std::optional<MmViolation> best;
  int best_h = 0;
  const std::size_t n = f.table_size();
  Tuple x(static_cast<std::size_t>(f.arity)), y(static_cast<std::size_t>(f.arity));
  for (std::size_t xi = 0; xi < n; ++xi) {
    x = decode_tuple(xi, d, f.arity);
    for (std::size_t yi = 0; yi < n; ++yi) {
      y = decode_tuple(yi, d, f.arity);
      std::size_t fidx = 0, gidx = 0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        fidx = fidx * static_cast<std::size_t>(d) + static_cast<std::size_t>(p.f(x[j], y[j]));
        gidx = gidx * static_cast<std::size_t>(d) + static_cast<std::size_t>(p.g(x[j], y[j]));
      }
      if (f.value(fidx) + f.value(gidx) > f.value(xi) + f.value(yi)) {
        int h = hamming(x, y);
        if (!best || h < best_h) {
          best = MmViolation{fi, x, y};
          best_h = h;
        }
      }
    }
  }
  return best;
}

}  // namespace detail

inline MmCheck is_multimorphism(const BinaryOpPair& p, const Language& lang,
                                std::uint64_t budget = std::uint64_t(1) << 32);

inline MmCheck is_multimorphism_of(const BinaryOpPair& p, const CostFunction& f, int dsize) {
  MmCheck res;
  auto v = detail::check_function(p, f, 0, dsize);
  if (v) {
    res.ok = false;
    res.violation = std::move(v);
  }
  return res;
}

// The family for which the binary-restriction shortcut is valid.
using RestrictionFamily = std::variant<ChainOrder, OneDefectChain>;

inline const BinaryOpPair& family_pair(const RestrictionFamily& fam, BinaryOpPair& storage) {
  if (const auto* c = std::get_if<ChainOrder>(&fam)) {
    storage = c->op_pair();
    return storage;
  }
  return std::get<OneDefectChain>(fam).pair;
}

// Checks every binary function obtained from h by fixing all but two
// coordinates. Equivalent to the direct check for chains and 1-defect chains.
inline MmCheck binary_restriction_check(const RestrictionFamily& fam, const CostFunction& h,
                                        int dsize) {
  BinaryOpPair storage;
  const BinaryOpPair& p = family_pair(fam, storage);
  const int k = h.arity;
  MmCheck res;
  if (k <= 2) return is_multimorphism_of(p, h, dsize);

  std::optional<MmViolation> best;
  int best_h = 3;
  Tuple x(static_cast<std::size_t>(k)), y(static_cast<std::size_t>(k));
  const std::size_t fixed_count = pow_u64(static_cast<std::uint64_t>(dsize), k - 2);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      for (std::size_t c = 0; c < fixed_count; ++c) {
        Tuple fixed = decode_tuple(c, dsize, k - 2);
        int fp = 0;
        for (int t = 0; t < k; ++t)
          if (t != i && t != j) {
            x[static_cast<std::size_t>(t)] = fixed[static_cast<std::size_t>(fp)];
            y[static_cast<std::size_t>(t)] = fixed[static_cast<std::size_t>(fp)];
            ++fp;
          }
        for (Elem ui = 0; ui < dsize; ++ui)
          for (Elem uj = 0; uj < dsize; ++uj)
            for (Elem vi = 0; vi < dsize; ++vi)
              for (Elem vj = 0; vj < dsize; ++vj) {
                x[static_cast<std::size_t>(i)] = ui;
                x[static_cast<std::size_t>(j)] = uj;
                y[static_cast<std::size_t>(i)] = vi;
                y[static_cast<std::size_t>(j)] = vj;
                std::size_t xi = encode_tuple(x, dsize), yi = encode_tuple(y, dsize);
                std::size_t fidx = 0, gidx = 0;
                for (std::size_t t = 0; t < x.size(); ++t) {
                  fidx = fidx * static_cast<std::size_t>(dsize) + static_cast<std::size_t>(p.f(x[t], y[t]));
                  gidx = gidx * static_cast<std::size_t>(dsize) + static_cast<std::size_t>(p.g(x[t], y[t]));
                }
                if (h.value(fidx) + h.value(gidx) > h.value(xi) + h.value(yi)) {
                  int hd = hamming(x, y);
                  if (!best || hd < best_h ||
                      (hd == best_h && std::make_pair(xi, yi) <
                                           std::make_pair(encode_tuple(best->x, dsize),
                                                          encode_tuple(best->y, dsize)))) {
                    best = MmViolation{0, x, y};
                    best_h = hd;
                  }
                }
              }
      }
    }
  }
  if (best) {
    res.ok = false;
    res.violation = std::move(best);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Pair classification and JSON format: two row-major tables in domain order.
// ---------------------------------------------------------------------------

inline std::optional<ChainOrder> as_chain(const BinaryOpPair& p) {
  const int d = p.f.dsize;
  if (!p.f.idempotent() || !p.g.idempotent()) return std::nullopt;
  // reconstruct the order from f: x <= y iff f(x,y) = x and g(x,y) = y
  std::vector<int> below(static_cast<std::size_t>(d), 0);
  for (Elem x = 0; x < d; ++x)
    for (Elem y = 0; y < d; ++y) {
      if (x == y) continue;
      bool xley = p.f(x, y) == x && p.f(y, x) == x && p.g(x, y) == y && p.g(y, x) == y;
      bool ylex = p.f(x, y) == y && p.f(y, x) == y && p.g(x, y) == x && p.g(y, x) == x;
      if (!xley && !ylex) return std::nullopt;
      if (ylex) ++below[static_cast<std::size_t>(x)];
    }
  ChainOrder c;
  c.order.assign(static_cast<std::size_t>(d), -1);
  for (Elem x = 0; x < d; ++x) {
    int r = below[static_cast<std::size_t>(x)];
    if (r < 0 || r >= d || c.order[static_cast<std::size_t>(r)] != -1) return std::nullopt;
    c.order[static_cast<std::size_t>(r)] = x;
  }
  if (c.op_pair() == p) return c;
  return std::nullopt;
}

inline std::optional<OneDefectChain> as_one_defect(const BinaryOpPair& p, const Domain& dom) {
  if (dom.size() != 4) return std::nullopt;
  for (const auto& c : enumerate_one_defect(dom))
    if (c.pair == p) return c;
  return std::nullopt;
}

inline Json binary_op_to_json(const Language& lang, const BinaryOp& op) {
  Json rows = Json::array();
  for (Elem x = 0; x < op.dsize; ++x) {
    Json row = Json::array();
    for (Elem y = 0; y < op.dsize; ++y) row.push_back(lang.domain.label(op(x, y)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json pair_to_json(const Language& lang, const BinaryOpPair& p) {
  Json j;
  j["f"] = binary_op_to_json(lang, p.f);
  j["g"] = binary_op_to_json(lang, p.g);
  return j;
}

inline BinaryOp binary_op_from_json(const Language& lang, const Json& rows) {
  const int d = lang.domain.size();
  if (!rows.is_array() || static_cast<int>(rows.size()) != d)
    throw ParseError("operation table must have one row per domain element");
  BinaryOp op(d);
  for (Elem x = 0; x < d; ++x) {
    const auto& row = rows[static_cast<std::size_t>(x)];
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      throw ParseError("operation table row has wrong length");
    for (Elem y = 0; y < d; ++y) {
      auto e = lang.domain.index_of(row[static_cast<std::size_t>(y)].get<std::string>());
      if (!e) throw ParseError("unknown label in operation table");
      op.at(x, y) = *e;
    }
  }
  return op;
}

inline BinaryOpPair pair_from_json(const Language& lang, const Json& j) {
  if (!j.contains("f") || !j.contains("g")) throw ParseError("multimorphism file needs f and g tables");
  return BinaryOpPair{binary_op_from_json(lang, j.at("f")), binary_op_from_json(lang, j.at("g"))};
}

inline BinaryOpPair parse_pair(const std::string& text, const Language& lang) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("multimorphism file: ") + e.what());
  }
  return pair_from_json(lang, j);
}

// Tuple-wise inequality check over every function; on failure reports the
// first failing function with its minimal counterexample. Chains and 1-defect
// chains take the binary-restriction shortcut at arity 3 and above; both
// paths produce the same minimal counterexample.
inline MmCheck is_multimorphism(const BinaryOpPair& p, const Language& lang,
                                std::uint64_t budget) {
  const int d = lang.domain.size();
  std::uint64_t cost = 0;
  for (const auto& f : lang.functions) {
    std::uint64_t t = pow_u64(static_cast<std::uint64_t>(d), 2 * f.arity);
    cost += t;
    if (cost > budget) throw BudgetError("multimorphism check budget exceeded");
  }
  std::optional<RestrictionFamily> fam;
  if (auto c = as_chain(p)) {
    fam = *c;
  } else if (d == 4) {
    if (auto o = as_one_defect(p, lang.domain)) fam = *o;
  }
  MmCheck res;
  for (std::size_t fi = 0; fi < lang.functions.size(); ++fi) {
    const CostFunction& f = lang.functions[fi];
    std::optional<MmViolation> v;
    if (fam && f.arity >= 3) {
      MmCheck r = binary_restriction_check(*fam, f, d);
      if (!r.ok) {
        v = std::move(r.violation);
        v->function = static_cast<int>(fi);
      }
    } else {
      v = detail::check_function(p, f, static_cast<int>(fi), d);
    }
    if (v) {
      res.ok = false;
      res.violation = std::move(v);
      return res;
    }
  }
  return res;
}

}  // namespace mincsp
