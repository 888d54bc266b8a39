#pragma once

#include <mincsp/core_endo.hpp>
#include <mincsp/morphisms.hpp>
#include <mincsp/oracle.hpp>
#include <mincsp/sfm.hpp>

#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace mincsp {

// ---------------------------------------------------------------------------
// Congruences of a binary operation pair.
// ---------------------------------------------------------------------------

struct Congruence {
  std::vector<int> class_of;  // element -> class id, contiguous from 0
  int num_classes = 0;
};

inline bool is_congruence(const BinaryOpPair& p, const Congruence& th) {
  const int d = p.f.dsize;
  for (Elem x1 = 0; x1 < d; ++x1)
    for (Elem x2 = 0; x2 < d; ++x2) {
      if (th.class_of[static_cast<std::size_t>(x1)] != th.class_of[static_cast<std::size_t>(x2)]) continue;
      for (Elem y1 = 0; y1 < d; ++y1)
        for (Elem y2 = 0; y2 < d; ++y2) {
          if (th.class_of[static_cast<std::size_t>(y1)] != th.class_of[static_cast<std::size_t>(y2)]) continue;
          if (th.class_of[static_cast<std::size_t>(p.f(x1, y1))] !=
                  th.class_of[static_cast<std::size_t>(p.f(x2, y2))] ||
              th.class_of[static_cast<std::size_t>(p.g(x1, y1))] !=
                  th.class_of[static_cast<std::size_t>(p.g(x2, y2))])
            return false;
        }
    }
  return true;
}

// Quotient tables; nullopt when th is not a congruence of p.
inline std::optional<BinaryOpPair> quotient_pair(const BinaryOpPair& p, const Congruence& th) {
  if (!is_congruence(p, th)) return std::nullopt;
  const int d = p.f.dsize;
  std::vector<Elem> rep(static_cast<std::size_t>(th.num_classes), -1);
  for (Elem x = 0; x < d; ++x) {
    auto c = static_cast<std::size_t>(th.class_of[static_cast<std::size_t>(x)]);
    if (rep[c] < 0) rep[c] = x;
  }
  BinaryOpPair q{BinaryOp(th.num_classes), BinaryOp(th.num_classes)};
  for (int cx = 0; cx < th.num_classes; ++cx)
    for (int cy = 0; cy < th.num_classes; ++cy) {
      q.f.at(cx, cy) = th.class_of[static_cast<std::size_t>(
          p.f(rep[static_cast<std::size_t>(cx)], rep[static_cast<std::size_t>(cy)]))];
      q.g.at(cx, cy) = th.class_of[static_cast<std::size_t>(
          p.g(rep[static_cast<std::size_t>(cx)], rep[static_cast<std::size_t>(cy)]))];
    }
  return q;
}

// Classes {rest, defect_lo, defect_hi} used for the maximal/minimal defect
// placements. Class 0 collapses the comparable elements.
inline Congruence one_defect_congruence(const OneDefectChain& odc, int dsize) {
  Congruence th;
  th.class_of.assign(static_cast<std::size_t>(dsize), 0);
  th.class_of[static_cast<std::size_t>(odc.defect_lo)] = 1;
  th.class_of[static_cast<std::size_t>(odc.defect_hi)] = 2;
  th.num_classes = 3;
  return th;
}

// ---------------------------------------------------------------------------
// Bisubmodular reference minimiser: capped exhaustive scan over {0,1,2}^n.
// ---------------------------------------------------------------------------

struct BisubmodularResult {
  BigInt value;
  std::vector<int> tuple;  // lexicographically least argmin
};

inline BisubmodularResult minimize_bisubmodular_bruteforce(
    int n, const std::function<BigInt(const std::vector<int>&)>& oracle, int cap = 14) {
  if (n > cap) throw BudgetError("bisubmodular brute force cap exceeded");
  std::vector<int> t(static_cast<std::size_t>(n), 0);
  BisubmodularResult res;
  res.value = oracle(t);
  res.tuple = t;
  for (;;) {
    int i = n - 1;
    while (i >= 0 && t[static_cast<std::size_t>(i)] == 2) {
      t[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++t[static_cast<std::size_t>(i)];
    BigInt v = oracle(t);
    if (v < res.value) {
      res.value = v;
      res.tuple = t;
    }
  }
  return res;
}

// The standard bisubmodular operation pair on {0,1,2}: min/max collapsing the
// incomparable pair {1,2} to 0.
inline BinaryOpPair bisubmodular_ops() {
  BinaryOpPair p{BinaryOp(3), BinaryOp(3)};
  for (Elem x = 0; x < 3; ++x)
    for (Elem y = 0; y < 3; ++y) {
      if ((x == 1 && y == 2) || (x == 2 && y == 1)) {
        p.f.at(x, y) = 0;
        p.g.at(x, y) = 0;
      } else {
        p.f.at(x, y) = std::min(x, y);
        p.g.at(x, y) = std::max(x, y);
      }
    }
  return p;
}

// ---------------------------------------------------------------------------
// Multimorphism function minimisation over mixed coordinate structures.
// ---------------------------------------------------------------------------

struct MfmChainCoord {
  std::vector<Elem> order;  // elements of this coordinate, increasing
};

struct MfmDefectCoord {
  OneDefectChain odc;
};

using MfmCoord = std::variant<MfmChainCoord, MfmDefectCoord>;

struct MfmProblem {
  std::vector<MfmCoord> coords;
  std::function<BigInt(const std::vector<Elem>&)> oracle;
  BigInt range_bound = 1;
};

struct MfmOptions {
  SfmOptions sfm;
  int bisubmodular_cap = 14;
};

struct MfmResult {
  BigInt value;
  std::vector<Elem> argmin;
  bool used_quotient = false;
};

// The operation pair acting on one coordinate, as tables on ambient elements.
inline BinaryOpPair mfm_coord_pair(const MfmCoord& coord) {
  if (const auto* ch = std::get_if<MfmChainCoord>(&coord)) {
    int d = 0;
    for (Elem e : ch->order) d = std::max(d, e + 1);
    BinaryOpPair pr{BinaryOp(d), BinaryOp(d)};
    std::vector<int> pos(static_cast<std::size_t>(d), -1);
    for (std::size_t k = 0; k < ch->order.size(); ++k)
      pos[static_cast<std::size_t>(ch->order[k])] = static_cast<int>(k);
    for (Elem x : ch->order)
      for (Elem y : ch->order) {
        bool le = pos[static_cast<std::size_t>(x)] <= pos[static_cast<std::size_t>(y)];
        pr.f.at(x, y) = le ? x : y;
        pr.g.at(x, y) = le ? y : x;
      }
    return pr;
  }
  return std::get<MfmDefectCoord>(coord).odc.pair;
}

// On-demand validity check of the defining inequality (small problems only).
inline bool verify_mfm_inequality(const MfmProblem& p, std::uint64_t budget = 1 << 24) {
  const std::size_t n = p.coords.size();
  std::vector<std::vector<Elem>> doms;
  std::uint64_t total = 1;
  for (const auto& c : p.coords) {
    if (const auto* ch = std::get_if<MfmChainCoord>(&c)) {
      doms.push_back(ch->order);
    } else {
      const auto& odc = std::get<MfmDefectCoord>(c).odc;
      std::vector<Elem> all;
      for (Elem e = 0; e < odc.pair.f.dsize; ++e) all.push_back(e);
      doms.push_back(all);
    }
    if (total > budget / std::max<std::size_t>(1, doms.back().size()))
      throw BudgetError("MFM inequality check budget exceeded");
    total *= doms.back().size();
  }
  if (total != 0 && total > budget / total)
    throw BudgetError("MFM inequality check budget exceeded");

  std::vector<BinaryOpPair> pairs;
  for (const auto& c : p.coords) pairs.push_back(mfm_coord_pair(c));

  auto tuple_at = [&](std::uint64_t idx) {
    std::vector<Elem> t(n);
    for (std::size_t i = n; i-- > 0;) {
      t[i] = doms[i][idx % doms[i].size()];
      idx /= doms[i].size();
    }
    return t;
  };

  std::vector<Elem> fx(n), gx(n);
  for (std::uint64_t a = 0; a < total; ++a) {
    std::vector<Elem> x = tuple_at(a);
    BigInt hx = p.oracle(x);
    for (std::uint64_t b = 0; b < total; ++b) {
      std::vector<Elem> y = tuple_at(b);
      for (std::size_t i = 0; i < n; ++i) {
        fx[i] = pairs[i].f(x[i], y[i]);
        gx[i] = pairs[i].g(x[i], y[i]);
      }
      if (p.oracle(fx) + p.oracle(gx) > hx + p.oracle(y)) return false;
    }
  }
  return true;
}

namespace solver_detail {

// Lattice view of one coordinate as a product of chains.
struct CoordSites {
  std::vector<int> sizes;                 // chain lengths
  std::vector<Elem> decode;               // flat levels index -> element
  std::vector<std::vector<int>> encode_;  // element -> levels (by ambient elem)

  Elem decode_at(const std::vector<int>& levels, std::size_t offset) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k)
      idx = idx * static_cast<std::size_t>(sizes[k]) + static_cast<std::size_t>(levels[offset + k]);
    return decode[idx];
  }
};

inline CoordSites chain_sites(const std::vector<Elem>& order) {
  CoordSites cs;
  cs.sizes = {static_cast<int>(order.size())};
  cs.decode = order;
  return cs;
}

// The interior placement is the product of two 2-chains:
// (0,0) -> bottom, (1,0) -> defect_lo, (0,1) -> defect_hi, (1,1) -> top.
inline CoordSites product_sites(const OneDefectChain& odc) {
  CoordSites cs;
  cs.sizes = {2, 2};
  cs.decode = {odc.rest[0], odc.defect_hi, odc.defect_lo, odc.rest[1]};
  return cs;
}

struct ChainLikeProblem {
  std::vector<CoordSites> coords;
  std::vector<std::size_t> offsets;
  SfmProblem sfm;
};

inline ChainLikeProblem build_chain_like(const std::vector<CoordSites>& coords,
                                         const std::function<BigInt(const std::vector<Elem>&)>& oracle,
                                         const BigInt& range_bound) {
  ChainLikeProblem cp;
  cp.coords = coords;
  std::size_t off = 0;
  for (const auto& c : cp.coords) {
    cp.offsets.push_back(off);
    for (int s : c.sizes) cp.sfm.site_sizes.push_back(s);
    off += c.sizes.size();
  }
  cp.sfm.range_bound = range_bound;
  auto coords_copy = cp.coords;
  auto offsets_copy = cp.offsets;
  cp.sfm.oracle = [coords_copy, offsets_copy, oracle](const std::vector<int>& levels) {
    std::vector<Elem> x(coords_copy.size());
    for (std::size_t i = 0; i < coords_copy.size(); ++i)
      x[i] = coords_copy[i].decode_at(levels, offsets_copy[i]);
    return oracle(x);
  };
  return cp;
}

inline std::vector<Elem> decode_levels(const ChainLikeProblem& cp, const std::vector<int>& levels) {
  std::vector<Elem> x(cp.coords.size());
  for (std::size_t i = 0; i < cp.coords.size(); ++i)
    x[i] = cp.coords[i].decode_at(levels, cp.offsets[i]);
  return x;
}

}  // namespace solver_detail

inline MfmResult solve_mfm(const MfmProblem& p, const MfmOptions& opt = {}) {
  using namespace solver_detail;
  const std::size_t n = p.coords.size();

  std::vector<int> defected;  // coordinate indices needing the quotient route
  std::vector<CoordSites> sites(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (const auto* ch = std::get_if<MfmChainCoord>(&p.coords[i])) {
      sites[i] = chain_sites(ch->order);
    } else {
      const auto& odc = std::get<MfmDefectCoord>(p.coords[i]).odc;
      if (odc.placement() == OneDefectChain::Placement::Interior)
        sites[i] = product_sites(odc);
      else
        defected.push_back(static_cast<int>(i));
    }
  }

  MfmResult res;
  if (defected.empty()) {
    auto cp = build_chain_like(sites, p.oracle, p.range_bound);
    SfmResult sr = sfm_minimize(cp.sfm, opt.sfm);
    res.value = sr.value;
    res.argmin = decode_levels(cp, sr.levels);
    return res;
  }

  // Congruence quotient: defected coordinates collapse to three classes, every
  // other coordinate to a single class. Each quotient evaluation minimises the
  // block-restricted problem, which is a product of chains.
  res.used_quotient = true;
  auto block_solve = [&](const std::vector<int>& z) {
    std::vector<CoordSites> bs = sites;
    for (std::size_t k = 0; k < defected.size(); ++k) {
      const auto& odc = std::get<MfmDefectCoord>(p.coords[static_cast<std::size_t>(defected[k])]).odc;
      switch (z[k]) {
        case 0:
          bs[static_cast<std::size_t>(defected[k])] = chain_sites({odc.rest[0], odc.rest[1]});
          break;
        case 1:
          bs[static_cast<std::size_t>(defected[k])] = chain_sites({odc.defect_lo});
          break;
        default:
          bs[static_cast<std::size_t>(defected[k])] = chain_sites({odc.defect_hi});
          break;
      }
    }
    auto cp = build_chain_like(bs, p.oracle, p.range_bound);
    SfmResult sr = sfm_minimize(cp.sfm, opt.sfm);
    return std::make_pair(sr.value, decode_levels(cp, sr.levels));
  };

  auto quotient_oracle = [&](const std::vector<int>& z) { return block_solve(z).first; };
  BisubmodularResult br = minimize_bisubmodular_bruteforce(
      static_cast<int>(defected.size()), quotient_oracle, opt.bisubmodular_cap);
  auto [value, argmin] = block_solve(br.tuple);
  res.value = value;
  res.argmin = argmin;
  return res;
}

// ---------------------------------------------------------------------------
// Instance-level tractable solvers.
// ---------------------------------------------------------------------------

struct SolveOptions {
  MfmOptions mfm;
  OracleBudget oracle_budget;
  bool lexmin_witness = true;
};

namespace solver_detail {

struct PinInfo {
  bool infeasible = false;
  std::vector<Elem> pinned;  // -1 when free
};

// Tractable solvers accept constant unary constraints only.
inline PinInfo collect_pins(const Language& lang, const Instance& inst) {
  PinInfo info;
  info.pinned.assign(inst.variables.size(), -1);
  for (const auto& c : inst.constraints) {
    const Relation& r = lang.relations[static_cast<std::size_t>(c.relation)];
    if (r.arity != 1 || r.tuple_count() != 1)
      throw PreconditionError("tractable solver: crisp constraints other than pins are not supported");
    Elem e = 0;
    while (!r.contains(static_cast<std::size_t>(e))) ++e;
    auto v = static_cast<std::size_t>(c.scope[0]);
    if (info.pinned[v] != -1 && info.pinned[v] != e) info.infeasible = true;
    info.pinned[v] = e;
  }
  return info;
}

struct IntObjective {
  BigInt scale = 1;
  std::vector<BigInt> weights;
  BigInt total = 0;

  BigInt eval(const Language& lang, const Instance& inst, const std::vector<Elem>& x) const {
    const int d = lang.domain.size();
    BigInt m = 0;
    for (std::size_t ti = 0; ti < inst.terms.size(); ++ti) {
      const Term& t = inst.terms[ti];
      const CostFunction& f = lang.functions[static_cast<std::size_t>(t.function)];
      std::size_t idx = 0;
      for (int v : t.scope)
        idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(x[static_cast<std::size_t>(v)]);
      if (!f.is_zero(idx)) m += weights[ti];
    }
    return m;
  }
};

inline IntObjective int_objective(const Instance& inst) {
  IntObjective obj;
  for (const auto& t : inst.terms) obj.scale = lcm_big(obj.scale, denominator(t.weight));
  if (obj.scale == 0) obj.scale = 1;
  for (const auto& t : inst.terms) {
    obj.weights.push_back(numerator(t.weight) * (obj.scale / denominator(t.weight)));
    obj.total += obj.weights.back();
  }
  return obj;
}

using CoordFactory = std::function<MfmCoord(Elem pinned)>;  // pinned = -1 for free

inline std::optional<std::pair<Rational, Assignment>> solve_structured(
    const Language& lang, const Instance& inst, const CoordFactory& coord_of,
    const SolveOptions& opt) {
  PinInfo pins = collect_pins(lang, inst);
  if (pins.infeasible) return std::nullopt;

  IntObjective obj = int_objective(inst);
  auto run = [&](const std::vector<Elem>& pinned) {
    MfmProblem p;
    for (std::size_t v = 0; v < inst.variables.size(); ++v) p.coords.push_back(coord_of(pinned[v]));
    p.range_bound = obj.total;
    p.oracle = [&](const std::vector<Elem>& x) { return obj.eval(lang, inst, x); };
    return solve_mfm(p, opt.mfm);
  };

  MfmResult base = run(pins.pinned);
  Assignment witness = base.argmin;

  if (opt.lexmin_witness) {
    std::vector<Elem> fixed = pins.pinned;
    for (std::size_t v = 0; v < inst.variables.size(); ++v) {
      if (fixed[v] != -1) continue;
      for (Elem e = 0; e < lang.domain.size(); ++e) {
        fixed[v] = e;
        if (run(fixed).value == base.value) break;
        fixed[v] = -1;
      }
      if (fixed[v] == -1) throw Error("solver: lexmin refinement found no consistent value");
    }
    witness = fixed;
  }

  Rational value(base.value, obj.scale);
  auto check = measure(lang, inst, witness);
  if (!check || *check != value)
    throw CertificateError("solver: witness does not re-evaluate to the optimum");
  return std::make_pair(value, witness);
}

}  // namespace solver_detail

// Exact minimisation when every function of the language is submodular on the
// chain. Violations of that precondition surface as certificate failures.
inline std::optional<std::pair<Rational, Assignment>> solve_chain(const Language& lang,
                                                                  const Instance& inst,
                                                                  const ChainOrder& chain,
                                                                  const SolveOptions& opt = {}) {
  return solver_detail::solve_structured(
      lang, inst,
      [&](Elem pinned) -> MfmCoord {
        if (pinned >= 0) return MfmChainCoord{{pinned}};
        return MfmChainCoord{chain.order};
      },
      opt);
}

// Exact minimisation under a 1-defect chain multimorphism, via the congruence
// quotient for the maximal/minimal placements and the product encoding for the
// interior one.
inline std::optional<std::pair<Rational, Assignment>> solve_one_defect(
    const Language& lang, const Instance& inst, const OneDefectChain& odc,
    const SolveOptions& opt = {}) {
  auto chk = is_multimorphism(odc.pair, lang);
  if (!chk.ok)
    throw PreconditionError("solve_one_defect: pair is not a multimorphism of the language");
  return solver_detail::solve_structured(
      lang, inst,
      [&](Elem pinned) -> MfmCoord {
        if (pinned >= 0) return MfmChainCoord{{pinned}};
        return MfmDefectCoord{odc};
      },
      opt);
}

}  // namespace mincsp

#include <mincsp/classifier.hpp>

namespace mincsp {

using TractableStructure = std::variant<ChainOrder, OneDefectChain>;

inline std::optional<std::pair<Rational, Assignment>> solve_with_structure(
    const Language& lang, const Instance& inst, const TractableStructure& s,
    const SolveOptions& opt = {}) {
  if (const auto* c = std::get_if<ChainOrder>(&s)) return solve_chain(lang, inst, *c, opt);
  return solve_one_defect(lang, inst, std::get<OneDefectChain>(s), opt);
}

// Full dispatch: verified witness if given, otherwise the classifier's; pins
// are eliminated through the indicator reduction when the language is a core;
// everything else falls back to bounded brute force.
inline std::optional<std::pair<Rational, Assignment>> solve(
    const Language& lang, const Instance& inst,
    const std::optional<BinaryOpPair>& witness = std::nullopt, const SolveOptions& opt = {}) {
  bool pins = false, nonpin = false;
  for (const auto& c : inst.constraints) {
    const Relation& r = lang.relations[static_cast<std::size_t>(c.relation)];
    if (r.arity == 1 && r.tuple_count() == 1)
      pins = true;
    else
      nonpin = true;
  }
  if (nonpin) return solve_brute(lang, inst, opt.oracle_budget);

  std::optional<TractableStructure> structure;
  if (witness) {
    if (!is_multimorphism(*witness, lang).ok)
      throw PreconditionError("solve: witness is not a multimorphism of the language");
    if (auto c = as_chain(*witness)) {
      structure = *c;
    } else if (lang.domain.size() == 4) {
      if (auto o = as_one_defect(*witness, lang.domain)) structure = *o;
    }
  } else {
    ClassificationReport rep = classify(lang);
    if (rep.tractable()) {
      if (rep.core.domain.size() == lang.domain.size()) {
        const VerifiedWitness* w = rep.primary_witness();
        if (w->chain)
          structure = *w->chain;
        else if (w->one_defect)
          structure = *w->one_defect;
      } else if (!pins) {
        // crisp-free instances solve over the core; elements map back through
        // the composed retraction images
        std::vector<Elem> to_orig;
        for (Elem e = 0; e < lang.domain.size(); ++e) to_orig.push_back(e);
        for (const auto& step : rep.retraction) {
          std::vector<Elem> next;
          for (Elem e : step.image) next.push_back(to_orig[static_cast<std::size_t>(e)]);
          to_orig = std::move(next);
        }
        const VerifiedWitness* w = rep.primary_witness();
        TractableStructure core_structure =
            w->chain ? TractableStructure{*w->chain} : TractableStructure{*w->one_defect};
        auto sub = solve_with_structure(rep.core, inst, core_structure, opt);
        if (!sub) return std::nullopt;
        Assignment mapped;
        for (Elem e : sub->second) mapped.push_back(to_orig[static_cast<std::size_t>(e)]);
        auto check = measure(lang, inst, mapped);
        if (!check || *check != sub->first)
          throw CertificateError("solve: retracted witness does not re-evaluate");
        return std::make_pair(sub->first, mapped);
      }
    }
  }

  if (!structure) return solve_brute(lang, inst, opt.oracle_budget);

  if (pins && is_core(lang)) {
    ReduceResult red = reduce_constants(lang, inst, opt.oracle_budget);
    if (red.infeasible) return std::nullopt;
    SolveOptions inner = opt;
    inner.lexmin_witness = false;
    auto base = solve_with_structure(lang, red.instance, *structure, inner);
    if (!base) return std::nullopt;
    auto witness0 = red.recover(base->second);
    if (!witness0) throw CertificateError("solve: indicator recovery failed");
    auto m = measure(lang, inst, *witness0);
    if (!m || *m != base->first)
      throw CertificateError("solve: recovered witness does not re-evaluate");
    if (!opt.lexmin_witness) return std::make_pair(base->first, *witness0);
    // canonical witness: refine on the original instance with direct pins
    auto [ext, consts] = with_constants(lang);
    Instance work = inst;
    Assignment fixed(inst.variables.size(), -1);
    for (std::size_t v = 0; v < inst.variables.size(); ++v) {
      for (Elem e = 0; e < lang.domain.size(); ++e) {
        Instance trial = work;
        trial.constraints.push_back({consts[static_cast<std::size_t>(e)], {static_cast<int>(v)}});
        auto r = solve_with_structure(ext, trial, *structure, inner);
        if (r && r->first == base->first) {
          work = trial;
          fixed[v] = e;
          break;
        }
      }
      if (fixed[v] < 0) throw CertificateError("solve: lexmin refinement failed");
    }
    return std::make_pair(base->first, fixed);
  }

  return solve_with_structure(lang, inst, *structure, opt);
}

}  // namespace mincsp
