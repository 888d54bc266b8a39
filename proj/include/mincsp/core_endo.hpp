#pragma once

#include <mincsp/oracle.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mincsp {

struct Endomorphism {
  std::vector<Elem> map;

  Elem operator()(Elem e) const { return map[static_cast<std::size_t>(e)]; }

  bool injective() const {
    std::vector<char> seen(map.size(), 0);
    for (Elem e : map) {
      if (seen[static_cast<std::size_t>(e)]) return false;
      seen[static_cast<std::size_t>(e)] = 1;
    }
    return true;
  }

  bool idempotent() const {
    for (Elem x = 0; x < static_cast<Elem>(map.size()); ++x)
      if (map[static_cast<std::size_t>(map[static_cast<std::size_t>(x)])] !=
          map[static_cast<std::size_t>(x)])
        return false;
    return true;
  }

  int image_size() const {
    std::vector<char> seen(map.size(), 0);
    int n = 0;
    for (Elem e : map)
      if (!seen[static_cast<std::size_t>(e)]) {
        seen[static_cast<std::size_t>(e)] = 1;
        ++n;
      }
    return n;
  }

  std::vector<Elem> image() const {
    std::vector<char> seen(map.size(), 0);
    for (Elem e : map) seen[static_cast<std::size_t>(e)] = 1;
    std::vector<Elem> img;
    for (Elem e = 0; e < static_cast<Elem>(map.size()); ++e)
      if (seen[static_cast<std::size_t>(e)]) img.push_back(e);
    return img;
  }

  bool operator==(const Endomorphism&) const = default;
};

inline Endomorphism identity_endo(int dsize) {
  Endomorphism e;
  e.map.resize(static_cast<std::size_t>(dsize));
  for (Elem x = 0; x < dsize; ++x) e.map[static_cast<std::size_t>(x)] = x;
  return e;
}

// g after f: x -> g(f(x)).
inline Endomorphism compose(const Endomorphism& g, const Endomorphism& f) {
  Endomorphism r;
  r.map.resize(f.map.size());
  for (std::size_t i = 0; i < f.map.size(); ++i)
    r.map[i] = g.map[static_cast<std::size_t>(f.map[i])];
  return r;
}

// The map a -> b, identity elsewhere.
inline Endomorphism elementary_collapse(int dsize, Elem a, Elem b) {
  Endomorphism e = identity_endo(dsize);
  e.map[static_cast<std::size_t>(a)] = b;
  return e;
}

namespace detail {

inline std::vector<std::vector<Tuple>> zero_tuple_lists(const Language& lang) {
  std::vector<std::vector<Tuple>> lists;
  const int d = lang.domain.size();
  for (const auto& f : lang.functions) {
    std::vector<Tuple> zs;
    for (std::size_t idx = 0; idx < f.table_size(); ++idx)
      if (f.is_zero(idx)) zs.push_back(decode_tuple(idx, d, f.arity));
    lists.push_back(std::move(zs));
  }
  return lists;
}

}  // namespace detail

inline bool is_endomorphism(const Language& lang, const Endomorphism& g) {
  const int d = lang.domain.size();
  for (const auto& f : lang.functions) {
    for (std::size_t idx = 0; idx < f.table_size(); ++idx) {
      if (!f.is_zero(idx)) continue;
      Tuple t = decode_tuple(idx, d, f.arity);
      std::size_t mapped = 0;
      for (Elem e : t)
        mapped = mapped * static_cast<std::size_t>(d) + static_cast<std::size_t>(g(e));
      if (!f.is_zero(mapped)) return false;
    }
  }
  return true;
}

// All zero-preserving self-maps, by |D|^|D| enumeration in lexicographic map
// order. Crisp relations do not participate.
inline std::vector<Endomorphism> endomorphisms(const Language& lang) {
  const int d = lang.domain.size();
  if (d > 8) throw BudgetError("endomorphism enumeration limited to |D| <= 8");
  auto zeros = detail::zero_tuple_lists(lang);
  std::vector<Endomorphism> out;
  Endomorphism g;
  g.map.assign(static_cast<std::size_t>(d), 0);
  for (;;) {
    bool ok = true;
    for (std::size_t fi = 0; fi < lang.functions.size() && ok; ++fi) {
      const CostFunction& f = lang.functions[fi];
      for (const Tuple& t : zeros[fi]) {
        std::size_t mapped = 0;
        for (Elem e : t)
          mapped = mapped * static_cast<std::size_t>(d) + static_cast<std::size_t>(g(e));
        if (!f.is_zero(mapped)) {
          ok = false;
          break;
        }
      }
    }
    if (ok) out.push_back(g);
    int i = d - 1;
    while (i >= 0 && g.map[static_cast<std::size_t>(i)] == d - 1) {
      g.map[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++g.map[static_cast<std::size_t>(i)];
  }
  return out;
}

inline bool is_core(const Language& lang) {
  for (const auto& e : endomorphisms(lang))
    if (!e.injective()) return false;
  return true;
}

// Canonical instance over one variable per element whose optimal solutions
// are exactly the endomorphisms. Variable i corresponds to element i.
inline Instance indicator_problem(const Language& lang) {
  const int d = lang.domain.size();
  Instance inst;
  for (Elem e = 0; e < d; ++e) inst.variables.push_back("x_" + lang.domain.label(e));
  for (std::size_t fi = 0; fi < lang.functions.size(); ++fi) {
    const CostFunction& f = lang.functions[fi];
    for (std::size_t idx = 0; idx < f.table_size(); ++idx) {
      if (!f.is_zero(idx)) continue;
      Term t;
      t.function = static_cast<int>(fi);
      t.weight = 1;
      for (Elem e : decode_tuple(idx, d, f.arity)) t.scope.push_back(e);
      inst.terms.push_back(std::move(t));
    }
  }
  return inst;
}

inline Language restrict_language(const Language& lang, const std::vector<Elem>& image) {
  Language out;
  std::vector<std::string> labels;
  std::vector<Elem> to_new(static_cast<std::size_t>(lang.domain.size()), -1);
  for (std::size_t i = 0; i < image.size(); ++i) {
    labels.push_back(lang.domain.label(image[i]));
    to_new[static_cast<std::size_t>(image[i])] = static_cast<Elem>(i);
  }
  out.domain = Domain(labels);
  const int d = lang.domain.size();
  const int nd = out.domain.size();
  for (const auto& f : lang.functions) {
    CostFunction nf(f.name, f.arity, nd);
    for (std::size_t idx = 0; idx < nf.table_size(); ++idx) {
      Tuple t = decode_tuple(idx, nd, f.arity);
      std::size_t old = 0;
      for (Elem e : t)
        old = old * static_cast<std::size_t>(d) + static_cast<std::size_t>(image[static_cast<std::size_t>(e)]);
      nf.set_zero(idx, f.is_zero(old));
    }
    out.functions.push_back(std::move(nf));
  }
  for (const auto& r : lang.relations) {
    Relation nr(r.name, r.arity, nd);
    for (std::size_t idx = 0; idx < nr.member.size(); ++idx) {
      Tuple t = decode_tuple(idx, nd, r.arity);
      std::size_t old = 0;
      for (Elem e : t)
        old = old * static_cast<std::size_t>(d) + static_cast<std::size_t>(image[static_cast<std::size_t>(e)]);
      if (r.contains(old)) nr.add(idx);
    }
    out.relations.push_back(std::move(nr));
  }
  return out;
}

struct RetractStep {
  Language language;        // restricted to the endomorphism image
  Endomorphism endo;        // idempotent retraction on the previous domain
  std::vector<Elem> image;  // retained elements, previous-domain indices
  bool is_core = false;
};

// One retraction step: the idempotent power of a minimum-image non-injective
// endomorphism, ties broken by lexicographic map order.
inline RetractStep core_retract(const Language& lang) {
  RetractStep step;
  auto endos = endomorphisms(lang);
  const Endomorphism* pick = nullptr;
  int best_size = lang.domain.size() + 1;
  for (const auto& e : endos) {
    if (e.injective()) continue;
    int s = e.image_size();
    if (s < best_size) {
      best_size = s;
      pick = &e;
    }
  }
  if (!pick) {
    step.language = lang;
    step.endo = identity_endo(lang.domain.size());
    step.image = step.endo.image();
    step.is_core = true;
    return step;
  }
  Endomorphism e = *pick;
  while (!e.idempotent()) e = compose(e, *pick);
  step.endo = e;
  step.image = e.image();
  step.language = restrict_language(lang, step.image);
  step.is_core = false;
  return step;
}

struct CoreResult {
  Language core;
  std::vector<RetractStep> steps;  // non-core steps, outermost first
};

inline CoreResult core_of(const Language& lang) {
  CoreResult res;
  res.core = lang;
  for (;;) {
    RetractStep step = core_retract(res.core);
    if (step.is_core) break;
    res.core = step.language;
    res.steps.push_back(std::move(step));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Constant unary relations.
// ---------------------------------------------------------------------------

inline std::string constant_relation_name(const Language& lang, Elem e) {
  std::string base = "const@" + lang.domain.label(e);
  std::string name = base;
  int k = 1;
  while (lang.relation_index(name)) name = base + "'" + std::to_string(k++);
  return name;
}

// The language extended with one singleton unary relation per element.
// Returns the extended language and the relation index for each element.
inline std::pair<Language, std::vector<int>> with_constants(const Language& lang) {
  Language ext = lang;
  std::vector<int> idx;
  for (Elem e = 0; e < lang.domain.size(); ++e) {
    Relation r(constant_relation_name(ext, e), 1, lang.domain.size());
    r.add(static_cast<std::size_t>(e));
    idx.push_back(static_cast<int>(ext.relations.size()));
    ext.relations.push_back(std::move(r));
  }
  return {std::move(ext), std::move(idx)};
}

struct UnarySeparator {
  PartialCostTable table;  // total unary table, 0 at a, 1 at b
  Language gadget_language;
  Instance gadget;
  int projection_var = -1;
  int witness_function = -1;
  Tuple witness_tuple;
};

// When the collapse a -> b is not an endomorphism, produces a unary expressible
// function separating a from b: a single witness application with every
// variable except x_a pinned to its own element.
inline std::optional<UnarySeparator> unary_separator(const Language& lang, Elem a, Elem b) {
  if (a == b) throw PreconditionError("unary_separator: elements must differ");
  const int d = lang.domain.size();
  Endomorphism eab = elementary_collapse(d, a, b);
  int wf = -1;
  Tuple wt;
  for (std::size_t fi = 0; fi < lang.functions.size() && wf < 0; ++fi) {
    const CostFunction& f = lang.functions[fi];
    for (std::size_t idx = 0; idx < f.table_size(); ++idx) {
      if (!f.is_zero(idx)) continue;
      Tuple t = decode_tuple(idx, d, f.arity);
      std::size_t mapped = 0;
      for (Elem e : t)
        mapped = mapped * static_cast<std::size_t>(d) + static_cast<std::size_t>(eab(e));
      if (!f.is_zero(mapped)) {
        wf = static_cast<int>(fi);
        wt = t;
        break;
      }
    }
  }
  if (wf < 0) return std::nullopt;  // e_ab preserves every zero

  UnarySeparator sep;
  auto [ext, consts] = with_constants(lang);
  sep.gadget_language = std::move(ext);
  Instance g;
  for (Elem e = 0; e < d; ++e) g.variables.push_back("x_" + lang.domain.label(e));
  Term term;
  term.function = wf;
  term.weight = 1;
  for (Elem e : wt) term.scope.push_back(e);
  g.terms.push_back(std::move(term));
  for (Elem e = 0; e < d; ++e) {
    if (e == a) continue;
    ConstraintApp pin;
    pin.relation = consts[static_cast<std::size_t>(e)];
    pin.scope = {e};
    g.constraints.push_back(std::move(pin));
  }
  sep.gadget = std::move(g);
  sep.projection_var = a;
  sep.witness_function = wf;
  sep.witness_tuple = wt;
  sep.table = express(sep.gadget_language, sep.gadget, {a});
  if (!sep.table.total || !sep.table.at(static_cast<std::size_t>(a)) ||
      *sep.table.at(static_cast<std::size_t>(a)) != 0 ||
      *sep.table.at(static_cast<std::size_t>(b)) != 1)
    throw Error("unary_separator: gadget did not realize the separating table");
  return sep;
}

// ---------------------------------------------------------------------------
// Instance-level reductions.
// ---------------------------------------------------------------------------

struct RelationDefinition {
  Instance witness;            // instance whose optimal projections define R
  std::vector<int> proj_vars;  // projection scope within `witness`
};

// Replaces every application of relation `rel` by a big-M weighted copy of its
// defining instance. Opt(out) = Opt(in) + M * t * Opt(witness) when satisfiable.
inline Instance eliminate_relation(const Language& lang, const Instance& host, int rel,
                                   const RelationDefinition& defn,
                                   const OracleBudget& budget = {}) {
  const Relation& r = lang.relations[static_cast<std::size_t>(rel)];
  Relation check = project_optsol(lang, defn.witness, defn.proj_vars, budget);
  if (check.arity != r.arity || check.member != r.member)
    throw PreconditionError("eliminate_relation: relation does not match the defining instance");

  std::vector<const ConstraintApp*> apps;
  for (const auto& c : host.constraints)
    if (c.relation == rel) apps.push_back(&c);
  if (apps.empty()) return host;

  auto gap = min_gap(lang, defn.witness, budget);
  Rational big_m = 0;
  if (gap) big_m = (host.weight_sum() + 1) / *gap;

  Instance out;
  out.variables = host.variables;
  out.terms = host.terms;
  for (const auto& c : host.constraints)
    if (c.relation != rel) out.constraints.push_back(c);

  for (std::size_t i = 0; i < apps.size(); ++i) {
    std::vector<int> var_map(defn.witness.variables.size(), -1);
    for (std::size_t p = 0; p < defn.proj_vars.size(); ++p)
      var_map[static_cast<std::size_t>(defn.proj_vars[p])] = apps[i]->scope[p];
    for (std::size_t v = 0; v < defn.witness.variables.size(); ++v)
      if (var_map[v] < 0)
        var_map[v] = out.add_variable(defn.witness.variables[v] + "@e" + std::to_string(i));
    for (const auto& t : defn.witness.terms) {
      Term nt;
      nt.function = t.function;
      nt.weight = big_m * t.weight;
      for (int v : t.scope) nt.scope.push_back(var_map[static_cast<std::size_t>(v)]);
      out.terms.push_back(std::move(nt));
    }
    for (const auto& c : defn.witness.constraints) {
      ConstraintApp nc;
      nc.relation = c.relation;
      for (int v : c.scope) nc.scope.push_back(var_map[static_cast<std::size_t>(v)]);
      out.constraints.push_back(std::move(nc));
    }
  }
  return out;
}

struct ReduceResult {
  bool infeasible = false;
  bool unchanged = false;
  Instance instance;          // constraint-free when pins were eliminated
  std::vector<int> var_map;   // original variable -> output variable
  std::vector<int> elem_var;  // element -> output indicator variable

  // Maps an optimal solution of the output back through the inverse of the
  // automorphism read off the indicator variables.
  std::optional<Assignment> recover(const Assignment& out) const {
    if (unchanged) return out;
    const int d = static_cast<int>(elem_var.size());
    std::vector<Elem> g(static_cast<std::size_t>(d));
    std::vector<Elem> ginv(static_cast<std::size_t>(d), -1);
    for (Elem e = 0; e < d; ++e) {
      g[static_cast<std::size_t>(e)] = out[static_cast<std::size_t>(elem_var[static_cast<std::size_t>(e)])];
      if (ginv[static_cast<std::size_t>(g[static_cast<std::size_t>(e)])] != -1) return std::nullopt;
      ginv[static_cast<std::size_t>(g[static_cast<std::size_t>(e)])] = e;
    }
    Assignment res(var_map.size());
    for (std::size_t v = 0; v < var_map.size(); ++v)
      res[v] = ginv[static_cast<std::size_t>(out[static_cast<std::size_t>(var_map[v])])];
    return res;
  }
};

// Pin elimination for a core language: pinned variables merge into indicator
// variables, one optimal-projection constraint is added and then removed by
// eliminate_relation. Opt is preserved exactly.
inline ReduceResult reduce_constants(const Language& lang, const Instance& inst,
                                     const OracleBudget& budget = {}) {
  const int d = lang.domain.size();
  ReduceResult res;

  std::vector<std::pair<int, Elem>> pins;
  for (const auto& c : inst.constraints) {
    const Relation& r = lang.relations[static_cast<std::size_t>(c.relation)];
    if (r.arity != 1 || r.tuple_count() != 1)
      throw PreconditionError("reduce_constants: only constant unary constraints are supported");
    Elem e = 0;
    while (!r.contains(static_cast<std::size_t>(e))) ++e;
    pins.emplace_back(c.scope[0], e);
  }

  std::vector<Elem> pinned(inst.variables.size(), -1);
  for (auto [v, e] : pins) {
    if (pinned[static_cast<std::size_t>(v)] != -1 && pinned[static_cast<std::size_t>(v)] != e) {
      res.infeasible = true;
      return res;
    }
    pinned[static_cast<std::size_t>(v)] = e;
  }

  if (pins.empty()) {
    res.unchanged = true;
    res.instance = inst;
    for (std::size_t v = 0; v < inst.variables.size(); ++v) res.var_map.push_back(static_cast<int>(v));
    return res;
  }

  if (!is_core(lang)) throw PreconditionError("reduce_constants: language is not a core");

  Instance ip = indicator_problem(lang);

  // Merged instance over the language extended with R = optimal projections
  // of the indicator problem.
  Language ext = lang;
  Relation r = project_optsol(lang, ip, [&] {
    std::vector<int> all;
    for (Elem e = 0; e < d; ++e) all.push_back(e);
    return all;
  }(), budget);
  r.name = "optsol@ip";
  while (ext.relation_index(r.name)) r.name += "'";
  const int rel_idx = static_cast<int>(ext.relations.size());
  ext.relations.push_back(r);

  Instance merged;
  res.var_map.assign(inst.variables.size(), -1);
  for (std::size_t v = 0; v < inst.variables.size(); ++v)
    if (pinned[v] == -1) res.var_map[v] = merged.add_variable(inst.variables[v]);
  res.elem_var.assign(static_cast<std::size_t>(d), -1);
  for (Elem e = 0; e < d; ++e)
    res.elem_var[static_cast<std::size_t>(e)] = merged.add_variable("x_" + lang.domain.label(e));
  for (std::size_t v = 0; v < inst.variables.size(); ++v)
    if (pinned[v] != -1) res.var_map[v] = res.elem_var[static_cast<std::size_t>(pinned[v])];

  for (const auto& t : inst.terms) {
    Term nt;
    nt.function = t.function;
    nt.weight = t.weight;
    for (int v : t.scope) nt.scope.push_back(res.var_map[static_cast<std::size_t>(v)]);
    merged.terms.push_back(std::move(nt));
  }
  ConstraintApp app;
  app.relation = rel_idx;
  app.scope = res.elem_var;
  merged.constraints.push_back(std::move(app));

  RelationDefinition defn;
  defn.witness = ip;
  for (Elem e = 0; e < d; ++e) defn.proj_vars.push_back(e);
  res.instance = eliminate_relation(ext, merged, rel_idx, defn, budget);
  if (!res.instance.constraints.empty())
    throw Error("reduce_constants: expected a constraint-free instance");
  return res;
}

}  // namespace mincsp
