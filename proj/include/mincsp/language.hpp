#pragma once

#include <mincsp/rational.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mincsp {

using Elem = int;
using Tuple = std::vector<Elem>;

inline std::uint64_t pow_u64(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Tuples are encoded most-significant-coordinate-first, so numeric order on
// codes equals lexicographic order on tuples in domain order.
inline std::size_t encode_tuple(const Tuple& t, int dsize) {
  std::size_t idx = 0;
  for (Elem e : t) idx = idx * static_cast<std::size_t>(dsize) + static_cast<std::size_t>(e);
  return idx;
}

inline Tuple decode_tuple(std::size_t idx, int dsize, int arity) {
  Tuple t(static_cast<std::size_t>(arity));
  for (int j = arity - 1; j >= 0; --j) {
    t[static_cast<std::size_t>(j)] = static_cast<Elem>(idx % static_cast<std::size_t>(dsize));
    idx /= static_cast<std::size_t>(dsize);
  }
  return t;
}

struct Domain {
  std::vector<std::string> labels;

  Domain() = default;
  explicit Domain(std::vector<std::string> ls) : labels(std::move(ls)) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j]) throw ParseError("duplicate domain label '" + labels[i] + "'");
    if (labels.empty()) throw ParseError("empty domain");
  }

  int size() const { return static_cast<int>(labels.size()); }

  std::optional<Elem> index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<Elem>(i);
    return std::nullopt;
  }

  const std::string& label(Elem e) const { return labels[static_cast<std::size_t>(e)]; }

  bool operator==(const Domain&) const = default;
};

// {0,1}-valued cost function stored by its zero set: value(t) = 0 iff t in zeros.
struct CostFunction {
  std::string name;
  int arity = 0;
  std::vector<char> zero_mask;  // flat table over D^arity, 1 = zero tuple

  CostFunction() = default;
  CostFunction(std::string n, int k, int dsize) : name(std::move(n)), arity(k) {
    zero_mask.assign(pow_u64(static_cast<std::uint64_t>(dsize), k), 0);
  }

  std::size_t table_size() const { return zero_mask.size(); }
  bool is_zero(std::size_t idx) const { return zero_mask[idx] != 0; }
  int value(std::size_t idx) const { return zero_mask[idx] ? 0 : 1; }
  void set_zero(std::size_t idx, bool z = true) { zero_mask[idx] = z ? 1 : 0; }

  std::size_t zero_count() const {
    std::size_t n = 0;
    for (char c : zero_mask) n += static_cast<std::size_t>(c);
    return n;
  }
};

struct Relation {
  std::string name;
  int arity = 0;
  std::vector<char> member;  // flat table over D^arity

  Relation() = default;
  Relation(std::string n, int k, int dsize) : name(std::move(n)), arity(k) {
    member.assign(pow_u64(static_cast<std::uint64_t>(dsize), k), 0);
  }

  bool contains(std::size_t idx) const { return member[idx] != 0; }
  void add(std::size_t idx) { member[idx] = 1; }

  std::size_t tuple_count() const {
    std::size_t n = 0;
    for (char c : member) n += static_cast<std::size_t>(c);
    return n;
  }

  bool empty() const { return tuple_count() == 0; }
};

struct Language {
  Domain domain;
  std::vector<CostFunction> functions;
  std::vector<Relation> relations;

  std::optional<int> function_index(const std::string& n) const {
    for (std::size_t i = 0; i < functions.size(); ++i)
      if (functions[i].name == n) return static_cast<int>(i);
    return std::nullopt;
  }

  std::optional<int> relation_index(const std::string& n) const {
    for (std::size_t i = 0; i < relations.size(); ++i)
      if (relations[i].name == n) return static_cast<int>(i);
    return std::nullopt;
  }

  void check_unique_names() const {
    std::map<std::string, int> seen;
    for (const auto& f : functions)
      if (++seen[f.name] > 1) throw ParseError("duplicate function name '" + f.name + "'");
    seen.clear();
    for (const auto& r : relations)
      if (++seen[r.name] > 1) throw ParseError("duplicate relation name '" + r.name + "'");
  }
};

// One weighted application of a cost function.
struct Term {
  int function = -1;
  Rational weight;
  std::vector<int> scope;  // variable indices
};

struct ConstraintApp {
  int relation = -1;
  std::vector<int> scope;
};

struct Instance {
  std::vector<std::string> variables;
  std::vector<Term> terms;
  std::vector<ConstraintApp> constraints;

  std::optional<int> variable_index(const std::string& v) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i] == v) return static_cast<int>(i);
    return std::nullopt;
  }

  int add_variable(const std::string& base) {
    std::string name = base;
    int suffix = 1;
    while (variable_index(name)) name = base + "'" + std::to_string(suffix++);
    variables.push_back(name);
    return static_cast<int>(variables.size()) - 1;
  }

  Rational weight_sum() const {
    Rational u = 0;
    for (const auto& t : terms) u += t.weight;
    return u;
  }
};

// Total map variable index -> element.
using Assignment = std::vector<Elem>;

inline void validate_instance(const Language& lang, const Instance& inst) {
  const int nvars = static_cast<int>(inst.variables.size());
  for (const auto& t : inst.terms) {
    if (t.function < 0 || t.function >= static_cast<int>(lang.functions.size()))
      throw ParseError("term references unknown function");
    if (static_cast<int>(t.scope.size()) != lang.functions[static_cast<std::size_t>(t.function)].arity)
      throw ParseError("scope arity mismatch for function '" +
                       lang.functions[static_cast<std::size_t>(t.function)].name + "'");
    for (int v : t.scope)
      if (v < 0 || v >= nvars) throw ParseError("term scope references unknown variable");
    if (t.weight < 0) throw ParseError("negative weight");
  }
  for (const auto& c : inst.constraints) {
    if (c.relation < 0 || c.relation >= static_cast<int>(lang.relations.size()))
      throw ParseError("constraint references unknown relation");
    if (static_cast<int>(c.scope.size()) != lang.relations[static_cast<std::size_t>(c.relation)].arity)
      throw ParseError("scope arity mismatch for relation '" +
                       lang.relations[static_cast<std::size_t>(c.relation)].name + "'");
    for (int v : c.scope)
      if (v < 0 || v >= nvars) throw ParseError("constraint scope references unknown variable");
  }
}

// Exact measure; nullopt marks a violated crisp constraint.
inline std::optional<Rational> measure(const Language& lang, const Instance& inst,
                                       const Assignment& sigma) {
  const int d = lang.domain.size();
  for (const auto& c : inst.constraints) {
    const Relation& rel = lang.relations[static_cast<std::size_t>(c.relation)];
    std::size_t idx = 0;
    for (int v : c.scope) idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(sigma[static_cast<std::size_t>(v)]);
    if (!rel.contains(idx)) return std::nullopt;
  }
  Rational m = 0;
  for (const auto& t : inst.terms) {
    const CostFunction& f = lang.functions[static_cast<std::size_t>(t.function)];
    std::size_t idx = 0;
    for (int v : t.scope) idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(sigma[static_cast<std::size_t>(v)]);
    if (!f.is_zero(idx)) m += t.weight;
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON formats.
//
// Language:  {"domain":["a","b"],
//             "functions":[{"name":"u","arity":1,"zeros":[["a"]]}],
//             "relations":[{"name":"const_a","arity":1,"tuples":[["a"]]}]}
// Instance:  {"variables":["x","y"],
//             "terms":[{"function":"u","weight":"1/2","scope":["x"]}],
//             "constraints":[{"relation":"const_a","scope":["x"]}]}
//
// Serialisation is canonical: fixed key order, tuples sorted lexicographically
// in domain order, weights as "p" or "p/q".
// ---------------------------------------------------------------------------

using Json = nlohmann::ordered_json;

inline Tuple parse_label_tuple(const Language& lang, const Json& arr, int arity,
                               const std::string& what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != arity)
    throw ParseError("malformed tuple in " + what);
  Tuple t;
  t.reserve(arr.size());
  for (const auto& x : arr) {
    if (!x.is_string()) throw ParseError("malformed tuple in " + what);
    auto e = lang.domain.index_of(x.get<std::string>());
    if (!e) throw ParseError("unknown label '" + x.get<std::string>() + "' in " + what);
    t.push_back(*e);
  }
  return t;
}

inline Language parse_language_json(const Json& j) {
  if (!j.is_object() || !j.contains("domain")) throw ParseError("language file: missing domain");
  Language lang;
  std::vector<std::string> labels;
  for (const auto& x : j.at("domain")) {
    if (!x.is_string()) throw ParseError("domain labels must be strings");
    labels.push_back(x.get<std::string>());
  }
  lang.domain = Domain(labels);
  const int d = lang.domain.size();
  if (j.contains("functions")) {
    for (const auto& jf : j.at("functions")) {
      std::string name = jf.at("name").get<std::string>();
      int arity = jf.at("arity").get<int>();
      if (arity <= 0) throw ParseError("function '" + name + "': arity must be positive");
      CostFunction f(name, arity, d);
      if (jf.contains("zeros"))
        for (const auto& jt : jf.at("zeros"))
          f.set_zero(encode_tuple(parse_label_tuple(lang, jt, arity, "function '" + name + "'"), d));
      lang.functions.push_back(std::move(f));
    }
  }
  if (j.contains("relations")) {
    for (const auto& jr : j.at("relations")) {
      std::string name = jr.at("name").get<std::string>();
      int arity = jr.at("arity").get<int>();
      if (arity <= 0) throw ParseError("relation '" + name + "': arity must be positive");
      Relation r(name, arity, d);
      if (jr.contains("tuples"))
        for (const auto& jt : jr.at("tuples"))
          r.add(encode_tuple(parse_label_tuple(lang, jt, arity, "relation '" + name + "'"), d));
      lang.relations.push_back(std::move(r));
    }
  }
  lang.check_unique_names();
  return lang;
}

inline Language parse_language(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("language file: ") + e.what());
  }
  return parse_language_json(j);
}

inline Json tuple_to_json(const Language& lang, const Tuple& t) {
  Json arr = Json::array();
  for (Elem e : t) arr.push_back(lang.domain.label(e));
  return arr;
}

inline Json serialize_language_json(const Language& lang) {
  const int d = lang.domain.size();
  Json j;
  j["domain"] = Json::array();
  for (const auto& l : lang.domain.labels) j["domain"].push_back(l);
  j["functions"] = Json::array();
  for (const auto& f : lang.functions) {
    Json jf;
    jf["name"] = f.name;
    jf["arity"] = f.arity;
    Json zeros = Json::array();
    for (std::size_t idx = 0; idx < f.table_size(); ++idx)
      if (f.is_zero(idx)) zeros.push_back(tuple_to_json(lang, decode_tuple(idx, d, f.arity)));
    jf["zeros"] = std::move(zeros);
    j["functions"].push_back(std::move(jf));
  }
  j["relations"] = Json::array();
  for (const auto& r : lang.relations) {
    Json jr;
    jr["name"] = r.name;
    jr["arity"] = r.arity;
    Json tuples = Json::array();
    for (std::size_t idx = 0; idx < r.member.size(); ++idx)
      if (r.contains(idx)) tuples.push_back(tuple_to_json(lang, decode_tuple(idx, d, r.arity)));
    jr["tuples"] = std::move(tuples);
    j["relations"].push_back(std::move(jr));
  }
  return j;
}

inline std::string serialize_language(const Language& lang) {
  return serialize_language_json(lang).dump(2) + "\n";
}

inline Instance parse_instance_json(const Json& j, const Language& lang) {
  Instance inst;
  if (!j.is_object() || !j.contains("variables")) throw ParseError("instance file: missing variables");
  for (const auto& v : j.at("variables")) {
    if (!v.is_string()) throw ParseError("variable names must be strings");
    std::string name = v.get<std::string>();
    if (inst.variable_index(name)) throw ParseError("duplicate variable '" + name + "'");
    inst.variables.push_back(name);
  }
  auto scope_of = [&](const Json& arr, const std::string& what) {
    std::vector<int> scope;
    for (const auto& x : arr) {
      auto vi = inst.variable_index(x.get<std::string>());
      if (!vi) throw ParseError("unknown variable '" + x.get<std::string>() + "' in " + what);
      scope.push_back(*vi);
    }
    return scope;
  };
  if (j.contains("terms")) {
    for (const auto& jt : j.at("terms")) {
      Term t;
      std::string fname = jt.at("function").get<std::string>();
      auto fi = lang.function_index(fname);
      if (!fi) throw ParseError("unknown function '" + fname + "'");
      t.function = *fi;
      if (jt.contains("weight")) {
        const auto& w = jt.at("weight");
        t.weight = w.is_string() ? parse_rational(w.get<std::string>())
                                 : Rational(w.get<long long>());
      } else {
        t.weight = 1;
      }
      if (t.weight < 0) throw ParseError("negative weight on function '" + fname + "'");
      t.scope = scope_of(jt.at("scope"), "term '" + fname + "'");
      inst.terms.push_back(std::move(t));
    }
  }
  if (j.contains("constraints")) {
    for (const auto& jc : j.at("constraints")) {
      ConstraintApp c;
      std::string rname = jc.at("relation").get<std::string>();
      auto ri = lang.relation_index(rname);
      if (!ri) throw ParseError("unknown relation '" + rname + "'");
      c.relation = *ri;
      c.scope = scope_of(jc.at("scope"), "constraint '" + rname + "'");
      inst.constraints.push_back(std::move(c));
    }
  }
  validate_instance(lang, inst);
  return inst;
}

inline Instance parse_instance(const std::string& text, const Language& lang) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance file: ") + e.what());
  }
  return parse_instance_json(j, lang);
}

inline Json serialize_instance_json(const Language& lang, const Instance& inst) {
  Json j;
  j["variables"] = Json::array();
  for (const auto& v : inst.variables) j["variables"].push_back(v);
  j["terms"] = Json::array();
  for (const auto& t : inst.terms) {
    Json jt;
    jt["function"] = lang.functions[static_cast<std::size_t>(t.function)].name;
    jt["weight"] = format_rational(t.weight);
    Json scope = Json::array();
    for (int v : t.scope) scope.push_back(inst.variables[static_cast<std::size_t>(v)]);
    jt["scope"] = std::move(scope);
    j["terms"].push_back(std::move(jt));
  }
  j["constraints"] = Json::array();
  for (const auto& c : inst.constraints) {
    Json jc;
    jc["relation"] = lang.relations[static_cast<std::size_t>(c.relation)].name;
    Json scope = Json::array();
    for (int v : c.scope) scope.push_back(inst.variables[static_cast<std::size_t>(v)]);
    jc["scope"] = std::move(scope);
    j["constraints"].push_back(std::move(jc));
  }
  return j;
}

inline std::string serialize_instance(const Language& lang, const Instance& inst) {
  return serialize_instance_json(lang, inst).dump(2) + "\n";
}

}  // namespace mincsp
