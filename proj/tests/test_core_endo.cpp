#include "helpers.hpp"

#include <mincsp/core_endo.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <set>

using namespace mincsp;
using testutil::Rng;

TEST_CASE("endomorphism enumeration") {
  SECTION("empty language admits every map") {
    Language lang;
    lang.domain = testutil::make_domain(4);
    REQUIRE(endomorphisms(lang).size() == 256);
  }

  SECTION("a single unary function constrains the zero elements") {
    Language lang = testutil::load_language("u_ab.json");
    auto endos = endomorphisms(lang);
    REQUIRE(endos.size() == 64);
    for (const auto& e : endos) {
      REQUIRE(e(0) <= 1);
      REQUIRE(e(1) <= 1);
    }
  }

  SECTION("the example language is a core") {
    Language lang = testutil::load_language("gamma_ex.json");
    for (const auto& e : endomorphisms(lang)) REQUIRE(e.injective());
    REQUIRE(is_core(lang));
  }

  SECTION("closed under composition, contains identity") {
    Rng rng(5);
    for (int iter = 0; iter < 10; ++iter) {
      Language lang = testutil::random_language(rng, 3, 2, 2);
      auto endos = endomorphisms(lang);
      std::set<std::vector<Elem>> pool;
      for (const auto& e : endos) pool.insert(e.map);
      REQUIRE(pool.count(identity_endo(3).map) == 1);
      for (const auto& e1 : endos)
        for (const auto& e2 : endos) REQUIRE(pool.count(compose(e1, e2).map) == 1);
    }
  }
}

TEST_CASE("indicator problem construction") {
  SECTION("empty language gives an empty sum") {
    Language lang;
    lang.domain = testutil::make_domain(4);
    Instance ip = indicator_problem(lang);
    REQUIRE(ip.variables.size() == 4);
    REQUIRE(ip.terms.empty());
  }

  SECTION("one term per zero tuple") {
    Language lang = testutil::load_language("u_ab.json");
    Instance ip = indicator_problem(lang);
    REQUIRE(ip.terms.size() == 2);
    REQUIRE(ip.terms[0].scope == std::vector<int>{0});
    REQUIRE(ip.terms[1].scope == std::vector<int>{1});
  }

  SECTION("the binary example function contributes nine terms") {
    Language lang = testutil::load_language("gamma_ex.json");
    Language only_h;
    only_h.domain = lang.domain;
    only_h.functions.push_back(lang.functions[static_cast<std::size_t>(*lang.function_index("h"))]);
    REQUIRE(indicator_problem(only_h).terms.size() == 9);
  }
}

TEST_CASE("optimal indicator solutions are exactly the endomorphisms") {
  Rng rng(314);
  for (int iter = 0; iter < 30; ++iter) {
    int d = rng.range(2, 4);
    Language lang = testutil::random_language(rng, d, 2, rng.range(1, 3));
    Instance ip = indicator_problem(lang);
    Relation opt = project_optsol(lang, ip, [&] {
      std::vector<int> all;
      for (int i = 0; i < d; ++i) all.push_back(i);
      return all;
    }());
    std::set<std::size_t> expected;
    for (const auto& e : endomorphisms(lang)) expected.insert(encode_tuple(e.map, d));
    std::set<std::size_t> got;
    for (std::size_t i = 0; i < opt.member.size(); ++i)
      if (opt.contains(i)) got.insert(i);
    REQUIRE(got == expected);
  }
}

TEST_CASE("core retraction") {
  SECTION("a core retracts to itself") {
    Language lang = testutil::load_language("gamma_ex.json");
    RetractStep step = core_retract(lang);
    REQUIRE(step.is_core);
    REQUIRE(step.endo == identity_endo(4));
  }

  SECTION("a single separator collapses to one element") {
    Language lang = testutil::load_language("u_ab.json");
    CoreResult core = core_of(lang);
    REQUIRE(core.core.domain.size() == 1);
    REQUIRE(core.core.domain.labels[0] == "a");
  }

  SECTION("the empty language collapses to the least element") {
    Language lang;
    lang.domain = testutil::make_domain(4);
    CoreResult core = core_of(lang);
    REQUIRE(core.core.domain.size() == 1);
    REQUIRE(core.core.domain.labels[0] == "a");
  }

  SECTION("retraction step endo is idempotent and non-injective") {
    Rng rng(77);
    int found = 0;
    for (int iter = 0; iter < 40 && found < 10; ++iter) {
      Language lang = testutil::random_language(rng, 4, 2, 2);
      RetractStep step = core_retract(lang);
      if (step.is_core) continue;
      ++found;
      REQUIRE(step.endo.idempotent());
      REQUIRE_FALSE(step.endo.injective());
      REQUIRE(is_endomorphism(lang, step.endo));
    }
    REQUIRE(found > 0);
  }
}

TEST_CASE("retraction preserves optima of crisp-free instances") {
  Rng rng(123);
  for (int iter = 0; iter < 20; ++iter) {
    Language lang = testutil::random_language(rng, 4, 2, 2);
    auto endos = endomorphisms(lang);
    Instance inst = testutil::random_instance(rng, lang, 3, 3);
    auto base = solve_brute(lang, inst);
    REQUIRE(base);
    for (const auto& e : endos) {
      Assignment mapped;
      for (Elem v : base->second) mapped.push_back(e(v));
      auto m = measure(lang, inst, mapped);
      REQUIRE(*m <= base->first);
    }
  }
}

TEST_CASE("unary separators") {
  SECTION("absent for the empty language") {
    Language lang;
    lang.domain = testutil::make_domain(4);
    REQUIRE_FALSE(unary_separator(lang, 0, 1));
  }

  SECTION("collapse a->c is separated for {u_ab}") {
    Language lang = testutil::load_language("u_ab.json");
    auto sep = unary_separator(lang, 0, 2);
    REQUIRE(sep);
    REQUIRE(*sep->table.at(0) == 0);
    REQUIRE(*sep->table.at(2) == 1);
    REQUIRE(sep->table.total);
  }

  SECTION("collapse c->a is separated for the example language") {
    Language lang = testutil::load_language("gamma_ex.json");
    auto sep = unary_separator(lang, 2, 0);
    REQUIRE(sep);
    REQUIRE(*sep->table.at(2) == 0);
    REQUIRE(*sep->table.at(0) == 1);
    REQUIRE(lang.functions[static_cast<std::size_t>(sep->witness_function)].name == "u_cd");
  }

  SECTION("gadget re-expresses to the returned table") {
    Language lang = testutil::load_language("gamma_ex.json");
    for (Elem a = 0; a < 4; ++a)
      for (Elem b = 0; b < 4; ++b) {
        if (a == b) continue;
        auto sep = unary_separator(lang, a, b);
        REQUIRE(sep);  // a core separates every ordered pair
        PartialCostTable replay =
            express(sep->gadget_language, sep->gadget, {sep->projection_var});
        for (Elem e = 0; e < 4; ++e) REQUIRE(*replay.at(static_cast<std::size_t>(e)) ==
                                             *sep->table.at(static_cast<std::size_t>(e)));
      }
  }
}

namespace {

// Two-element domain with u(a)=0, u(b)=1 and a host that penalises a.
struct BigMFixture {
  Language lang;
  Instance defn_j;
  Instance host;
  int rel = -1;
};

BigMFixture make_bigm_fixture() {
  BigMFixture fx;
  fx.lang.domain = testutil::make_domain(2);
  CostFunction u("u", 1, 2);
  u.set_zero(0);
  CostFunction p("p", 1, 2);
  p.set_zero(1);
  fx.lang.functions = {u, p};
  Relation r("r_a", 1, 2);
  r.add(0);
  fx.lang.relations.push_back(r);
  fx.rel = 0;

  fx.defn_j.variables = {"x"};
  fx.defn_j.terms.push_back({0, Rational(1), {0}});

  fx.host.variables = {"y"};
  fx.host.terms.push_back({1, Rational(1), {0}});
  fx.host.constraints.push_back({0, {0}});
  return fx;
}

}  // namespace

TEST_CASE("eliminate_relation") {
  BigMFixture fx = make_bigm_fixture();
  RelationDefinition defn{fx.defn_j, {0}};

  SECTION("worked example with M = 2") {
    Instance out = eliminate_relation(fx.lang, fx.host, fx.rel, defn);
    REQUIRE(out.constraints.empty());
    REQUIRE(out.terms.size() == 2);
    REQUIRE(out.terms[1].weight == 2);  // (U+1)/delta with U = 1, delta = 1
    auto r = solve_brute(fx.lang, out);
    REQUIRE(r->first == 1);
    auto in = solve_brute(fx.lang, fx.host);
    REQUIRE(in->first == 1);
  }

  SECTION("no applications leaves the instance unchanged") {
    Instance host2 = fx.host;
    host2.constraints.clear();
    Instance out = eliminate_relation(fx.lang, host2, fx.rel, defn);
    REQUIRE(out.terms.size() == host2.terms.size());
    REQUIRE(out.constraints.empty());
  }

  SECTION("flat defining instance gives zero-weight copies") {
    BigMFixture fx2 = make_bigm_fixture();
    fx2.defn_j.terms.clear();  // every solution has measure 0
    Relation full("r_full", 1, 2);
    full.add(0);
    full.add(1);
    fx2.lang.relations[0] = full;
    RelationDefinition defn2{fx2.defn_j, {0}};
    Instance out = eliminate_relation(fx2.lang, fx2.host, 0, defn2);
    REQUIRE(out.constraints.empty());
  }

  SECTION("mismatched relation is rejected") {
    BigMFixture fx2 = make_bigm_fixture();
    Relation wrong("r_a", 1, 2);
    wrong.add(1);
    fx2.lang.relations[0] = wrong;
    RelationDefinition defn2{fx2.defn_j, {0}};
    REQUIRE_THROWS_AS(eliminate_relation(fx2.lang, fx2.host, 0, defn2), PreconditionError);
  }
}

TEST_CASE("eliminate_relation optimum identity on random cases") {
  Rng rng(1618);
  int done = 0;
  for (int iter = 0; iter < 60 && done < 15; ++iter) {
    Language lang = testutil::random_language(rng, 3, 2, 2);
    Instance j = testutil::random_instance(rng, lang, 2, rng.range(1, 3));
    Relation r = project_optsol(lang, j, {0, 1});
    r.name = "r";
    lang.relations.push_back(r);
    int rel = static_cast<int>(lang.relations.size()) - 1;

    Instance host = testutil::random_instance(rng, lang, 3, rng.range(1, 3));
    int t = rng.range(1, 2);
    for (int i = 0; i < t; ++i) {
      int v1 = rng.range(0, 2), v2 = rng.range(0, 2);
      host.constraints.push_back({rel, {v1, v2}});
    }
    auto opt_in = solve_brute(lang, host);
    if (!opt_in) continue;
    ++done;

    RelationDefinition defn{j, {0, 1}};
    Instance out = eliminate_relation(lang, host, rel, defn);
    auto opt_out = solve_brute(lang, out);
    REQUIRE(opt_out);

    auto gap = min_gap(lang, j);
    Rational big_m = gap ? (host.weight_sum() + 1) / *gap : Rational(0);
    Rational opt_j = solve_brute(lang, j)->first;
    REQUIRE(opt_out->first == opt_in->first + big_m * t * opt_j);

    // optimal solutions of the output satisfy R on every application
    for (const auto& c : host.constraints) {
      if (c.relation != rel) continue;
      std::size_t idx = 0;
      for (int v : c.scope)
        idx = idx * 3 + static_cast<std::size_t>(opt_out->second[static_cast<std::size_t>(v)]);
      REQUIRE(lang.relations[static_cast<std::size_t>(rel)].contains(idx));
    }
  }
  REQUIRE(done >= 10);
}

TEST_CASE("reduce_constants") {
  Language lang = testutil::load_language("gamma_ex.json");
  auto [ext, consts] = with_constants(lang);

  SECTION("contradictory pins are infeasible") {
    Instance inst;
    inst.variables = {"x"};
    inst.constraints.push_back({consts[0], {0}});
    inst.constraints.push_back({consts[1], {0}});
    ReduceResult res = reduce_constants(ext, inst);
    REQUIRE(res.infeasible);
  }

  SECTION("no pins leaves the instance unchanged") {
    Instance inst = testutil::load_instance("inst_hh.json", lang);
    ReduceResult res = reduce_constants(lang, inst);
    REQUIRE(res.unchanged);
    REQUIRE(res.instance.terms.size() == inst.terms.size());
  }

  SECTION("pinned optimum is preserved and witnesses recover") {
    Rng rng(2718);
    for (int iter = 0; iter < 8; ++iter) {
      Instance inst = testutil::random_instance(rng, ext, 3, rng.range(1, 4));
      int pin_var = rng.range(0, 2);
      Elem pin_val = static_cast<Elem>(rng.below(4));
      inst.constraints.push_back({consts[static_cast<std::size_t>(pin_val)], {pin_var}});

      ReduceResult res = reduce_constants(ext, inst);
      REQUIRE_FALSE(res.infeasible);
      REQUIRE(res.instance.constraints.empty());

      auto opt_in = solve_brute(ext, inst);
      auto opt_out = solve_brute(ext, res.instance);
      REQUIRE(opt_in);
      REQUIRE(opt_out);
      REQUIRE(opt_out->first == opt_in->first);

      auto rec = res.recover(opt_out->second);
      REQUIRE(rec);
      auto m = measure(ext, inst, *rec);
      REQUIRE(m);
      REQUIRE(*m == opt_in->first);
    }
  }

  SECTION("non-core language is rejected") {
    Language ulang = testutil::load_language("u_ab.json");
    auto [uext, uconsts] = with_constants(ulang);
    Instance inst;
    inst.variables = {"x"};
    inst.constraints.push_back({uconsts[0], {0}});
    REQUIRE_THROWS_AS(reduce_constants(uext, inst), PreconditionError);
  }
}
