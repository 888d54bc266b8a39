#include "helpers.hpp"

#include <mincsp/morphisms.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace mincsp;
using testutil::Rng;

namespace {

Language heq4() {
  Language lang;
  lang.domain = testutil::make_domain(4);
  CostFunction h("h_eq", 2, 4);
  for (Elem x = 0; x < 4; ++x)
    for (Elem y = 0; y < 4; ++y)
      if (x != y) h.set_zero(encode_tuple({x, y}, 4));
  lang.functions.push_back(h);
  return lang;
}

const OneDefectChain& find_odc(const std::vector<OneDefectChain>& all, Elem lo, Elem hi,
                               std::vector<Elem> rest, int gap) {
  for (const auto& c : all)
    if (c.defect_lo == lo && c.defect_hi == hi && c.rest == rest && c.gap == gap) return c;
  throw std::runtime_error("structure not found");
}

}  // namespace

TEST_CASE("example multimorphism tables") {
  Language lang = testutil::load_language("gamma_ex.json");
  BinaryOpPair f1g1 = testutil::load_pair("f1g1.json", lang);
  BinaryOpPair f2g2 = testutil::load_pair("f2g2.json", lang);

  SECTION("table reading convention") {
    // g1(c,d) = c: row c, column d
    REQUIRE(f1g1.g(2, 3) == 2);
  }

  SECTION("both pairs are multimorphisms of the example language") {
    REQUIRE(is_multimorphism(f1g1, lang).ok);
    REQUIRE(is_multimorphism(f2g2, lang).ok);
  }

  SECTION("they appear among the enumerated 1-defect chains") {
    auto all = enumerate_one_defect(lang.domain);
    REQUIRE(find_odc(all, 1, 2, {0, 3}, 2).pair == f1g1);
    REQUIRE(find_odc(all, 1, 2, {0, 3}, 0).pair == f2g2);
  }
}

TEST_CASE("chain multimorphism checks") {
  SECTION("unary functions are submodular on every chain") {
    Language lang = testutil::load_language("u_ab.json");
    for (const auto& c : enumerate_chains(lang.domain))
      REQUIRE(is_multimorphism(c.op_pair(), lang).ok);
  }

  SECTION("equality cost violates every chain with the stated counterexample") {
    Language lang = heq4();
    ChainOrder chain{{0, 1, 2, 3}};
    MmCheck chk = is_multimorphism(chain.op_pair(), lang);
    REQUIRE_FALSE(chk.ok);
    REQUIRE(chk.violation->x == Tuple{0, 1});
    REQUIRE(chk.violation->y == Tuple{1, 0});
  }
}

TEST_CASE("chain enumeration") {
  REQUIRE(enumerate_chains(testutil::make_domain(4)).size() == 24);
  REQUIRE(enumerate_chains(testutil::make_domain(1)).size() == 1);

  ChainOrder abcd{{0, 1, 2, 3}};
  BinaryOpPair p = abcd.op_pair();
  REQUIRE(p.f(1, 3) == 1);  // meet(b,d) = b
  REQUIRE(p.g(1, 3) == 3);  // join(b,d) = d
}

TEST_CASE("1-defect chain enumeration") {
  Domain dom = testutil::make_domain(4);
  auto all = enumerate_one_defect(dom);
  REQUIRE(all.size() == 36);

  SECTION("interior placement is the product lattice meet/join") {
    const auto& lad = find_odc(all, 1, 2, {0, 3}, 1);
    REQUIRE(lad.placement() == OneDefectChain::Placement::Interior);
    REQUIRE(lad.pair.f(1, 2) == 0);
    REQUIRE(lad.pair.g(1, 2) == 3);
    REQUIRE(lad.pair.f(0, 1) == 0);
    REQUIRE(lad.pair.g(1, 3) == 3);
    REQUIRE(lad.pair.f(2, 3) == 2);
  }

  SECTION("operations are idempotent and commutative with outside defect images") {
    for (const auto& c : all) {
      REQUIRE(c.pair.f.idempotent());
      REQUIRE(c.pair.g.idempotent());
      REQUIRE(c.pair.f.commutative());
      REQUIRE(c.pair.g.commutative());
      Elem fi = c.pair.f(c.defect_lo, c.defect_hi);
      Elem gi = c.pair.g(c.defect_lo, c.defect_hi);
      REQUIRE_FALSE(c.in_defect(fi));
      REQUIRE_FALSE(c.in_defect(gi));
      REQUIRE(c.less(fi, gi));
    }
  }

  SECTION("small domains") {
    REQUIRE(enumerate_one_defect(testutil::make_domain(3)).empty());
    REQUIRE_THROWS_AS(enumerate_one_defect(testutil::make_domain(2)), PreconditionError);
  }
}

TEST_CASE("2-semilattice identities") {
  Language lang = testutil::load_language("gamma_ex.json");
  BinaryOpPair f1g1 = testutil::load_pair("f1g1.json", lang);
  BinaryOpPair f2g2 = testutil::load_pair("f2g2.json", lang);

  REQUIRE(check_2semilattice(f1g1.f));
  ChainOrder abcd{{0, 1, 2, 3}};
  REQUIRE(check_2semilattice(abcd.op_pair().f));
  // f2(f2(b,c),b) = f2(a,b) = b != a = f2(b,c)
  REQUIRE_FALSE(check_2semilattice(f2g2.f));
}

TEST_CASE("defect placement identities for all enumerated structures") {
  Domain dom = testutil::make_domain(4);
  for (const auto& c : enumerate_one_defect(dom)) {
    const BinaryOp& f = c.pair.f;
    const BinaryOp& g = c.pair.g;
    Elem fi = f(c.defect_lo, c.defect_hi);
    Elem gi = g(c.defect_lo, c.defect_hi);
    bool f_below = c.less(fi, c.defect_lo) && c.less(fi, c.defect_hi);
    bool g_above = c.less(c.defect_lo, gi) && c.less(c.defect_hi, gi);
    REQUIRE((f_below || g_above));
    if (f_below) {
      REQUIRE(check_2semilattice(f));
      for (Elem x = 0; x < 4; ++x)
        for (Elem y = 0; y < 4; ++y) REQUIRE(g(f(x, y), x) == x);
    }
    if (g_above) {
      REQUIRE(check_2semilattice(g));
      for (Elem x = 0; x < 4; ++x)
        for (Elem y = 0; y < 4; ++y) REQUIRE(f(g(x, y), x) == x);
    }

    // swap identities on defect-valued tuples, arities 1..3
    for (int k = 1; k <= 3; ++k) {
      const int total = 1 << k;
      for (int xm = 0; xm < total; ++xm)
        for (int ym = 0; ym < total; ++ym) {
          Tuple x, y;
          for (int j = 0; j < k; ++j) {
            x.push_back((xm >> j) & 1 ? c.defect_hi : c.defect_lo);
            y.push_back((ym >> j) & 1 ? c.defect_hi : c.defect_lo);
          }
          auto apply = [&](const BinaryOp& op, const Tuple& s, const Tuple& t) {
            Tuple r;
            for (std::size_t j = 0; j < s.size(); ++j) r.push_back(op(s[j], t[j]));
            return r;
          };
          Tuple fxy = apply(f, x, y), gxy = apply(g, x, y);
          auto eq_set = [&](const Tuple& p1, const Tuple& p2, const Tuple& q1, const Tuple& q2) {
            return (p1 == q1 && p2 == q2) || (p1 == q2 && p2 == q1);
          };
          REQUIRE(eq_set(apply(f, fxy, x), apply(g, fxy, x), fxy, x));
          REQUIRE(eq_set(apply(g, gxy, x), apply(f, gxy, x), gxy, x));
        }
    }
  }
}

TEST_CASE("binary restriction check agrees with the direct check") {
  Domain dom = testutil::make_domain(4);
  auto chains = enumerate_chains(dom);
  auto odcs = enumerate_one_defect(dom);
  Rng rng(4242);

  for (int iter = 0; iter < 40; ++iter) {
    int arity = rng.range(1, 4);
    CostFunction h = testutil::random_function(rng, "h", arity, 4, rng.range(20, 80));
    RestrictionFamily fam;
    BinaryOpPair pair;
    if (rng.coin(50)) {
      const auto& c = chains[rng.below(chains.size())];
      fam = c;
      pair = c.op_pair();
    } else {
      const auto& c = odcs[rng.below(odcs.size())];
      fam = c;
      pair = c.pair;
    }
    MmCheck direct = is_multimorphism_of(pair, h, 4);
    MmCheck restricted = binary_restriction_check(fam, h, 4);
    REQUIRE(direct.ok == restricted.ok);
    if (!restricted.ok && arity >= 2) {
      // the restriction counterexample touches at most two coordinates
      REQUIRE(hamming(restricted.violation->x, restricted.violation->y) <= 2);
    }
  }
}

TEST_CASE("low arities reduce to the direct check") {
  Domain dom = testutil::make_domain(4);
  ChainOrder chain{{2, 0, 3, 1}};
  Rng rng(11);
  for (int iter = 0; iter < 20; ++iter) {
    CostFunction h = testutil::random_function(rng, "h", rng.range(1, 2), 4, 50);
    MmCheck a = binary_restriction_check(RestrictionFamily{chain}, h, 4);
    MmCheck b = is_multimorphism_of(chain.op_pair(), h, 4);
    REQUIRE(a.ok == b.ok);
    if (!a.ok) {
      REQUIRE(a.violation->x == b.violation->x);
      REQUIRE(a.violation->y == b.violation->y);
    }
  }
}

TEST_CASE("language-level check takes the shortcut without changing results") {
  Rng rng(31007);
  Domain dom = testutil::make_domain(4);
  auto odcs = enumerate_one_defect(dom);
  auto chains = enumerate_chains(dom);
  for (int iter = 0; iter < 20; ++iter) {
    Language lang;
    lang.domain = dom;
    lang.functions.push_back(testutil::random_function(rng, "t", 3, 4, rng.range(20, 80)));
    BinaryOpPair pair = rng.coin(50) ? odcs[rng.below(odcs.size())].pair
                                     : chains[rng.below(chains.size())].op_pair();
    MmCheck whole = is_multimorphism(pair, lang);
    MmCheck direct = is_multimorphism_of(pair, lang.functions[0], 4);
    REQUIRE(whole.ok == direct.ok);
    if (!whole.ok) {
      REQUIRE(whole.violation->x == direct.violation->x);
      REQUIRE(whole.violation->y == direct.violation->y);
    }
  }
}

TEST_CASE("multimorphism of a language is the conjunction over its functions") {
  Rng rng(99);
  Domain dom = testutil::make_domain(4);
  auto odcs = enumerate_one_defect(dom);
  for (int iter = 0; iter < 15; ++iter) {
    Language lang = testutil::random_language(rng, 4, 2, 3);
    const auto& pair = odcs[rng.below(odcs.size())].pair;
    bool all = true;
    for (const auto& f : lang.functions)
      if (!is_multimorphism_of(pair, f, 4).ok) all = false;
    REQUIRE(is_multimorphism(pair, lang).ok == all);
  }
}

TEST_CASE("pair JSON round-trip") {
  Language lang = testutil::load_language("gamma_ex.json");
  BinaryOpPair f1g1 = testutil::load_pair("f1g1.json", lang);
  Json j = pair_to_json(lang, f1g1);
  BinaryOpPair back = pair_from_json(lang, j);
  REQUIRE(back == f1g1);
}

TEST_CASE("pair classification") {
  Language lang = testutil::load_language("gamma_ex.json");
  ChainOrder chain{{3, 1, 0, 2}};
  REQUIRE(as_chain(chain.op_pair()));
  REQUIRE(as_chain(chain.op_pair())->order == chain.order);
  BinaryOpPair f1g1 = testutil::load_pair("f1g1.json", lang);
  REQUIRE_FALSE(as_chain(f1g1));
  auto odc = as_one_defect(f1g1, lang.domain);
  REQUIRE(odc);
  REQUIRE(odc->defect_lo == 1);
  REQUIRE(odc->defect_hi == 2);
}
