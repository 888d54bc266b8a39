#include "helpers.hpp"

#include <mincsp/classifier.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

using namespace mincsp;
using testutil::Rng;

namespace {

Language relabel(const Language& lang, const std::vector<Elem>& perm) {
  // perm maps old element -> new element; labels stay attached to positions
  Language out;
  out.domain = lang.domain;
  const int d = lang.domain.size();
  for (const auto& f : lang.functions) {
    CostFunction nf(f.name, f.arity, d);
    for (std::size_t idx = 0; idx < f.table_size(); ++idx) {
      if (!f.is_zero(idx)) continue;
      Tuple t = decode_tuple(idx, d, f.arity);
      for (Elem& e : t) e = perm[static_cast<std::size_t>(e)];
      nf.set_zero(encode_tuple(t, d));
    }
    out.functions.push_back(std::move(nf));
  }
  return out;
}

Language heq2() {
  Language lang;
  lang.domain = testutil::make_domain(2);
  CostFunction h("h_eq", 2, 2);
  h.set_zero(encode_tuple({0, 1}, 2));
  h.set_zero(encode_tuple({1, 0}, 2));
  lang.functions.push_back(h);
  return lang;
}

}  // namespace

TEST_CASE("example language is classified tractable with the example witnesses") {
  Language lang = testutil::load_language("gamma_ex.json");
  ClassificationReport rep = classify(lang);
  REQUIRE(rep.tractable());
  REQUIRE(rep.core.domain.size() == 4);

  BinaryOpPair f1g1 = testutil::load_pair("f1g1.json", lang);
  BinaryOpPair f2g2 = testutil::load_pair("f2g2.json", lang);
  bool has_f1 = false, has_f2 = false;
  for (const auto& w : rep.witnesses) {
    if (w.pair == f1g1) has_f1 = true;
    if (w.pair == f2g2) has_f2 = true;
  }
  REQUIRE(has_f1);
  REQUIRE(has_f2);

  int chain_failures = 0;
  for (const auto& f : rep.failures) chain_failures += f.kind == "chain";
  REQUIRE(chain_failures == 24);

  // recorded counterexamples re-verify against the inequality
  for (const auto& f : rep.failures) {
    const CostFunction& h = rep.core.functions[static_cast<std::size_t>(f.violation.function)];
    BinaryOpPair pair;
    bool found = false;
    for (const auto& c : enumerate_chains(rep.core.domain))
      if (c.describe(rep.core.domain) == f.description) {
        pair = c.op_pair();
        found = true;
      }
    for (const auto& o : enumerate_one_defect(rep.core.domain))
      if (o.describe(rep.core.domain) == f.description) {
        pair = o.pair;
        found = true;
      }
    REQUIRE(found);
    const int d = 4;
    std::size_t fx = 0, gx = 0, xx = encode_tuple(f.violation.x, d), yx = encode_tuple(f.violation.y, d);
    for (std::size_t i = 0; i < f.violation.x.size(); ++i) {
      fx = fx * d + static_cast<std::size_t>(pair.f(f.violation.x[i], f.violation.y[i]));
      gx = gx * d + static_cast<std::size_t>(pair.g(f.violation.x[i], f.violation.y[i]));
    }
    REQUIRE(h.value(fx) + h.value(gx) > h.value(xx) + h.value(yx));
  }
}

TEST_CASE("two-element equality language is NP-hard") {
  ClassificationReport rep = classify(heq2());
  REQUIRE_FALSE(rep.tractable());
  REQUIRE(rep.failures.size() == 2);  // both chains fail
  REQUIRE(rep.core.domain.size() == 2);
}

TEST_CASE("four-element equality language fails every candidate") {
  Language lang;
  lang.domain = testutil::make_domain(4);
  CostFunction h("h_eq", 2, 4);
  for (Elem x = 0; x < 4; ++x)
    for (Elem y = 0; y < 4; ++y)
      if (x != y) h.set_zero(encode_tuple({x, y}, 4));
  lang.functions.push_back(h);

  ClassificationReport rep = classify(lang);
  REQUIRE_FALSE(rep.tractable());
  REQUIRE(rep.core.domain.size() == 4);
  REQUIRE(rep.failures.size() == 60);  // 24 chains + 36 1-defect structures
  for (const auto& f : rep.failures) REQUIRE_FALSE(f.violation.x.empty());
}

TEST_CASE("non-core languages classify through their core") {
  Language lang = testutil::load_language("u_ab.json");
  ClassificationReport rep = classify(lang);
  REQUIRE(rep.tractable());
  REQUIRE(rep.core.domain.size() == 1);
  REQUIRE(rep.primary_witness()->kind == "trivial_single_element");
}

TEST_CASE("verdict is invariant under relabeling") {
  Language lang = testutil::load_language("gamma_ex.json");
  std::vector<Elem> perm{0, 1, 2, 3};
  do {
    Language renamed = relabel(lang, perm);
    REQUIRE(classify(renamed).tractable());
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("verdict matches the core verdict on random languages") {
  Rng rng(90210);
  int done = 0;
  for (int iter = 0; iter < 60 && done < 12; ++iter) {
    Language lang = testutil::random_language(rng, 4, 2, 2);
    CoreResult core = core_of(lang);
    if (core.steps.empty()) continue;  // want genuinely non-core samples
    ++done;
    REQUIRE(classify(lang).tractable() == classify(core.core).tractable());
  }
  REQUIRE(done >= 8);
}

TEST_CASE("adding an invariant function keeps the verdict") {
  Language lang = testutil::load_language("gamma_ex.json");
  ClassificationReport rep = classify(lang);
  REQUIRE(rep.tractable());
  const VerifiedWitness* w = rep.primary_witness();
  Rng rng(777);
  for (int iter = 0; iter < 5; ++iter) {
    Language bigger = lang;
    for (int attempt = 0;; ++attempt) {
      REQUIRE(attempt < 5000);
      CostFunction f = testutil::random_function(rng, "extra", rng.range(1, 2), 4, rng.range(20, 80));
      if (is_multimorphism_of(w->pair, f, 4).ok) {
        bigger.functions.push_back(f);
        break;
      }
    }
    REQUIRE(classify(bigger).tractable());
  }
}

TEST_CASE("crisp relations are reported but ignored") {
  Language lang = testutil::load_language("gamma_ex.json");
  auto [ext, consts] = with_constants(lang);
  ClassificationReport rep = classify(ext);
  REQUIRE(rep.tractable());
  REQUIRE(rep.crisp_ignored.size() == 4);
}

TEST_CASE("oversized domains are rejected") {
  Language lang;
  lang.domain = testutil::make_domain(5);
  REQUIRE_THROWS_AS(classify(lang), PreconditionError);
}

TEST_CASE("the empty language collapses and classifies tractable") {
  Language lang;
  lang.domain = testutil::make_domain(4);
  ClassificationReport rep = classify(lang);
  REQUIRE(rep.tractable());
  REQUIRE(rep.core.domain.size() == 1);
}

TEST_CASE("report serializes with the documented shape") {
  Language lang = testutil::load_language("gamma_ex.json");
  ClassificationReport rep = classify(lang);
  Json j = report_to_json(rep);
  REQUIRE(j["verdict"] == "tractable");
  REQUIRE(j["core_domain"].size() == 4);
  REQUIRE(j["witness"]["kind"] == "one_defect");
  REQUIRE(j["witness"]["f"].size() == 4);
  REQUIRE(j["witness"]["g"].size() == 4);
  REQUIRE(j.contains("trace"));
  int chain_failures = 0;
  for (const auto& f : j["failures"]) chain_failures += f["kind"] == "chain";
  REQUIRE(chain_failures == 24);
  REQUIRE(j["failures"].size() == 56);  // 24 chains + 32 failing 1-defect structures

  ClassificationReport hard = classify(heq2());
  Json jh = report_to_json(hard);
  REQUIRE(jh["verdict"] == "np_hard");
  REQUIRE(jh["witness"].is_null());
}

TEST_CASE("graph corroboration attaches when requested") {
  Language lang = heq2();
  ClassifyOptions opt;
  opt.with_graph = true;
  opt.graph_budget.max_gadgets = 2000;
  ClassificationReport rep = classify(lang, opt);
  REQUIRE_FALSE(rep.tractable());
  REQUIRE(rep.graph_witness);
  REQUIRE(rep.graph_dump);
  Json j = report_to_json(rep);
  REQUIRE(j.contains("graph_witness"));
}
