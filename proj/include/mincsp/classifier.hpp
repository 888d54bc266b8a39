#pragma once

#include <mincsp/core_endo.hpp>
#include <mincsp/mm_graph.hpp>
#include <mincsp/morphisms.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mincsp {

struct VerifiedWitness {
  std::string kind;  // "chain" | "one_defect" | "trivial_single_element"
  BinaryOpPair pair;
  std::string description;
  std::optional<ChainOrder> chain;
  std::optional<OneDefectChain> one_defect;
};

struct CandidateFailure {
  std::string kind;
  std::string description;
  MmViolation violation;  // function index refers to the core language
};

struct ClassificationReport {
  enum class Verdict { Tractable, NpHard };
  Verdict verdict = Verdict::NpHard;

  Language input;
  Language core;
  std::vector<RetractStep> retraction;
  std::vector<std::string> crisp_ignored;

  std::vector<VerifiedWitness> witnesses;  // every verified candidate
  std::vector<CandidateFailure> failures;  // every failed candidate, with counterexample
  std::vector<std::string> citations;
  std::vector<std::string> trace;

  std::optional<HardnessWitness> graph_witness;
  std::optional<Json> graph_dump;

  bool tractable() const { return verdict == Verdict::Tractable; }
  const VerifiedWitness* primary_witness() const {
    return witnesses.empty() ? nullptr : &witnesses.front();
  }
};

struct ClassifyOptions {
  bool with_graph = false;  // corroboration only, never part of the decision
  GadgetBudget graph_budget;
  std::uint64_t mm_budget = std::uint64_t(1) << 32;
};

// Complete finite test on domains of at most four elements: retract to the
// core, then search all chains and (on four elements) all 1-defect chains.
inline ClassificationReport classify(const Language& lang, const ClassifyOptions& opt = {}) {
  if (lang.domain.size() > 4)
    throw PreconditionError("classification is limited to domains of at most 4 elements");

  ClassificationReport rep;
  rep.input = lang;
  for (const auto& r : lang.relations) rep.crisp_ignored.push_back(r.name);
  if (!rep.crisp_ignored.empty())
    rep.trace.push_back("crisp relations are ignored for classification (constants are "
                        "complexity-neutral for cores)");

  Language funcs_only = lang;
  funcs_only.relations.clear();
  CoreResult core = core_of(funcs_only);
  rep.core = core.core;
  rep.retraction = core.steps;
  rep.trace.push_back("core domain: " + std::to_string(rep.core.domain.size()) + " element(s)");

  const int dc = rep.core.domain.size();
  auto try_chain = [&](const ChainOrder& chain) {
    BinaryOpPair p = chain.op_pair();
    MmCheck chk = is_multimorphism(p, rep.core, opt.mm_budget);
    if (chk.ok) {
      VerifiedWitness w;
      w.kind = "chain";
      w.pair = p;
      w.description = chain.describe(rep.core.domain);
      w.chain = chain;
      rep.witnesses.push_back(std::move(w));
    } else {
      rep.failures.push_back({"chain", chain.describe(rep.core.domain), *chk.violation});
    }
  };

  if (dc == 1) {
    rep.verdict = ClassificationReport::Verdict::Tractable;
    VerifiedWitness w;
    w.kind = "trivial_single_element";
    ChainOrder unit{{0}};
    w.pair = unit.op_pair();
    w.chain = unit;
    w.description = "single-element core";
    rep.witnesses.push_back(std::move(w));
    rep.trace.push_back("single-element core: every instance is solved by the constant assignment");
  } else if (dc <= 3) {
    for (const auto& chain : enumerate_chains(rep.core.domain)) try_chain(chain);
    rep.verdict = rep.witnesses.empty() ? ClassificationReport::Verdict::NpHard
                                        : ClassificationReport::Verdict::Tractable;
    rep.citations.push_back(
        dc == 2 ? "two-element dichotomy: Cohen, Cooper, Jeavons, Krokhin, The complexity of soft "
                  "constraint satisfaction, Artif. Intell. 170 (2006)"
                : "three-element dichotomy: Jonsson, Klasson, Krokhin, The approximability of "
                  "three-valued MAX CSP, SIAM J. Comput. 35 (2006)");
    rep.trace.push_back("criterion on " + std::to_string(dc) +
                        " elements: submodularity on some chain of the core domain");
  } else {
    for (const auto& chain : enumerate_chains(rep.core.domain)) try_chain(chain);
    for (const auto& odc : enumerate_one_defect(rep.core.domain)) {
      MmCheck chk = is_multimorphism(odc.pair, rep.core, opt.mm_budget);
      if (chk.ok) {
        VerifiedWitness w;
        w.kind = "one_defect";
        w.pair = odc.pair;
        w.description = odc.describe(rep.core.domain);
        w.one_defect = odc;
        rep.witnesses.push_back(std::move(w));
      } else {
        rep.failures.push_back({"one_defect", odc.describe(rep.core.domain), *chk.violation});
      }
    }
    rep.verdict = rep.witnesses.empty() ? ClassificationReport::Verdict::NpHard
                                        : ClassificationReport::Verdict::Tractable;
    rep.trace.push_back("criterion on 4 elements: submodularity on one of 24 chains or one of 36 "
                        "1-defect chain multimorphisms");
  }

  if (!rep.tractable())
    rep.trace.push_back("no candidate verified; every failure carries a counterexample");

  if (opt.with_graph && dc >= 2) {
    MultimorphismGraph g = build_graph(rep.core, opt.graph_budget);
    close_edges(g);
    rep.graph_witness = find_hardness_witness(g);
    rep.graph_dump = graph_to_json(g);
    rep.trace.push_back(rep.graph_witness
                            ? "graph corroboration: definable loop found"
                            : "graph corroboration: no definable loop at this budget");
  }
  return rep;
}

inline Json witness_to_json(const Language& core, const VerifiedWitness& w) {
  Json j;
  j["kind"] = w.kind;
  j["description"] = w.description;
  if (w.chain) {
    Json order = Json::array();
    for (Elem e : w.chain->order) order.push_back(core.domain.label(e));
    j["order"] = std::move(order);
  }
  if (w.one_defect)
    j["defect"] = Json::array({core.domain.label(w.one_defect->defect_lo),
                               core.domain.label(w.one_defect->defect_hi)});
  j["f"] = binary_op_to_json(core, w.pair.f);
  j["g"] = binary_op_to_json(core, w.pair.g);
  return j;
}

inline Json report_to_json(const ClassificationReport& rep) {
  Json j;
  j["verdict"] = rep.tractable() ? "tractable" : "np_hard";
  j["core_domain"] = Json::array();
  for (const auto& l : rep.core.domain.labels) j["core_domain"].push_back(l);
  if (const VerifiedWitness* w = rep.primary_witness())
    j["witness"] = witness_to_json(rep.core, *w);
  else
    j["witness"] = nullptr;

  j["witnesses"] = Json::array();
  for (const auto& w : rep.witnesses) j["witnesses"].push_back(witness_to_json(rep.core, w));

  j["failures"] = Json::array();
  for (const auto& f : rep.failures) {
    Json jf;
    jf["kind"] = f.kind;
    jf["candidate"] = f.description;
    jf["function"] = rep.core.functions[static_cast<std::size_t>(f.violation.function)].name;
    jf["x"] = tuple_to_json(rep.core, f.violation.x);
    jf["y"] = tuple_to_json(rep.core, f.violation.y);
    j["failures"].push_back(std::move(jf));
  }

  j["retraction"] = Json::array();
  {
    const Language* cur = &rep.input;
    for (const auto& step : rep.retraction) {
      Json js;
      Json map = Json::object();
      for (Elem e = 0; e < cur->domain.size(); ++e)
        map[cur->domain.label(e)] = cur->domain.label(step.endo(e));
      js["endomorphism"] = std::move(map);
      Json img = Json::array();
      for (Elem e : step.image) img.push_back(cur->domain.label(e));
      js["image"] = std::move(img);
      j["retraction"].push_back(std::move(js));
      cur = &step.language;
    }
  }

  j["crisp_relations_ignored"] = Json::array();
  for (const auto& r : rep.crisp_ignored) j["crisp_relations_ignored"].push_back(r);
  j["citations"] = Json::array();
  for (const auto& c : rep.citations) j["citations"].push_back(c);
  j["trace"] = Json::array();
  for (const auto& t : rep.trace) j["trace"].push_back(t);

  if (rep.graph_witness) {
    Json gw;
    gw["loop_on"] = Json::array({rep.core.domain.label(rep.graph_witness->pair.first),
                                 rep.core.domain.label(rep.graph_witness->pair.second)});
    gw["loop_certified"] = rep.graph_witness->loop_certified;
    gw["sigma_certified"] = rep.graph_witness->sigma_certified;
    gw["note"] = rep.graph_witness->note;
    j["graph_witness"] = std::move(gw);
  }
  if (rep.graph_dump) j["graph"] = *rep.graph_dump;
  return j;
}

}  // namespace mincsp
