#include <mincsp/classifier.hpp>
#include <mincsp/mm_graph.hpp>
#include <mincsp/solver.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace mincsp;

constexpr int kExitOk = 0;
constexpr int kExitNone = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const Json& j) { std::cout << j.dump(2) << std::endl; }

struct SolveArgs {
  std::string lang_path, inst_path;
  std::string method = "auto";
  std::string witness_path;
};

int run_solve(const SolveArgs& args) {
  Language lang = parse_language(slurp(args.lang_path));
  Instance inst = parse_instance(slurp(args.inst_path), lang);
  std::optional<BinaryOpPair> witness;
  if (!args.witness_path.empty()) witness = parse_pair(slurp(args.witness_path), lang);

  std::optional<std::pair<Rational, Assignment>> result;
  if (args.method == "brute") {
    result = solve_brute(lang, inst);
  } else if (args.method == "auto") {
    result = solve(lang, inst, witness);
  } else {
    std::optional<TractableStructure> structure;
    if (witness) {
      if (!is_multimorphism(*witness, lang).ok)
        throw UsageError("witness is not a multimorphism of the language");
      if (args.method == "chain") {
        if (auto c = as_chain(*witness)) structure = *c;
      } else if (lang.domain.size() == 4) {
        if (auto o = as_one_defect(*witness, lang.domain)) structure = *o;
      }
      if (!structure) throw UsageError("witness does not match the requested method");
    } else {
      ClassificationReport rep = classify(lang);
      if (rep.core.domain.size() == lang.domain.size()) {
        for (const auto& w : rep.witnesses) {
          if (args.method == "chain" && w.chain) {
            structure = *w.chain;
            break;
          }
          if (args.method == "one-defect" && w.one_defect) {
            structure = *w.one_defect;
            break;
          }
        }
      }
      if (!structure) {
        std::cerr << "no verified " << args.method << " witness for this language\n";
        return kExitNone;
      }
    }
    result = solve_with_structure(lang, inst, *structure);
  }

  if (!result) {
    emit(Json{{"infeasible", true}});
    return kExitNone;
  }
  Json j;
  j["value"] = format_rational(result->first);
  Json assign = Json::object();
  for (std::size_t v = 0; v < inst.variables.size(); ++v)
    assign[inst.variables[v]] = lang.domain.label(result->second[v]);
  j["assignment"] = std::move(assign);
  emit(j);
  return kExitOk;
}

int run_classify(const std::string& lang_path, bool with_graph, const GadgetBudget& budget) {
  Language lang = parse_language(slurp(lang_path));
  ClassifyOptions opt;
  opt.with_graph = with_graph;
  opt.graph_budget = budget;
  ClassificationReport rep = classify(lang, opt);
  emit(report_to_json(rep));
  return kExitOk;
}

int run_graph(const std::string& lang_path, const GadgetBudget& budget,
              const std::string& dot_path) {
  Language lang = parse_language(slurp(lang_path));
  MultimorphismGraph g = build_graph(lang, budget);
  close_edges(g);
  Json j = graph_to_json(g);
  auto witness = find_hardness_witness(g);
  if (witness) {
    Json w;
    w["loop_on"] = Json::array({lang.domain.label(witness->pair.first),
                                lang.domain.label(witness->pair.second)});
    w["loop_certified"] = witness->loop_certified;
    w["sigma_certified"] = witness->sigma_certified;
    w["note"] = witness->note;
    j["hardness_witness"] = std::move(w);
  } else {
    j["hardness_witness"] = nullptr;
  }
  auto cands = extract_candidates(g);
  j["candidates"] = Json::array();
  std::size_t verified_count = 0;
  for (const auto& c : cands) {
    Json cj = pair_to_json(lang, c.pair());
    cj["kind"] = c.is_chain() ? "chain" : "one_defect";
    cj["provenance"] = c.provenance;
    bool ok = is_multimorphism(c.pair(), lang).ok;
    cj["verified"] = ok;
    verified_count += ok;
    j["candidates"].push_back(std::move(cj));
  }
  j["verified_candidates"] = verified_count;
  if (!dot_path.empty()) {
    std::ofstream out(dot_path);
    if (!out) throw UsageError("cannot write '" + dot_path + "'");
    out << graph_to_dot(g);
  }
  emit(j);
  return kExitOk;
}

int run_check_mm(const std::string& lang_path, const std::string& mm_path) {
  Language lang = parse_language(slurp(lang_path));
  BinaryOpPair pair = parse_pair(slurp(mm_path), lang);
  MmCheck chk = is_multimorphism(pair, lang);
  Json j;
  j["multimorphism"] = chk.ok;
  if (!chk.ok) {
    j["function"] = lang.functions[static_cast<std::size_t>(chk.violation->function)].name;
    j["x"] = tuple_to_json(lang, chk.violation->x);
    j["y"] = tuple_to_json(lang, chk.violation->y);
  }
  emit(j);
  return chk.ok ? kExitOk : kExitNone;
}

int run_core(const std::string& lang_path) {
  Language lang = parse_language(slurp(lang_path));
  CoreResult core = core_of(lang);
  Json j;
  j["is_core"] = core.steps.empty();
  j["core_domain"] = Json::array();
  for (const auto& l : core.core.domain.labels) j["core_domain"].push_back(l);
  j["retraction"] = Json::array();
  const Language* cur = &lang;
  for (const auto& step : core.steps) {
    Json js = Json::object();
    for (Elem e = 0; e < cur->domain.size(); ++e)
      js[cur->domain.label(e)] = cur->domain.label(step.endo(e));
    j["retraction"].push_back(std::move(js));
    cur = &step.language;
  }
  j["core_language"] = serialize_language_json(core.core);
  emit(j);
  return kExitOk;
}

// splitmix64, matching the test-suite generators
struct Rng {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
};

struct GenArgs {
  std::uint64_t seed = 1;
  int domain = 4;
  int arity = 2;
  int functions = 3;
  std::string kind = "language";
  std::string lang_path;
  int vars = 4;
  int terms = 4;
};

int run_gen(const GenArgs& args) {
  Rng rng{args.seed};
  if (args.kind == "language") {
    Json j;
    j["seed"] = args.seed;
    Json domain = Json::array();
    for (int i = 0; i < args.domain; ++i)
      domain.push_back(std::string(1, static_cast<char>('a' + i)));
    j["domain"] = domain;
    j["functions"] = Json::array();
    for (int i = 0; i < args.functions; ++i) {
      int arity = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(args.arity)));
      Json jf;
      jf["name"] = "f" + std::to_string(i);
      jf["arity"] = arity;
      Json zeros = Json::array();
      std::uint64_t zero_bias = 20 + rng.below(61);
      std::uint64_t total = 1;
      for (int k = 0; k < arity; ++k) total *= static_cast<std::uint64_t>(args.domain);
      for (std::uint64_t t = 0; t < total; ++t) {
        if (rng.below(100) >= zero_bias) continue;
        Json tup = Json::array();
        std::uint64_t v = t;
        std::vector<int> digits(static_cast<std::size_t>(arity));
        for (int k = arity - 1; k >= 0; --k) {
          digits[static_cast<std::size_t>(k)] =
              static_cast<int>(v % static_cast<std::uint64_t>(args.domain));
          v /= static_cast<std::uint64_t>(args.domain);
        }
        for (int k = 0; k < arity; ++k)
          tup.push_back(std::string(1, static_cast<char>('a' + digits[static_cast<std::size_t>(k)])));
        zeros.push_back(std::move(tup));
      }
      jf["zeros"] = std::move(zeros);
      j["functions"].push_back(std::move(jf));
    }
    j["relations"] = Json::array();
    emit(j);
    return kExitOk;
  }
  if (args.kind == "instance") {
    if (args.lang_path.empty()) throw UsageError("gen --kind instance requires --lang");
    Language lang = parse_language(slurp(args.lang_path));
    if (lang.functions.empty()) throw UsageError("language has no functions to apply");
    Json j;
    j["seed"] = args.seed;
    Json vars = Json::array();
    for (int i = 0; i < args.vars; ++i) vars.push_back("v" + std::to_string(i));
    j["variables"] = vars;
    j["terms"] = Json::array();
    static const char* weights[] = {"1", "2", "3", "1/2", "1/3", "5/2"};
    for (int i = 0; i < args.terms; ++i) {
      const CostFunction& f = lang.functions[rng.below(lang.functions.size())];
      Json jt;
      jt["function"] = f.name;
      jt["weight"] = weights[rng.below(6)];
      Json scope = Json::array();
      for (int k = 0; k < f.arity; ++k)
        scope.push_back("v" + std::to_string(rng.below(static_cast<std::uint64_t>(args.vars))));
      jt["scope"] = std::move(scope);
      j["terms"].push_back(std::move(jt));
    }
    j["constraints"] = Json::array();
    emit(j);
    return kExitOk;
  }
  throw UsageError("unknown gen kind '" + args.kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Min CSP toolkit: dichotomy classification, multimorphism "
               "checking and exact solving over domains of up to four elements"};
  app.require_subcommand(1);

  GadgetBudget budget;
  std::uint64_t budget_gadgets = budget.max_gadgets;
  int budget_vars = budget.max_aux;
  int budget_terms = budget.max_terms;

  std::string lang_path, inst_path, mm_path, dot_path;
  bool with_graph = false;

  auto* classify_cmd = app.add_subcommand("classify", "classify a language file");
  classify_cmd->add_option("language", lang_path, "language JSON file")->required();
  classify_cmd->add_flag("--graph", with_graph, "attach graph corroboration");
  classify_cmd->add_option("--budget-vars", budget_vars, "gadget search: auxiliary variables");
  classify_cmd->add_option("--budget-terms", budget_terms, "gadget search: terms per gadget");
  classify_cmd->add_option("--budget-gadgets", budget_gadgets, "gadget search: total gadgets");

  SolveArgs sargs;
  auto* solve_cmd = app.add_subcommand("solve", "solve an instance exactly");
  solve_cmd->add_option("language", sargs.lang_path, "language JSON file")->required();
  solve_cmd->add_option("instance", sargs.inst_path, "instance JSON file")->required();
  solve_cmd->add_option("--method", sargs.method, "auto|brute|chain|one-defect")
      ->check(CLI::IsMember({"auto", "brute", "chain", "one-defect"}));
  solve_cmd->add_option("--witness", sargs.witness_path, "multimorphism JSON file");

  auto* graph_cmd = app.add_subcommand("graph", "build the partial-multimorphism graph");
  graph_cmd->add_option("language", lang_path, "language JSON file")->required();
  graph_cmd->add_option("--budget-vars", budget_vars, "auxiliary variables per gadget");
  graph_cmd->add_option("--budget-terms", budget_terms, "terms per gadget");
  graph_cmd->add_option("--budget-gadgets", budget_gadgets, "total gadgets");
  graph_cmd->add_option("--emit-dot", dot_path, "write a DOT rendering here");

  auto* check_cmd = app.add_subcommand("check-mm", "verify a multimorphism pair");
  check_cmd->add_option("language", lang_path, "language JSON file")->required();
  check_cmd->add_option("multimorphism", mm_path, "pair JSON file")->required();

  auto* core_cmd = app.add_subcommand("core", "compute the core of a language");
  core_cmd->add_option("language", lang_path, "language JSON file")->required();

  GenArgs gargs;
  auto* gen_cmd = app.add_subcommand("gen", "generate random test inputs");
  gen_cmd->add_option("--seed", gargs.seed, "random seed");
  gen_cmd->add_option("--domain", gargs.domain, "domain size")->check(CLI::Range(1, 8));
  gen_cmd->add_option("--arity", gargs.arity, "maximum arity")->check(CLI::Range(1, 4));
  gen_cmd->add_option("--functions", gargs.functions, "number of functions");
  gen_cmd->add_option("--kind", gargs.kind, "language|instance")
      ->check(CLI::IsMember({"language", "instance"}));
  gen_cmd->add_option("--lang", gargs.lang_path, "language file (instance generation)");
  gen_cmd->add_option("--vars", gargs.vars, "variables (instance generation)");
  gen_cmd->add_option("--terms", gargs.terms, "terms (instance generation)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  budget.max_aux = budget_vars;
  budget.max_terms = budget_terms;
  budget.max_gadgets = budget_gadgets;

  try {
    if (classify_cmd->parsed()) return run_classify(lang_path, with_graph, budget);
    if (solve_cmd->parsed()) return run_solve(sargs);
    if (graph_cmd->parsed()) return run_graph(lang_path, budget, dot_path);
    if (check_cmd->parsed()) return run_check_mm(lang_path, mm_path);
    if (core_cmd->parsed()) return run_core(lang_path);
    if (gen_cmd->parsed()) return run_gen(gargs);
  } catch (const BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
