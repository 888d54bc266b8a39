#pragma once

#include <mincsp/core_endo.hpp>
#include <mincsp/language.hpp>
#include <mincsp/morphisms.hpp>
#include <mincsp/oracle.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

using namespace mincsp;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string data_path(const std::string& name) {
  return std::string(MINCSP_TEST_DATA_DIR) + "/" + name;
}

inline Language load_language(const std::string& name) {
  return parse_language(read_file(data_path(name)));
}

inline Instance load_instance(const std::string& name, const Language& lang) {
  return parse_instance(read_file(data_path(name)), lang);
}

inline BinaryOpPair load_pair(const std::string& name, const Language& lang) {
  return parse_pair(read_file(data_path(name)), lang);
}

// splitmix64: stable across platforms, unlike <random> distributions.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t below(std::uint64_t n) { return next() % n; }
  int range(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
  bool coin(int percent) { return below(100) < static_cast<std::uint64_t>(percent); }
};

inline Domain make_domain(int d) {
  std::vector<std::string> labels;
  for (int i = 0; i < d; ++i) labels.push_back(std::string(1, static_cast<char>('a' + i)));
  return Domain(labels);
}

inline CostFunction random_function(Rng& rng, const std::string& name, int arity, int d,
                                    int zero_percent) {
  CostFunction f(name, arity, d);
  for (std::size_t i = 0; i < f.table_size(); ++i) f.set_zero(i, rng.coin(zero_percent));
  return f;
}

inline Language random_language(Rng& rng, int d, int max_arity, int nfun) {
  Language lang;
  lang.domain = make_domain(d);
  for (int i = 0; i < nfun; ++i) {
    int arity = rng.range(1, max_arity);
    lang.functions.push_back(
        random_function(rng, "f" + std::to_string(i), arity, d, rng.range(20, 80)));
  }
  return lang;
}

// Rejection sampler for languages every function of which admits `pair`.
inline Language random_language_with_pair(Rng& rng, const Domain& dom, const BinaryOpPair& pair,
                                          int nfun, int max_arity) {
  Language lang;
  lang.domain = dom;
  const int d = dom.size();
  for (int i = 0; i < nfun; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 5000) throw std::runtime_error("sampler: no invariant function found");
      int arity = rng.range(1, max_arity);
      CostFunction f = random_function(rng, "f" + std::to_string(i), arity, d, rng.range(20, 80));
      if (is_multimorphism_of(pair, f, d).ok) {
        lang.functions.push_back(std::move(f));
        break;
      }
    }
  }
  return lang;
}

inline Instance random_instance(Rng& rng, const Language& lang, int nvars, int nterms) {
  Instance inst;
  for (int i = 0; i < nvars; ++i) inst.variables.push_back("v" + std::to_string(i));
  static const char* weights[] = {"1", "2", "3", "1/2", "1/3", "5/2"};
  for (int i = 0; i < nterms; ++i) {
    Term t;
    t.function = static_cast<int>(rng.below(lang.functions.size()));
    t.weight = parse_rational(weights[rng.below(6)]);
    int k = lang.functions[static_cast<std::size_t>(t.function)].arity;
    for (int j = 0; j < k; ++j) t.scope.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(nvars))));
    inst.terms.push_back(std::move(t));
  }
  return inst;
}

}  // namespace testutil
