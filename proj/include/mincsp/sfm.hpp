#pragma once

#include <mincsp/rational.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace mincsp {

class CertificateError : public Error {
  using Error::Error;
};

// Minimisation of an integer-valued submodular function over a product of
// chains. Each site contributes a chain of `size` levels; an assignment picks
// one level per site. Sets of threshold indicators correspond to assignments
// exactly when they are down-sets of the per-site prefix order.
struct SfmProblem {
  std::vector<int> site_sizes;
  std::function<BigInt(const std::vector<int>&)> oracle;
  // Upper bound on max - min of the objective; used to weight the penalty
  // that extends the objective from down-sets to arbitrary threshold sets.
  BigInt range_bound = 1;
};

struct SfmOptions {
  enum class Mode { Auto, MinNorm, Exhaustive };
  Mode mode = Mode::Auto;
  std::uint64_t exhaustive_threshold = 65536;
  std::uint64_t max_major_iterations = 100000;
};

struct SfmResult {
  BigInt value = 0;
  std::vector<int> levels;  // pointwise-least minimizer for submodular input
  bool used_min_norm = false;
  std::uint64_t oracle_calls = 0;
};

namespace sfm_detail {

struct GroundSet {
  // element e corresponds to threshold `level[e]` of chain `site[e]`
  std::vector<int> site, level;
  int size() const { return static_cast<int>(site.size()); }
};

inline GroundSet make_ground_set(const std::vector<int>& sizes) {
  GroundSet g;
  for (std::size_t s = 0; s < sizes.size(); ++s)
    for (int j = 1; j < sizes[s]; ++j) {
      g.site.push_back(static_cast<int>(s));
      g.level.push_back(j);
    }
  return g;
}

// Extended objective over arbitrary subsets: the value at the down-closure
// plus a penalty per missing predecessor. Submodular whenever the oracle is
// submodular on down-sets and the penalty weight exceeds the value range.
class Extension {
 public:
  Extension(const SfmProblem& p, const GroundSet& g)
      : problem_(p), ground_(g), penalty_(p.range_bound + 1) {
    base_ = p.oracle(std::vector<int>(p.site_sizes.size(), 0));
  }

  const BigInt& base() const { return base_; }
  const BigInt& penalty() const { return penalty_; }
  std::uint64_t calls() const { return calls_; }

  // membership mask -> extended value (normalised so that f(empty) = 0)
  BigInt value(const std::vector<char>& in) {
    std::vector<int> top(problem_.site_sizes.size(), 0);
    std::vector<int> cnt(problem_.site_sizes.size(), 0);
    for (int e = 0; e < ground_.size(); ++e)
      if (in[static_cast<std::size_t>(e)]) {
        auto s = static_cast<std::size_t>(ground_.site[static_cast<std::size_t>(e)]);
        top[s] = std::max(top[s], ground_.level[static_cast<std::size_t>(e)]);
        ++cnt[s];
      }
    BigInt gap = 0;
    for (std::size_t s = 0; s < top.size(); ++s) gap += top[s] - cnt[s];
    ++calls_;
    return problem_.oracle(top) - base_ + penalty_ * gap;
  }

  // Greedy base-polytope vertex for the given visiting order.
  std::vector<Rational> greedy(const std::vector<int>& order) {
    std::vector<int> top(problem_.site_sizes.size(), 0);
    std::vector<int> cnt(problem_.site_sizes.size(), 0);
    BigInt gap = 0;
    BigInt prev = 0;
    std::vector<Rational> v(order.size());
    for (int e : order) {
      auto s = static_cast<std::size_t>(ground_.site[static_cast<std::size_t>(e)]);
      int j = ground_.level[static_cast<std::size_t>(e)];
      int old_top = top[s];
      top[s] = std::max(top[s], j);
      ++cnt[s];
      gap += (top[s] - old_top) - 1;
      ++calls_;
      BigInt cur = problem_.oracle(top) - base_ + penalty_ * gap;
      v[static_cast<std::size_t>(e)] = Rational(cur - prev);
      prev = cur;
    }
    return v;
  }

 private:
  const SfmProblem& problem_;
  const GroundSet& ground_;
  BigInt penalty_;
  BigInt base_ = 0;
  std::uint64_t calls_ = 0;
};

inline Rational dot(const std::vector<Rational>& a, const std::vector<Rational>& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Affine minimizer of the hull of affinely independent points, via the
// bordered Gram system solved exactly.
inline std::vector<Rational> affine_minimizer(const std::vector<std::vector<Rational>>& pts) {
  const std::size_t r = pts.size();
  std::vector<std::vector<Rational>> m(r + 1, std::vector<Rational>(r + 2, Rational(0)));
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) m[i][j] = dot(pts[i], pts[j]);
    m[i][r] = 1;
  }
  for (std::size_t j = 0; j < r; ++j) m[r][j] = 1;
  m[r][r + 1] = 1;

  const std::size_t n = r + 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && m[piv][col] == 0) ++piv;
    if (piv == n) throw CertificateError("min-norm: affinely dependent corral");
    std::swap(m[piv], m[col]);
    Rational p = m[col][col];
    for (std::size_t j = col; j <= n; ++j) m[col][j] /= p;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col || m[i][col] == 0) continue;
      Rational f = m[i][col];
      for (std::size_t j = col; j <= n; ++j) m[i][j] -= f * m[col][j];
    }
  }
  std::vector<Rational> mu(r);
  for (std::size_t i = 0; i < r; ++i) mu[i] = m[i][n];
  return mu;
}

}  // namespace sfm_detail

inline SfmResult sfm_exhaustive(const SfmProblem& p) {
  SfmResult res;
  std::vector<int> levels(p.site_sizes.size(), 0);
  std::optional<BigInt> best;
  std::vector<int> meet, first;
  std::uint64_t calls = 0;
  for (;;) {
    BigInt v = p.oracle(levels);
    ++calls;
    if (!best || v < *best) {
      best = v;
      meet = levels;
      first = levels;
    } else if (v == *best) {
      for (std::size_t i = 0; i < levels.size(); ++i) meet[i] = std::min(meet[i], levels[i]);
    }
    int i = static_cast<int>(levels.size()) - 1;
    while (i >= 0 && levels[static_cast<std::size_t>(i)] == p.site_sizes[static_cast<std::size_t>(i)] - 1) {
      levels[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++levels[static_cast<std::size_t>(i)];
  }
  res.value = *best;
  // The pointwise meet of all minimizers minimises again for submodular
  // input; otherwise fall back to the first (lexicographically least) one.
  res.levels = (p.oracle(meet) == *best) ? meet : first;
  res.oracle_calls = calls + 1;
  return res;
}

inline SfmResult sfm_min_norm(const SfmProblem& p, const SfmOptions& opt = {}) {
  using namespace sfm_detail;
  GroundSet ground = make_ground_set(p.site_sizes);
  const int m = ground.size();
  SfmResult res;
  res.used_min_norm = true;
  if (m == 0) {
    res.value = p.oracle(std::vector<int>(p.site_sizes.size(), 0));
    res.levels.assign(p.site_sizes.size(), 0);
    res.oracle_calls = 1;
    return res;
  }
  Extension ext(p, ground);

  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);

  std::vector<std::vector<Rational>> corral{ext.greedy(order)};
  std::vector<Rational> lambda{Rational(1)};
  std::vector<Rational> x = corral[0];

  for (std::uint64_t major = 0; major < opt.max_major_iterations; ++major) {
    // linear minimization oracle at x: greedy along increasing x
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (x[static_cast<std::size_t>(a)] != x[static_cast<std::size_t>(b)])
        return x[static_cast<std::size_t>(a)] < x[static_cast<std::size_t>(b)];
      return a < b;
    });
    std::vector<Rational> q = ext.greedy(order);
    if (dot(x, q) >= dot(x, x)) break;

    corral.push_back(q);
    lambda.push_back(0);

    for (;;) {
      std::vector<Rational> mu = affine_minimizer(corral);
      bool interior = true;
      for (const auto& c : mu)
        if (c < 0) {
          interior = false;
          break;
        }
      if (interior) {
        lambda = mu;
        break;
      }
      // step toward the affine minimizer until the first coefficient vanishes
      std::optional<Rational> theta;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        if (lambda[i] > mu[i]) {
          Rational t = lambda[i] / (lambda[i] - mu[i]);
          if (!theta || t < *theta) theta = t;
        }
      }
      if (!theta) throw CertificateError("min-norm: no feasible step");
      for (std::size_t i = 0; i < mu.size(); ++i)
        lambda[i] = lambda[i] + *theta * (mu[i] - lambda[i]);
      for (std::size_t i = corral.size(); i-- > 0;) {
        if (lambda[i] == 0) {
          corral.erase(corral.begin() + static_cast<std::ptrdiff_t>(i));
          lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(i));
        }
      }
    }
    x.assign(static_cast<std::size_t>(m), Rational(0));
    for (std::size_t i = 0; i < corral.size(); ++i)
      for (int e = 0; e < m; ++e) x[static_cast<std::size_t>(e)] += lambda[i] * corral[i][static_cast<std::size_t>(e)];
  }

  // minimal minimizer: strictly negative coordinates of the min-norm point
  std::vector<char> in(static_cast<std::size_t>(m), 0);
  Rational lower = 0;
  for (int e = 0; e < m; ++e)
    if (x[static_cast<std::size_t>(e)] < 0) {
      in[static_cast<std::size_t>(e)] = 1;
      lower += x[static_cast<std::size_t>(e)];
    }

  std::vector<int> levels(p.site_sizes.size(), 0);
  std::vector<int> cnt(p.site_sizes.size(), 0);
  for (int e = 0; e < m; ++e)
    if (in[static_cast<std::size_t>(e)]) {
      auto s = static_cast<std::size_t>(ground.site[static_cast<std::size_t>(e)]);
      levels[s] = std::max(levels[s], ground.level[static_cast<std::size_t>(e)]);
      ++cnt[s];
    }
  for (std::size_t s = 0; s < levels.size(); ++s)
    if (levels[s] != cnt[s])
      throw CertificateError("min-norm: minimizer is not a down-set (objective not submodular?)");

  BigInt val = ext.value(in);
  if (Rational(val) != lower)
    throw CertificateError("min-norm: certificate mismatch (objective not submodular?)");

  res.value = val + ext.base();
  res.levels = levels;
  res.oracle_calls = ext.calls();
  return res;
}

inline SfmResult sfm_minimize(const SfmProblem& p, const SfmOptions& opt = {}) {
  bool exhaustive = false;
  if (opt.mode == SfmOptions::Mode::Exhaustive) {
    exhaustive = true;
  } else if (opt.mode == SfmOptions::Mode::Auto) {
    std::uint64_t prod = 1;
    bool small = true;
    for (int s : p.site_sizes) {
      if (prod > opt.exhaustive_threshold / std::max(1, s)) {
        small = false;
        break;
      }
      prod *= static_cast<std::uint64_t>(std::max(1, s));
    }
    exhaustive = small && prod <= opt.exhaustive_threshold;
  }
  return exhaustive ? sfm_exhaustive(p) : sfm_min_norm(p, opt);
}

}  // namespace mincsp
