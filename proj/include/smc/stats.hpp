#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>

#include "smc/error.hpp"

namespace smc {

/// P(|p_hat - p| >= epsilon) <= delta.
struct ChernoffSpec {
  double epsilon = 0.01;
  double delta = 0.01;

  void validate() const {
    if (!(epsilon > 0 && epsilon < 1)) throw ConfigError("epsilon must lie in (0,1)");
    if (!(delta > 0 && delta < 1)) throw ConfigError("delta must lie in (0,1)");
  }
};

/// Indifference region theta +- epsilon; p0 = theta + epsilon, p1 = theta - epsilon.
struct SprtSpec {
  double theta = 0.5;
  double epsilon = 0.01;
  double alpha = 0.01;
  double beta = 0.01;

  double p0() const { return theta + epsilon; }
  double p1() const { return theta - epsilon; }

  void validate() const {
    if (!(epsilon > 0 && epsilon < 1)) throw ConfigError("epsilon must lie in (0,1)");
    if (!(theta > epsilon && theta < 1 - epsilon)) {
      throw ConfigError("theta must lie in (epsilon, 1 - epsilon)");
    }
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0,1)");
    if (!(beta > 0 && beta < 1)) throw ConfigError("beta must lie in (0,1)");
  }
};

namespace detail {

// Exact ceiling of a positive sample-size expression, at least 1. The value is
// computed in long double; the integer check N-1 < x <= N is asserted.
inline std::uint64_t ceil_count(long double x) {
  if (!(x < 1.8e19L)) throw BudgetError("sample size overflows 64 bits");
  if (x <= 1) return 1;
  const long double c = std::ceil(x);
  const auto n = static_cast<std::uint64_t>(c);
  if (!(static_cast<long double>(n) - 1 < x && x <= static_cast<long double>(n))) {
    throw Error("ceiling check failed");
  }
  return n;
}

// 1 - (1 - x)^(1/m) without cancellation.
inline long double root_complement(long double x, long double m) {
  return -std::expm1(std::log1p(-x) / m);
}

}  // namespace detail

/// N = ceil((ln 2 - ln delta) / (2 eps^2)).
inline std::uint64_t chernoff_n(const ChernoffSpec& spec) {
  spec.validate();
  const long double eps = spec.epsilon;
  return detail::ceil_count((std::log(2.0L) - std::log(static_cast<long double>(spec.delta))) /
                            (2 * eps * eps));
}

/// Per-scheduler N so that all M estimates are within epsilon with probability 1 - delta.
inline std::uint64_t chernoff_n_multi(const ChernoffSpec& spec, std::uint64_t schedulers) {
  spec.validate();
  if (schedulers < 1) throw ConfigError("scheduler count must be at least 1");
  const long double eps = spec.epsilon;
  const long double tail = detail::root_complement(spec.delta, static_cast<long double>(schedulers));
  return detail::ceil_count((std::log(2.0L) - std::log(tail)) / (2 * eps * eps));
}

/// alpha_M = 1 - (1 - alpha)^(1/M).
inline double multi_test_correction(double alpha, std::uint64_t m) {
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("error probability must lie in (0,1)");
  if (m < 1) throw ConfigError("test count must be at least 1");
  if (m == 1) return alpha;
  return static_cast<double>(detail::root_complement(alpha, static_cast<long double>(m)));
}

/// Wald stopping bounds for ratio = L(p1) / L(p0):
/// accept H1 when ratio >= A = (1-beta)/alpha, accept H0 when ratio <= B = beta/(1-alpha).
struct SprtBounds {
  double accept_h1;  // A
  double accept_h0;  // B
};

inline SprtBounds sprt_bounds(double alpha, double beta) {
  if (!(alpha > 0 && alpha < 1) || !(beta > 0 && beta < 1)) {
    throw ConfigError("alpha and beta must lie in (0,1)");
  }
  return {(1 - beta) / alpha, beta / (1 - alpha)};
}

// Log of the per-observation factor of the likelihood ratio.
inline double sprt_log_factor(bool satisfied, double p0, double p1) {
  return satisfied ? std::log(p1) - std::log(p0) : std::log1p(-p1) - std::log1p(-p0);
}

inline double sprt_step(double ratio, bool satisfied, double p0, double p1) {
  return std::exp(std::log(ratio) + sprt_log_factor(satisfied, p0, p1));
}

/// Sequential likelihood ratio kept in log space.
class SprtRatio {
 public:
  SprtRatio(double p0, double p1)
      : log_success_(sprt_log_factor(true, p0, p1)), log_failure_(sprt_log_factor(false, p0, p1)) {}

  void observe(bool satisfied) { log_ratio_ += satisfied ? log_success_ : log_failure_; }
  void observe(std::uint64_t successes, std::uint64_t failures) {
    log_ratio_ += static_cast<double>(successes) * log_success_ +
                  static_cast<double>(failures) * log_failure_;
  }
  void reset() { log_ratio_ = 0; }

  double log_ratio() const { return log_ratio_; }
  double ratio() const { return std::exp(log_ratio_); }

  bool accepts_h0(const SprtBounds& b) const { return log_ratio_ <= std::log(b.accept_h0); }
  bool accepts_h1(const SprtBounds& b) const { return log_ratio_ >= std::log(b.accept_h1); }

 private:
  double log_success_;
  double log_failure_;
  double log_ratio_ = 0;
};

/// 1 - (1 - e^(-2 eps^2 N))^M: probability that some of M estimates built
/// from N simulations each is off by epsilon or more.
inline double candidate_confidence(std::uint64_t n, std::uint64_t m, double epsilon) {
  if (m < 1) throw ConfigError("candidate count must be at least 1");
  if (n == 0) return 1.0;
  const long double eps = epsilon;
  const long double tail = std::exp(-2 * eps * eps * static_cast<long double>(n));
  if (tail >= 1) return 1.0;
  return static_cast<double>(-std::expm1(static_cast<long double>(m) * std::log1p(-tail)));
}

/// (1 - (1-p_g)^M)(1 - (1-pbar_g)^N): probability of seeing at least one
/// satisfying trace from a good scheduler.
inline double good_scheduler_seen_probability(double p_good, double p_good_mean, std::uint64_t m,
                                              std::uint64_t n) {
  if (!(p_good >= 0 && p_good <= 1) || !(p_good_mean >= 0 && p_good_mean <= 1)) {
    throw ConfigError("probabilities must lie in [0,1]");
  }
  auto at_least_one = [](double p, std::uint64_t k) -> long double {
    if (k == 0 || p == 0) return 0;
    if (p == 1) return 1;
    return -std::expm1(static_cast<long double>(k) * std::log1p(-static_cast<long double>(p)));
  };
  return static_cast<double>(at_least_one(p_good, m) * at_least_one(p_good_mean, n));
}

struct BudgetSplit {
  std::uint64_t sims_per_scheduler;  // N
  std::uint64_t schedulers;          // M

  bool operator==(const BudgetSplit&) const = default;
};

/// N = ceil(1/p), M = ceil(budget * p), with N*M <= 2*budget: M is capped at
/// ceil(budget/N), and N > budget collapses to (budget, 1).
/// Exact form for an estimate successes/trials.
inline BudgetSplit budget_split(std::uint64_t successes, std::uint64_t trials,
                                std::uint64_t budget) {
  if (budget < 1) throw ConfigError("budget must be at least 1");
  if (trials == 0 || successes > trials) throw ConfigError("invalid estimate");
  if (successes == 0) throw BudgetError("no candidates: estimated probability is 0");
  const std::uint64_t n = (trials + successes - 1) / successes;
  if (n > budget) return {budget, 1};
  const auto wide = static_cast<unsigned __int128>(budget) * successes;
  auto m = static_cast<std::uint64_t>((wide + trials - 1) / trials);
  m = std::min(m, (budget + n - 1) / n);
  return {n, std::max<std::uint64_t>(m, 1)};
}

/// Floating form. 1/p within 1e-12 (relative) of an integer is snapped to it,
/// so that p = 1/3 gives N = 3.
inline BudgetSplit budget_split(double p_hat, std::uint64_t budget) {
  if (budget < 1) throw ConfigError("budget must be at least 1");
  if (!(p_hat > 0 && p_hat <= 1)) throw BudgetError("no candidates: estimated probability is 0");
  long double inv = 1.0L / p_hat;
  if (std::fabs(inv - std::round(inv)) <= 1e-12L * inv) inv = std::round(inv);
  inv = std::ceil(inv);
  if (inv > static_cast<long double>(budget)) return {budget, 1};
  const auto n = static_cast<std::uint64_t>(inv);
  long double mm = static_cast<long double>(budget) * p_hat;
  if (std::fabs(mm - std::round(mm)) <= 1e-12L * mm) mm = std::round(mm);
  auto m = static_cast<std::uint64_t>(std::ceil(mm));
  m = std::min(m, (budget + n - 1) / n);
  return {n, std::max<std::uint64_t>(m, 1)};
}

}  // namespace smc
