#pragma once

#include <algorithm>
#include <cfloat>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "smc/algorithms.hpp"
#include "smc/error.hpp"
#include "smc/model.hpp"
#include "smc/property.hpp"
#include "smc/scheduler.hpp"

// Exact ground truth by exhaustive expansion of the path-prefix tree up to the
// property horizon. Exponential by design; meant for small models only.

namespace smc {

struct OracleOptions {
  std::uint64_t node_cap = 10'000'000;
  bool exact = true;  // rational arithmetic; otherwise long double with an error bound
};

struct OracleResult {
  long double value = 0;
  std::optional<Rational> exact;
  long double error_bound = 0;  // absolute; zero for exact results
  std::uint64_t explored = 0;   // prefix-tree nodes visited
  std::vector<std::string> witness;

  std::string exact_string() const { return exact ? exact->str() : std::string(); }
};

namespace detail {

template <class V>
V weight_as(const Rational& r) {
  if constexpr (std::is_same_v<V, Rational>) {
    return r;
  } else {
    return r.convert_to<V>();
  }
}

struct NoContext {};

// Depth-first evaluation of the prefix tree. The policy decides how a node's
// value is formed from the values of its enabled commands.
template <class V, class Policy>
class PrefixEvaluator {
 public:
  using Context = typename Policy::Context;

  PrefixEvaluator(const Mdp& mdp, const Formula& formula, Policy& policy, std::uint64_t cap)
      : mdp_(mdp), formula_(formula), policy_(policy), cap_(cap), horizon_(smc::horizon(formula)),
        trace_(mdp.width()) {
    if (!is_bound(formula)) throw SemanticError("property is not bound to the model");
  }

  V run(const Context& root) {
    trace_.clear();
    trace_.push_back(initial_state(mdp_));
    return node(0, root);
  }

  std::uint64_t explored() const { return explored_; }
  std::uint64_t operations() const { return operations_; }

 private:
  V node(std::uint64_t depth, const Context& ctx) {
    if (++explored_ > cap_) {
      throw CapExceeded("prefix tree exceeds the node cap of " + std::to_string(cap_) +
                        " (horizon " + std::to_string(horizon_) + ")");
    }
    if (depth == horizon_) return V(eval_unchecked(formula_, trace_, 0) ? 1 : 0);
    const State cur(trace_.back().begin(), trace_.back().end());
    const Context next = policy_.advance(ctx, cur);
    std::vector<std::size_t> cmds;
    enabled_into(mdp_, cur, cmds);
    if (cmds.empty()) return descend(cur, depth, next);
    return policy_.choose(cur, cmds, [&](std::size_t cmd) { return command_value(cur, cmd, depth, next); });
  }

  V descend(const State& s, std::uint64_t depth, const Context& ctx) {
    trace_.push_back(s);
    V v = node(depth + 1, ctx);
    trace_.truncate(depth + 1);
    return v;
  }

  V command_value(const State& cur, std::size_t cmd, std::uint64_t depth, const Context& ctx) {
    const Command& c = mdp_.commands[cmd];
    std::vector<std::pair<State, Rational>> succ;
    State next(cur.size());
    for (const Branch& b : c.branches) {
      apply_branch(mdp_, cur, b, next);
      auto it = std::find_if(succ.begin(), succ.end(), [&](const auto& p) { return p.first == next; });
      if (it == succ.end()) {
        succ.emplace_back(next, b.weight);
      } else {
        it->second += b.weight;
      }
    }
    V sum = V(0);
    for (const auto& [s, w] : succ) {
      sum += weight_as<V>(w) * descend(s, depth, ctx);
      operations_ += 3;  // conversion, product, sum
    }
    return sum;
  }

  const Mdp& mdp_;
  const Formula& formula_;
  Policy& policy_;
  std::uint64_t cap_;
  std::uint64_t horizon_;
  Trace trace_;
  std::uint64_t explored_ = 0;
  std::uint64_t operations_ = 0;
};

template <class V>
struct OptimumPolicy {
  using Context = NoContext;
  Direction dir;

  Context advance(const Context& c, std::span<const Value>) const { return c; }

  template <class Fn>
  V choose(std::span<const Value>, const std::vector<std::size_t>& cmds, Fn&& value_of) const {
    V best = value_of(cmds.front());
    for (std::size_t i = 1; i < cmds.size(); ++i) {
      V v = value_of(cmds[i]);
      if (dir == Direction::max ? v > best : v < best) best = std::move(v);
    }
    return best;
  }
};

// Optimum policy whose first decision is fixed.
template <class V>
struct ForcedRootPolicy {
  using Context = NoContext;
  OptimumPolicy<V> base;
  std::size_t forced;
  bool at_root = true;

  Context advance(const Context& c, std::span<const Value>) const { return c; }

  template <class Fn>
  V choose(std::span<const Value> s, const std::vector<std::size_t>& cmds, Fn&& value_of) {
    if (at_root) {
      at_root = false;
      return value_of(forced);
    }
    return base.choose(s, cmds, value_of);
  }
};

template <class V>
struct UniformPolicy {
  using Context = NoContext;

  Context advance(const Context& c, std::span<const Value>) const { return c; }

  template <class Fn>
  V choose(std::span<const Value>, const std::vector<std::size_t>& cmds, Fn&& value_of) const {
    V sum = V(0);
    for (std::size_t cmd : cmds) sum += value_of(cmd);
    return sum / V(static_cast<long long>(cmds.size()));
  }
};

template <class V>
struct MemorylessPolicy {
  using Context = NoContext;
  const std::map<State, std::size_t>* choice;  // state -> position in its enabled list

  Context advance(const Context& c, std::span<const Value>) const { return c; }

  template <class Fn>
  V choose(std::span<const Value> state, const std::vector<std::size_t>& cmds, Fn&& value_of) const {
    const auto it = choice->find(State(state.begin(), state.end()));
    return value_of(cmds[it == choice->end() ? 0 : it->second]);
  }
};

inline std::string command_name(const Mdp& mdp, std::size_t cmd) {
  const std::string& label = mdp.commands[cmd].label;
  return label.empty() ? "#" + std::to_string(cmd) : "[" + label + "]";
}

template <class V, class Policy>
OracleResult evaluate_tree(const Mdp& mdp, const Formula& formula, Policy& policy,
                           const typename Policy::Context& root, std::uint64_t cap) {
  PrefixEvaluator<V, Policy> ev(mdp, formula, policy, cap);
  const V v = ev.run(root);
  OracleResult out;
  out.explored = ev.explored();
  if constexpr (std::is_same_v<V, Rational>) {
    out.exact = v;
    out.value = v.template convert_to<long double>();
  } else {
    out.value = v;
    out.error_bound = static_cast<long double>(ev.operations() + 1) * LDBL_EPSILON;
  }
  return out;
}

// States at which some decision is taken before the horizon, in sorted order.
inline std::vector<State> decision_states(const Mdp& mdp, std::uint64_t horizon, std::uint64_t cap) {
  std::set<State> seen;
  std::vector<State> frontier{initial_state(mdp)};
  std::set<State> decisions;
  State next(mdp.width());
  std::vector<std::size_t> cmds;
  for (std::uint64_t depth = 0; depth < horizon && !frontier.empty(); ++depth) {
    std::vector<State> upcoming;
    for (const State& s : frontier) {
      if (!seen.insert(s).second) continue;
      if (seen.size() > cap) throw CapExceeded("reachable state space exceeds the node cap");
      enabled_into(mdp, s, cmds);
      if (cmds.size() > 1) decisions.insert(s);
      if (cmds.empty()) upcoming.push_back(s);
      for (std::size_t cmd : cmds) {
        for (const Branch& b : mdp.commands[cmd].branches) {
          apply_branch(mdp, s, b, next);
          upcoming.push_back(next);
        }
      }
    }
    frontier = std::move(upcoming);
  }
  return {decisions.begin(), decisions.end()};
}

template <class V>
OracleResult optimum_history(const Mdp& mdp, const Formula& formula, Direction dir, std::uint64_t cap) {
  OptimumPolicy<V> policy{dir};
  OracleResult out = evaluate_tree<V>(mdp, formula, policy, NoContext{}, cap);
  // witness: the optimal first action
  const State init = initial_state(mdp);
  const auto cmds = enabled(mdp, init);
  if (cmds.size() > 1 && horizon(formula) > 0) {
    std::optional<std::pair<V, std::size_t>> best;
    for (std::size_t cmd : cmds) {
      ForcedRootPolicy<V> root{OptimumPolicy<V>{dir}, cmd};
      const OracleResult r = evaluate_tree<V>(mdp, formula, root, NoContext{}, cap);
      const V v = r.exact ? weight_as<V>(*r.exact) : V(r.value);
      if (!best || (dir == Direction::max ? v > best->first : v < best->first)) best.emplace(v, cmd);
    }
    out.witness.push_back(format_state(mdp, init) + " -> " + command_name(mdp, best->second));
  }
  return out;
}

template <class V>
OracleResult optimum_memoryless(const Mdp& mdp, const Formula& formula, Direction dir, std::uint64_t cap) {
  const std::vector<State> states = decision_states(mdp, horizon(formula), cap);
  std::vector<std::size_t> radix;
  long double combos = 1;
  for (const State& s : states) {
    radix.push_back(enabled(mdp, s).size());
    combos *= static_cast<long double>(radix.back());
  }
  if (combos > static_cast<long double>(cap)) {
    throw CapExceeded("memoryless enumeration needs " + std::to_string(static_cast<double>(combos)) +
                      " action maps, above the cap of " + std::to_string(cap));
  }
  std::vector<std::size_t> digits(states.size(), 0);
  std::map<State, std::size_t> choice;
  std::optional<OracleResult> best;
  std::vector<std::size_t> best_digits;
  std::uint64_t explored = 0;
  long double error = 0;
  for (;;) {
    choice.clear();
    for (std::size_t i = 0; i < states.size(); ++i) choice.emplace(states[i], digits[i]);
    MemorylessPolicy<V> policy{&choice};
    OracleResult r = evaluate_tree<V>(mdp, formula, policy, NoContext{}, cap);
    explored += r.explored;
    error = std::max(error, r.error_bound);
    const bool better = !best || (r.exact ? (dir == Direction::max ? *r.exact > *best->exact : *r.exact < *best->exact)
                                          : (dir == Direction::max ? r.value > best->value : r.value < best->value));
    if (better) {
      best = std::move(r);
      best_digits = digits;
    }
    std::size_t k = 0;
    while (k < digits.size() && ++digits[k] == radix[k]) digits[k++] = 0;
    if (k == digits.size()) break;
  }
  best->explored = explored;
  best->error_bound = error;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto cmds = enabled(mdp, states[i]);
    best->witness.push_back(format_state(mdp, states[i]) + " -> " + command_name(mdp, cmds[best_digits[i]]));
  }
  return *best;
}

template <class V>
struct ReplayPolicy {
  using Context = HashState;
  const Mdp* mdp;
  SchedulerId sigma;
  SchedulerClass cls;
  HashState current{};

  Context advance(const Context& hs, std::span<const Value> state) {
    current = cls == SchedulerClass::history ? hash_state(hs, *mdp, state)
                                             : hash_state(hash_init(sigma), *mdp, state);
    return current;
  }

  template <class Fn>
  V choose(std::span<const Value>, const std::vector<std::size_t>& cmds, Fn&& value_of) {
    return value_of(cmds[scheduler_choice(current, cmds.size())]);
  }
};

}  // namespace detail

/// Optimal probability over all history-dependent schedulers.
inline OracleResult exact_optimum_history(const Mdp& mdp, const Formula& formula, Direction dir,
                                          const OracleOptions& opt = {}) {
  return opt.exact ? detail::optimum_history<Rational>(mdp, formula, dir, opt.node_cap)
                   : detail::optimum_history<long double>(mdp, formula, dir, opt.node_cap);
}

/// Optimal probability over all memoryless schedulers (state -> action maps).
inline OracleResult exact_optimum_memoryless(const Mdp& mdp, const Formula& formula, Direction dir,
                                             const OracleOptions& opt = {}) {
  return opt.exact ? detail::optimum_memoryless<Rational>(mdp, formula, dir, opt.node_cap)
                   : detail::optimum_memoryless<long double>(mdp, formula, dir, opt.node_cap);
}

/// Exact probability under the hash-defined scheduler sigma.
inline OracleResult exact_scheduler_probability(const Mdp& mdp, const Formula& formula, SchedulerId sigma,
                                                SchedulerClass cls, const OracleOptions& opt = {}) {
  if (opt.exact) {
    detail::ReplayPolicy<Rational> policy{&mdp, sigma, cls};
    return detail::evaluate_tree<Rational>(mdp, formula, policy, hash_init(sigma), opt.node_cap);
  }
  detail::ReplayPolicy<long double> policy{&mdp, sigma, cls};
  return detail::evaluate_tree<long double>(mdp, formula, policy, hash_init(sigma), opt.node_cap);
}

/// Expected probability under the scheduler that picks uniformly among enabled commands.
inline OracleResult uniform_scheduler_probability(const Mdp& mdp, const Formula& formula,
                                                  const OracleOptions& opt = {}) {
  if (opt.exact) {
    detail::UniformPolicy<Rational> policy;
    return detail::evaluate_tree<Rational>(mdp, formula, policy, detail::NoContext{}, opt.node_cap);
  }
  detail::UniformPolicy<long double> policy;
  return detail::evaluate_tree<long double>(mdp, formula, policy, detail::NoContext{}, opt.node_cap);
}

}  // namespace smc
