#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "smc/model.hpp"
#include "smc/property.hpp"

namespace smc {

// ---------------------------------------------------------------------------
// Compile-time primality (deterministic Miller-Rabin for 64-bit operands).

namespace detail {

constexpr std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

constexpr std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace detail

constexpr bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  unsigned r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    std::uint64_t x = detail::pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (unsigned i = 1; i < r; ++i) {
      x = detail::mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// True when m lies within a factor 1 +- 2^-10 of some power of two.
constexpr bool near_power_of_two(std::uint64_t m) {
  for (unsigned k = 1; k < 64; ++k) {
    const std::uint64_t p = std::uint64_t{1} << k;
    const std::uint64_t diff = m > p ? m - p : p - m;
    if (diff <= (p >> 10)) return true;
  }
  return false;
}

/// Modulus of the trace hash: the largest prime not exceeding 1.5 * 2^61.
inline constexpr std::uint64_t hash_modulus = 3458764513820540791ull;

static_assert(is_prime(hash_modulus));
static_assert(hash_modulus <= (std::uint64_t{1} << 62));
static_assert(!near_power_of_two(hash_modulus));

inline constexpr const char* prng_name = "splitmix64";

// ---------------------------------------------------------------------------

struct SchedulerId {
  std::uint64_t value = 0;

  friend constexpr auto operator<=>(SchedulerId, SchedulerId) = default;
};

enum class SchedulerClass { history, memoryless };

inline const char* to_string(SchedulerClass c) {
  return c == SchedulerClass::history ? "history" : "memoryless";
}

/// (h * 2^j) mod m by j rounds of doubling with reduction. Needs h < m and
/// m <= 2^62, so h + h never overflows.
constexpr std::uint64_t shift_mod(std::uint64_t h, unsigned j, std::uint64_t m = hash_modulus) {
  for (unsigned k = 0; k < j; ++k) {
    h += h;
    assert(h <= 2 * (m - 1));
    if (h >= m) h -= m;
  }
  return h;
}

/// Running value of (sigma : trace vector) mod m.
struct HashState {
  std::uint64_t h = 0;
  std::uint64_t m = hash_modulus;

  friend constexpr bool operator==(HashState, HashState) = default;
};

constexpr HashState hash_init(SchedulerId sigma, std::uint64_t m = hash_modulus) {
  return {sigma.value % m, m};
}

/// Appends `b` bits holding `v` (v < 2^b) to the hashed sequence.
constexpr HashState hash_update(HashState hs, std::uint64_t v, unsigned b) {
  const std::uint64_t shifted = shift_mod(hs.h, b, hs.m);
  std::uint64_t h = shifted + v % hs.m;
  if (h >= hs.m) h -= hs.m;
  return {h, hs.m};
}

inline HashState hash_state(HashState hs, const Mdp& mdp, std::span<const Value> state) {
  for (std::size_t i = 0; i < state.size(); ++i) {
    const VariableDecl& v = mdp.variables[i];
    hs = hash_update(hs, static_cast<std::uint64_t>(state[i]) - static_cast<std::uint64_t>(v.lower),
                     v.bit_width);
  }
  return hs;
}

// ---------------------------------------------------------------------------
// SplitMix64. Pinned for bit-reproducibility across platforms and languages.

struct PrngState {
  std::uint64_t s = 0;

  friend constexpr bool operator==(PrngState, PrngState) = default;
};

struct PrngDraw {
  std::uint64_t value;
  PrngState next;
};

constexpr PrngDraw prng_next(PrngState p) {
  const std::uint64_t s = p.s + 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return {z ^ (z >> 31), PrngState{s}};
}

struct IndexDraw {
  std::uint64_t index;
  PrngState next;
};

/// Exactly uniform index in [0, n): rejects r >= 2^64 - (2^64 mod n).
constexpr IndexDraw choose_uniform(PrngState p, std::uint64_t n) {
  assert(n >= 1);
  const std::uint64_t rem = (0 - n) % n;  // 2^64 mod n
  const std::uint64_t limit = 0 - rem;    // 2^64 - rem, or 0 (meaning 2^64) when rem == 0
  for (;;) {
    const PrngDraw d = prng_next(p);
    p = d.next;
    if (rem == 0 || d.value < limit) return {d.value % n, p};
  }
}

/// u in [0,1) from the top 53 bits of a draw.
constexpr double unit_interval(std::uint64_t value) {
  return static_cast<double>(value >> 11) * 0x1.0p-53;
}

/// UniformRandomBitGenerator wrapper over prng_next.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) : state_{seed} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    const PrngDraw d = prng_next(state_);
    state_ = d.next;
    return d.value;
  }

  constexpr std::uint64_t below(std::uint64_t n) {
    const IndexDraw d = choose_uniform(state_, n);
    state_ = d.next;
    return d.index;
  }

  constexpr double uniform() { return unit_interval((*this)()); }

  constexpr PrngState state() const { return state_; }

 private:
  PrngState state_;
};

/// Order-sensitive combination of 64-bit words into one seed.
constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t acc = 0x6A09E667F3BCC909ull;
  for (std::uint64_t w : words) acc = prng_next(PrngState{acc ^ prng_next(PrngState{w}).value}).value;
  return acc;
}

/// The action a hash-defined scheduler takes among `count` enabled commands.
constexpr std::uint64_t scheduler_choice(HashState hs, std::uint64_t count) {
  return choose_uniform(PrngState{hs.h}, count).index;
}

// ---------------------------------------------------------------------------
// Simulation under a hash-defined scheduler.

struct Verdict {
  bool satisfied = false;
  std::size_t trace_length = 0;  // states in the trace
  bool deadlocked = false;

  bool operator==(const Verdict&) const = default;
};

struct Simulation {
  Trace trace;
  // Command index chosen at each step, -1 where the state was a deadlock.
  std::vector<std::ptrdiff_t> actions;
  Verdict verdict;
};

/// Reusable simulator: owns scratch buffers so repeated runs do not allocate.
/// `formula` must be bound to `mdp`.
class Simulator {
 public:
  Simulator(const Mdp& mdp, const Formula& formula)
      : mdp_(&mdp),
        formula_(&formula),
        horizon_(smc::horizon(formula)),
        trace_(mdp.width()),
        current_(initial_state(mdp)),
        next_(mdp.width()) {
    if (!is_bound(formula)) throw SemanticError("property is not bound to the model");
    trace_.reserve(horizon_ + 1);
    actions_.reserve(horizon_);
  }

  std::uint64_t horizon() const { return horizon_; }

  Verdict run(SchedulerId sigma, std::uint64_t prob_seed, SchedulerClass cls) {
    const Mdp& mdp = *mdp_;
    trace_.clear();
    actions_.clear();
    current_ = initial_state(mdp);
    HashState hs = hash_init(sigma);
    PrngState prob{prob_seed};
    bool deadlocked = false;

    for (std::uint64_t step = 0;; ++step) {
      trace_.push_back(current_);
      if (step == horizon_) break;
      hs = cls == SchedulerClass::history ? hash_state(hs, mdp, current_)
                                          : hash_state(hash_init(sigma), mdp, current_);
      enabled_into(mdp, current_, enabled_);
      if (enabled_.empty()) {
        // deadlock: absorb by repeating the state
        deadlocked = true;
        actions_.push_back(-1);
        continue;
      }
      const std::size_t cmd = enabled_[scheduler_choice(hs, enabled_.size())];
      actions_.push_back(static_cast<std::ptrdiff_t>(cmd));
      const PrngDraw draw = prng_next(prob);
      prob = draw.next;
      const Command& c = mdp.commands[cmd];
      apply_branch(mdp, current_, c.branches[select_branch(c, unit_interval(draw.value))], next_);
      current_.swap(next_);
    }
    return Verdict{detail::eval_unchecked(*formula_, trace_, 0), trace_.size(), deadlocked};
  }

  const Trace& trace() const { return trace_; }
  const std::vector<std::ptrdiff_t>& actions() const { return actions_; }

 private:
  const Mdp* mdp_;
  const Formula* formula_;
  std::uint64_t horizon_;
  Trace trace_;
  std::vector<std::ptrdiff_t> actions_;
  State current_;
  State next_;
  std::vector<std::size_t> enabled_;
};

/// One trace of horizon(formula)+1 states under scheduler sigma.
inline Simulation simulate(const Mdp& mdp, const Formula& formula, SchedulerId sigma,
                           std::uint64_t prob_seed, SchedulerClass cls) {
  Simulator sim(mdp, formula);
  const Verdict v = sim.run(sigma, prob_seed, cls);
  return Simulation{sim.trace(), sim.actions(), v};
}

}  // namespace smc
