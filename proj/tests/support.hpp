#pragma once

#include <string>

#include "smc/smc.hpp"

namespace smc::test {

inline std::string model_path(const std::string& name) { return std::string(SMC_MODELS_DIR) + "/" + name; }

inline const Mdp& fig3() {
  static const Mdp m = load_model(model_path("fig3.smc"));
  return m;
}

inline const Formula& fig3_property() {
  static const Formula f = resolve_property(fig3(), "fig3");
  return f;
}

inline const Mdp& choice() {
  static const Mdp m = load_model(model_path("choice.smc"));
  return m;
}

inline const Formula& choice_property() {
  static const Formula f = resolve_property(choice(), "agree");
  return f;
}

inline constexpr long double fig3_history_max = 0.32805L;
inline constexpr long double fig3_memoryless_max = 0.06561L;

}  // namespace smc::test
