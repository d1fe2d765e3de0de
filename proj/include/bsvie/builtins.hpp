#pragma once

#include <cstddef>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "bsvie/driver.hpp"
#include "bsvie/modulus.hpp"

namespace bsvie {

// Named building blocks for scenarios. Every spec is a JSON object with a
// "name" and optional numeric parameters; unknown names raise ConfigError.
// All builtins are scalar (m = 1) and read the first Brownian component.

/// constant {value}; t_times_WT {scale}; WT; WT_squared; affine {a, b, c}:
/// a + b t + c W(T); cos_WT {scale}: cos(scale W(T)); t_times_Wt: t W(t).
FreeTerm make_free_term(const nlohmann::json& spec);

/// zero; linear {ay, az, azeta, c, cw, kernel}:
///   L(t,s) (ay y + az z + azeta zeta) + c + cw W(s);
/// bounded_mix {k, rate, a1, a2, a3, c}:
///   k e^{-rate (s-t)} (a1 sin y + a2 tanh z + a3 zeta / (1 + |zeta|)) + c cos W(s);
/// eq33 {k, rate, delta}: L(t,s) (f(|y|) + |z| + |zeta|), L = k e^{-rate (s-t)};
/// sin_y {k, c}: k sin y + c, a bounded Lipschitz driver without z.
/// An optional "modulus" entry attaches a modulus of continuity by name.
/// kernel is {type: constant | exp_decay, k, rate}.
Driver make_driver(const nlohmann::json& spec, std::size_t d = 1);

/// zero; constant {value}; Ws {scale}: scale W(s);
/// poly {c0, c1, c2, c3}: c0 + c1 W(s) + c2 t + c3 cos W(s).
SimpleDriver make_simple_driver(const nlohmann::json& spec);

/// rho(u) = u: a Lipschitz driver satisfies the modulus hypothesis with it.
Modulus linear_modulus();
/// modulus_by_name plus "linear".
Modulus named_modulus(const std::string& name, double delta = 0.1);

std::vector<std::string> free_term_names();
std::vector<std::string> driver_names();
std::vector<std::string> simple_driver_names();

}  // namespace bsvie
