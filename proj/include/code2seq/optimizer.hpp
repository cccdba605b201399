#pragma once

#include <span>

#include "code2seq/graph.hpp"

namespace code2seq {

/// Nesterov momentum in the form used by Sutskever et al. (2013), which
/// evaluates the gradient at the current weights instead of the look-ahead
/// point:
///
///   v     <- mu * v - lr * g
///   theta <- theta + mu * v - lr * g
///
/// With mu = 0 this is plain SGD.
void nesterov_update(Parameter& param, double lr, double mu = 0.95);

void zero_gradients(std::span<Parameter* const> params);

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before scaling. `max_norm <= 0` only measures.
double clip_gradients(std::span<Parameter* const> params, double max_norm);

}  // namespace code2seq
