#pragma once

#include <string>
#include <string_view>

namespace omd {

/// Loss value and derivative with respect to the linear prediction z = <w, x>.
/// The subgradient of the loss in w is subgrad_scalar * x (hinge: times y as well).
struct LossEval {
  double value = 0.0;
  double subgrad_scalar = 0.0;
  bool active = false;
};

/// Hinge loss as a function of the margin y<w,x>.  At the kink (margin == 1) the
/// zero subgradient is chosen.
LossEval hinge(double margin);

/// 1/2 (y - prediction)^2.
LossEval square(double prediction, double y);

/// |prediction - y|, 1-Lipschitz; the zero subgradient is chosen at the kink.
LossEval absolute(double prediction, double y);

/// The hinge condition: if loss_at_w > 0 then loss_at_u >= 1 + <u, l'>.
bool hinge_condition_check(double loss_at_w, double loss_at_u, double inner_u_subgrad);

enum class LossKind { hinge, square, absolute };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

/// Evaluate a loss at prediction z.  For hinge, subgrad_scalar is already
/// multiplied by y so that dl/dz = subgrad_scalar in every case.
LossEval evaluate_loss(LossKind kind, double prediction, double y);

/// Lipschitz constant in the prediction; +infinity for the square loss.
double lipschitz_constant(LossKind kind);

}  // namespace omd
