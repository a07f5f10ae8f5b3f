#include "omd/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace omd {

LossEval hinge(double margin) {
  const double value = 1.0 - margin;
  if (value > 0.0) return {value, -1.0, true};
  return {0.0, 0.0, false};
}

LossEval square(double prediction, double y) {
  const double diff = prediction - y;
  return {0.5 * diff * diff, diff, diff != 0.0};
}

LossEval absolute(double prediction, double y) {
  const double diff = prediction - y;
  if (diff > 0.0) return {diff, 1.0, true};
  if (diff < 0.0) return {-diff, -1.0, true};
  return {0.0, 0.0, false};
}

bool hinge_condition_check(double loss_at_w, double loss_at_u, double inner_u_subgrad) {
  if (!(loss_at_w > 0.0)) return true;
  return loss_at_u >= 1.0 + inner_u_subgrad - 1e-12;
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "hinge") return LossKind::hinge;
  if (name == "square") return LossKind::square;
  if (name == "absolute") return LossKind::absolute;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::hinge:
      return "hinge";
    case LossKind::square:
      return "square";
    case LossKind::absolute:
      return "absolute";
  }
  return "?";
}

LossEval evaluate_loss(LossKind kind, double prediction, double y) {
  switch (kind) {
    case LossKind::hinge: {
      LossEval e = hinge(y * prediction);
      e.subgrad_scalar *= y;
      return e;
    }
    case LossKind::square:
      return square(prediction, y);
    case LossKind::absolute:
      return absolute(prediction, y);
  }
  throw std::logic_error("evaluate_loss: bad kind");
}

double lipschitz_constant(LossKind kind) {
  switch (kind) {
    case LossKind::hinge:
    case LossKind::absolute:
      return 1.0;
    case LossKind::square:
      return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace omd
