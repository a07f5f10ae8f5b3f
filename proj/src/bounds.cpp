#include "omd/bounds.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "omd/losses.hpp"
#include "omd/regularizers.hpp"

namespace omd {

using nlohmann::json;

void BoundReport::finalize() {
  slack = bound - measured;
  ok = std::isfinite(bound) && std::isfinite(measured) && slack >= -tolerance;
  for (const auto& key : required) {
    const auto it = flags.find(key);
    if (it == flags.end() || !it->second) ok = false;
  }
}

json to_json(const BoundReport& r) {
  json j;
  j["name"] = r.name;
  j["measured"] = r.measured;
  j["bound"] = r.bound;
  j["slack"] = r.slack;
  j["tolerance"] = r.tolerance;
  j["ok"] = r.ok;
  json terms = json::object();
  for (const auto& [k, v] : r.terms) terms[k] = v;
  j["terms"] = terms;
  json flags = json::object();
  for (const auto& [k, v] : r.flags) flags[k] = v;
  j["flags"] = flags;
  j["required"] = r.required;
  return j;
}

namespace {

constexpr double kE = std::numbers::e;

const json& param(const RunTrace& trace, const char* key) {
  const auto it = trace.header.params.find(key);
  if (it == trace.header.params.end()) {
    throw std::invalid_argument("trace params lack '" + std::string(key) + "'");
  }
  return *it;
}

double param_double(const RunTrace& trace, const char* key) { return param(trace, key).get<double>(); }
std::string param_string(const RunTrace& trace, const char* key) { return param(trace, key).get<std::string>(); }

void require_learner(const RunTrace& trace, std::initializer_list<const char*> names, const char* bound) {
  for (const char* n : names) {
    if (trace.header.learner == n) return;
  }
  throw std::invalid_argument(std::string(bound) + ": not applicable to learner '" + trace.header.learner + "'");
}

double extra(const TraceRecord& r, const char* key) {
  const auto it = r.out.extras.find(key);
  if (it == r.out.extras.end()) throw std::invalid_argument("trace step lacks extra '" + std::string(key) + "'");
  return it->second;
}

double sq(double v) { return v * v; }

double euclid_sq(std::span<const double> u) { return squared_norm(u); }

LossKind trace_loss(const RunTrace& trace) {
  const std::string& name = trace.header.learner;
  if (name == "first_order" || name == "second_order") return LossKind::hinge;
  if (name == "vaw" || name == "adaptive_filter") return LossKind::square;
  return parse_loss_kind(param_string(trace, "loss"));
}

}  // namespace

// ---------------------------------------------------------------------------

BoundEvaluator lemma1_audit(const RunTrace& trace) {
  const std::size_t d = trace.header.dim;
  RealVec zsum(d, 0.0);
  double inner = 0.0, dual = 0.0, residue = 0.0, excess = -std::numeric_limits<double>::infinity();
  for (const auto& r : trace.records) {
    const StepOutcome& o = r.out;
    axpy(o.z_scale, r.x, zsum);
    inner += o.inner_zw;
    if (o.z_dual_norm_sq > 0.0) dual += o.z_dual_norm_sq / (2.0 * o.beta);
    residue += o.residue;
    excess = std::max(excess, o.residue - o.residue_upper);
  }
  if (trace.records.empty()) excess = 0.0;
  std::shared_ptr<const Regularizer> f_T = trace.final_regularizer();
  const double T = static_cast<double>(trace.records.size());
  return [=](std::span<const double> u) {
    require_dim("lemma1 comparator", d, u.size());
    BoundReport rep;
    rep.name = "lemma1";
    const double fu = f_T->value(u);
    rep.measured = dot(zsum, u) - inner;
    rep.bound = fu + dual + residue;
    rep.terms = {{"f_T(u)", fu}, {"dual_sum", dual}, {"residue_sum", residue},
                 {"max_residue_excess", excess}, {"T", T}};
    rep.flags["residue_inequality"] = excess <= slack_tolerance::standard;
    rep.required = {"residue_inequality"};
    rep.finalize();
    return rep;
  };
}

// ---------------------------------------------------------------------------

BoundEvaluator cor1_bound(const RunTrace& trace, Cor1Form form) {
  require_learner(trace, {"ogd", "composite"}, "cor1_bound");
  const bool composite = trace.header.learner == "composite";
  const std::string schedule = param_string(trace, "schedule");
  const double eta = param_double(trace, "eta");
  const double c = param_double(trace, "scale");
  const LossKind loss = parse_loss_kind(param_string(trace, "loss"));
  double mu = 0.0;
  if (composite) mu = param_double(trace, "l2");
  if (form == Cor1Form::sqrt_time && schedule != "sqrt") {
    throw std::invalid_argument("cor1_bound: sqrt form needs the sqrt schedule, run used '" + schedule + "'");
  }
  if (form == Cor1Form::linear_time && !(composite && schedule == "none")) {
    throw std::invalid_argument("cor1_bound: linear form needs a composite run with schedule 'none'");
  }

  double learner_sum = 0.0, dual = 0.0, max_grad_sq = 0.0;
  for (const auto& r : trace.records) {
    learner_sum += r.out.loss + r.out.penalty;
    const double g2 = r.out.z_dual_norm_sq / (eta * eta);
    if (g2 > 0.0) dual += g2 / (2.0 * r.out.beta);
    max_grad_sq = std::max(max_grad_sq, g2);
  }
  std::shared_ptr<const Regularizer> f_T = trace.final_regularizer();
  const auto* comp = dynamic_cast<const CompositeQuadL1*>(f_T.get());
  const double T = static_cast<double>(trace.records.size());
  const std::size_t d = trace.header.dim;
  // Only the examples are needed per comparator.
  auto examples = std::make_shared<std::vector<std::pair<SparseVec, double>>>();
  for (const auto& r : trace.records) examples->emplace_back(r.x, r.y);

  return [=](std::span<const double> u) {
    require_dim("cor1 comparator", d, u.size());
    BoundReport rep;
    double comparator_sum = 0.0;
    for (const auto& [x, y] : *examples) comparator_sum += evaluate_loss(loss, x.dot(u), y).value;
    const double Fu = comp ? comp->penalty(u) : 0.0;
    comparator_sum += T * Fu;
    rep.measured = learner_sum - comparator_sum;
    rep.terms = {{"T", T}, {"eta", eta}, {"F(u)", Fu}, {"max_grad_sq", max_grad_sq},
                 {"learner_sum", learner_sum}, {"comparator_sum", comparator_sum}};
    switch (form) {
      case Cor1Form::general: {
        rep.name = "cor1_general";
        const double gT = comp ? comp->quadratic_part(u) : f_T->value(u);
        rep.bound = gT / eta + eta * dual;
        rep.terms["g_T(u)"] = gT;
        rep.terms["grad_dual_sum"] = dual;
        break;
      }
      case Cor1Form::sqrt_time: {
        rep.name = "cor1_sqrt";
        const double g = 0.5 * c * euclid_sq(u);
        rep.bound = std::sqrt(T) * (g / eta + eta / c * max_grad_sq);
        rep.terms["g(u)"] = g;
        rep.terms["beta"] = c;
        break;
      }
      case Cor1Form::linear_time:
        rep.name = "cor1_linear";
        rep.bound = T > 0.0 ? max_grad_sq * (1.0 + std::log(T)) / (2.0 * mu) : 0.0;
        rep.terms["beta"] = mu;
        break;
    }
    rep.finalize();
    return rep;
  };
}

// ---------------------------------------------------------------------------

BoundEvaluator vaw_bound(const RunTrace& trace) {
  require_learner(trace, {"vaw"}, "vaw_bound");
  const double a = param_double(trace, "a");
  double learner_sum = 0.0, inv_sum = 0.0, Y = 0.0;
  auto examples = std::make_shared<std::vector<std::pair<SparseVec, double>>>();
  for (const auto& r : trace.records) {
    learner_sum += r.out.loss;
    inv_sum += extra(r, "x_inv_norm_sq");
    Y = std::max(Y, std::abs(r.y));
    examples->emplace_back(r.x, r.y);
  }
  const std::size_t d = trace.header.dim;
  return [=](std::span<const double> u) {
    require_dim("vaw comparator", d, u.size());
    BoundReport rep;
    rep.name = "vaw";
    double comparator_sum = 0.0;
    for (const auto& [x, y] : *examples) comparator_sum += 0.5 * sq(x.dot(u) - y);
    rep.measured = learner_sum - comparator_sum;
    rep.bound = 0.5 * a * euclid_sq(u) + 0.5 * Y * Y * inv_sum;
    rep.terms = {{"a", a}, {"Y", Y}, {"x_inv_norm_sq_sum", inv_sum}, {"learner_sum", learner_sum},
                 {"comparator_sum", comparator_sum}};
    rep.finalize();
    return rep;
  };
}

BoundEvaluator af_bound(const RunTrace& trace) {
  require_learner(trace, {"adaptive_filter"}, "af_bound");
  std::shared_ptr<const Regularizer> base = regularizer_from_json(param(trace, "base"));
  double X = 0.0;
  auto rows = std::make_shared<std::vector<std::tuple<SparseVec, double, double>>>();
  for (const auto& r : trace.records) {
    X = std::max(X, extra(r, "X"));
    rows->emplace_back(r.x, r.y, r.out.prediction);
  }
  const std::size_t d = trace.header.dim;
  return [=](std::span<const double> u) {
    require_dim("af comparator", d, u.size());
    BoundReport rep;
    rep.name = "af";
    double measured = 0.0, residual = 0.0;
    for (const auto& [x, y, p] : *rows) {
      const double ux = x.dot(u);
      measured += sq(p - ux);
      residual += sq(y - ux);
    }
    const double fu = base->value(u);
    rep.measured = measured;
    rep.bound = 2.0 * X * X * fu + residual;
    rep.terms = {{"X_T", X}, {"f(u)", fu}, {"comparator_residual", residual}};
    rep.finalize();
    return rep;
  };
}

// ---------------------------------------------------------------------------

BoundEvaluator theorem3_bound(const RunTrace& trace) {
  require_learner(trace, {"scale_invariant"}, "theorem3_bound");
  const ScaleInvKind kind = parse_scale_inv_kind(param_string(trace, "kind"));
  const double L = param_double(trace, "L");
  const double eta = param_double(trace, "eta");
  const LossKind loss = parse_loss_kind(param_string(trace, "loss"));
  std::shared_ptr<const Regularizer> f_T = trace.final_regularizer();
  RealVec b;
  double pT = 2.0, mT = 0.0;
  if (kind == ScaleInvKind::pnorm) {
    const auto& reg = dynamic_cast<const ScaleInvPNorm&>(*f_T);
    b.assign(reg.b().begin(), reg.b().end());
    pT = reg.p();
    mT = static_cast<double>(reg.max_support());
  } else {
    const auto& reg = dynamic_cast<const ScaleInvDiag&>(*f_T);
    b.assign(reg.b().begin(), reg.b().end());
    mT = static_cast<double>(reg.max_support());
  }
  double learner_sum = 0.0;
  auto examples = std::make_shared<std::vector<std::pair<SparseVec, double>>>();
  for (const auto& r : trace.records) {
    learner_sum += r.out.loss;
    examples->emplace_back(r.x, r.y);
  }
  const double T = static_cast<double>(trace.records.size());
  const std::size_t d = trace.header.dim;
  return [=](std::span<const double> u) {
    require_dim("theorem3 comparator", d, u.size());
    BoundReport rep;
    rep.name = "theorem3";
    rep.tolerance = slack_tolerance::scale_invariant;
    double comparator_sum = 0.0;
    for (const auto& [x, y] : *examples) comparator_sum += evaluate_loss(loss, x.dot(u), y).value;
    rep.measured = learner_sum - comparator_sum;
    double factor, spread = 0.0;
    if (kind == ScaleInvKind::pnorm) {
      for (std::size_t i = 0; i < d; ++i) spread += std::abs(u[i]) * b[i];
      spread *= spread;
      factor = L * std::sqrt(kE * (T + 1.0) * (pT - 1.0));
    } else {
      for (std::size_t i = 0; i < d; ++i) spread += sq(u[i] * b[i]);
      factor = L * std::sqrt(static_cast<double>(d) * (T + 1.0));
    }
    rep.bound = factor * (spread / (2.0 * eta) + eta);
    rep.terms = {{"T", T}, {"L", L}, {"eta", eta}, {"p_T", pT}, {"m_T", mT}, {"factor", factor},
                 {"spread", spread}, {"comparator_sum", comparator_sum}, {"learner_sum", learner_sum}};
    rep.finalize();
    return rep;
  };
}

// ---------------------------------------------------------------------------

BoundEvaluator cor3_bound(const RunTrace& trace) {
  require_learner(trace, {"first_order"}, "cor3_bound");
  std::shared_ptr<const Regularizer> f = regularizer_from_json(param(trace, "regularizer"));
  const double beta = f->strong_convexity();
  double M = 0.0, U = 0.0, X = 0.0, D = 0.0;
  bool eta_ok = true;
  auto active = std::make_shared<std::vector<std::pair<SparseVec, double>>>();
  for (const auto& r : trace.records) {
    const StepOutcome& o = r.out;
    const double Xt = extra(r, "X");
    X = std::max(X, Xt);
    if (o.eta < 0.0 || o.eta > 1.0) eta_ok = false;
    if (o.mistake) {
      M += 1.0;
      if (o.eta != 1.0 && !r.x.empty()) eta_ok = false;
    }
    if (o.margin_error) {
      U += 1.0;
      if (o.eta > 0.0) {
        const double xn = extra(r, "x_dual_norm");
        D += o.eta * ((o.eta * xn * xn + 2.0 * beta * extra(r, "margin")) / (Xt * Xt) - 2.0);
      }
    }
    if (o.loss > 0.0) active->emplace_back(r.x, r.y);
  }
  const std::size_t d = trace.header.dim;
  return [=](std::span<const double> u) {
    require_dim("cor3 comparator", d, u.size());
    BoundReport rep;
    rep.name = "cor3";
    double L = 0.0;
    for (const auto& [x, y] : *active) L += hinge(y * x.dot(u)).value;
    const double fu = f->value(u);
    const double k = 2.0 / beta * fu;
    rep.measured = M;
    rep.bound = L + D + k * X * X + X * std::sqrt(k * L);
    const double nu = f->norm(u) * X;
    const double baseline = L + nu * nu + nu * std::sqrt(L);
    rep.terms = {{"M", M}, {"U", U}, {"L(u)", L}, {"D", D}, {"X_T", X}, {"f(u)", fu}, {"beta", beta},
                 {"perceptron_baseline", baseline}};
    rep.flags["eta_hypothesis"] = eta_ok;
    rep.flags["d_negative"] = D < 0.0;
    rep.flags["beats_perceptron"] = rep.bound < baseline;
    rep.required = {"eta_hypothesis"};
    rep.finalize();
    return rep;
  };
}

// ---------------------------------------------------------------------------

namespace {

struct SecondOrderRun {
  double r = 1.0;
  std::string variant;
  std::string trigger;
  double updates = 0.0;
  double update_mistakes = 0.0;
  double S = 0.0;
  bool mistake_terms_nonpositive = true;
  double tentative_sum = 0.0;  // sum over updates of y * tentative
  double dual_sum = 0.0;       // sum over updates of x^T D_t^{-1} x
  double logdet = 0.0;
  RealVec coord_sq;  // per-coordinate sum of x^2 over updates
  double max_x_sq = 0.0;
  std::shared_ptr<std::vector<std::pair<SparseVec, double>>> updated;
};

SecondOrderRun scan_second_order(const RunTrace& trace) {
  require_learner(trace, {"second_order"}, "second_order_bound");
  SecondOrderRun s;
  s.r = param_double(trace, "r");
  s.variant = param_string(trace, "variant");
  s.trigger = param_string(trace, "trigger");
  s.coord_sq.assign(trace.header.dim, 0.0);
  s.updated = std::make_shared<std::vector<std::pair<SparseVec, double>>>();
  for (const auto& rec : trace.records) {
    s.max_x_sq = std::max(s.max_x_sq, rec.x.squared_norm());
    if (!rec.out.updated) continue;
    const double m = extra(rec, "m");
    const double chi = extra(rec, "chi");
    const double term = m * (2.0 * s.r * rec.y - m) / (s.r * (s.r + chi));
    s.updates += 1.0;
    s.S += term;
    if (rec.out.mistake) {
      s.update_mistakes += 1.0;
      if (term > 0.0) s.mistake_terms_nonpositive = false;
    }
    s.tentative_sum += rec.y * extra(rec, "tentative");
    s.dual_sum += rec.out.z_dual_norm_sq;
    for (const auto& e : rec.x.entries()) s.coord_sq[e.index] += e.value * e.value;
    s.updated->emplace_back(rec.x, rec.y);
  }
  std::shared_ptr<const Regularizer> f_T = trace.final_regularizer();
  if (const auto* full = dynamic_cast<const FullQuadratic*>(f_T.get())) {
    s.logdet = full->matrix().logdet();
  } else if (const auto* diag = dynamic_cast<const DiagQuadratic*>(f_T.get())) {
    s.logdet = diag->matrix().logdet();
  }
  return s;
}

// sum over updates of hinge(u) and (u x)^2.
std::pair<double, double> update_terms(const SecondOrderRun& s, std::span<const double> u) {
  double L = 0.0, Q = 0.0;
  for (const auto& [x, y] : *s.updated) {
    const double ux = x.dot(u);
    L += hinge(y * ux).value;
    Q += ux * ux;
  }
  return {L, Q};
}

}  // namespace

BoundEvaluator second_order_bound(const RunTrace& trace) {
  auto s = std::make_shared<SecondOrderRun>(scan_second_order(trace));
  if (s->variant != "full") throw std::invalid_argument("second_order_bound: run used the diagonal variant");
  const std::size_t d = trace.header.dim;
  return [=](std::span<const double> u) {
    require_dim("second_order comparator", d, u.size());
    BoundReport rep;
    rep.name = "second_order";
    const auto [L, Q] = update_terms(*s, u);
    const double U = s->updates - s->update_mistakes;
    const double radius = std::sqrt(s->r * euclid_sq(u) + Q);
    rep.measured = s->updates;
    rep.bound = L + radius * std::sqrt(std::max(0.0, s->logdet + s->S));
    rep.terms = {{"updates", s->updates}, {"M", s->update_mistakes}, {"U", U}, {"L(u)", L},
                 {"logdet", s->logdet}, {"m_sum", s->S}, {"r", s->r}, {"uAu_r", radius * radius}};
    rep.flags["m_sum_le_U"] = s->S <= U + 1e-12;
    rep.flags["mistake_terms_nonpositive"] = s->mistake_terms_nonpositive;
    rep.required = {"m_sum_le_U", "mistake_terms_nonpositive"};
    rep.finalize();
    return rep;
  };
}

BoundEvaluator second_order_arow_bound(const RunTrace& trace) {
  auto s = std::make_shared<SecondOrderRun>(scan_second_order(trace));
  if (s->variant != "full") throw std::invalid_argument("second_order_arow_bound: run used the diagonal variant");
  const std::size_t d = trace.header.dim;
  return [=](std::span<const double> u) {
    require_dim("second_order comparator", d, u.size());
    BoundReport rep;
    rep.name = "second_order_arow";
    const auto [L, Q] = update_terms(*s, u);
    const double U = s->updates - s->update_mistakes;
    const double radius = std::sqrt(s->r * euclid_sq(u) + Q);
    rep.measured = s->updates;
    rep.bound = L + radius * std::sqrt(std::max(0.0, s->logdet + U));
    const double tight = L + radius * std::sqrt(std::max(0.0, s->logdet + s->S));
    rep.terms = {{"updates", s->updates}, {"U", U}, {"L(u)", L}, {"logdet", s->logdet},
                 {"m_sum", s->S}, {"tight_bound", tight}};
    rep.flags["ordering"] = tight <= rep.bound + 1e-12;
    rep.required = {"ordering"};
    rep.finalize();
    return rep;
  };
}

BoundEvaluator diag_bound(const RunTrace& trace) {
  auto s = std::make_shared<SecondOrderRun>(scan_second_order(trace));
  if (s->variant != "diag") throw std::invalid_argument("diag_bound: run used the full variant");
  double logsum = 0.0;
  for (double v : s->coord_sq) logsum += std::log1p(v / s->r);
  logsum *= s->r;
  const std::size_t d = trace.header.dim;
  return [=](std::span<const double> u) {
    require_dim("diag comparator", d, u.size());
    BoundReport rep;
    rep.name = "second_order_diag";
    const auto [L, Q] = update_terms(*s, u);
    double weighted = 0.0;
    for (std::size_t i = 0; i < d; ++i) weighted += u[i] * u[i] * s->coord_sq[i];
    const double U = s->updates - s->update_mistakes;
    const double uDu = euclid_sq(u) + weighted / s->r;
    rep.measured = s->updates;
    rep.bound = L + std::sqrt(uDu) * std::sqrt(logsum + 2.0 * U);
    rep.terms = {{"updates", s->updates}, {"U", U}, {"L(u)", L}, {"log_sum", logsum},
                 {"uDu", uDu}, {"dual_sum", s->dual_sum}, {"tentative_sum", s->tentative_sum}};
    rep.flags["diag_log_lemma"] = s->dual_sum <= logsum + 1e-12;
    rep.flags["tentative_margins"] = s->tentative_sum <= U + 1e-12;
    rep.required = {"diag_log_lemma", "tentative_margins"};
    rep.finalize();
    return rep;
  };
}

BoundEvaluator diag_rare_feature_bound(const RunTrace& trace, std::optional<double> s_given) {
  auto s = std::make_shared<SecondOrderRun>(scan_second_order(trace));
  if (s->variant != "diag" || s->trigger != "conservative") {
    throw std::invalid_argument("diag_rare_feature_bound: needs the conservative diagonal learner");
  }
  const std::size_t d = trace.header.dim;
  const double X2 = s->max_x_sq;
  return [=](std::span<const double> u) {
    require_dim("diag comparator", d, u.size());
    BoundReport rep;
    rep.name = "diag_rare_feature";
    const auto [L, Q] = update_terms(*s, u);
    double weighted = 0.0;
    for (std::size_t i = 0; i < d; ++i) weighted += u[i] * u[i] * s->coord_sq[i];
    const double u2 = euclid_sq(u);
    const double s_used = s_given ? *s_given : (u2 > 0.0 ? weighted / u2 : 0.0);
    const bool hypothesis = weighted <= s_used * u2 * (1.0 + 1e-12);
    const double dd = static_cast<double>(d);
    const double a = u2 * (s->r + s_used) * dd;
    const double b = X2 / (dd * s->r);
    const double M = s->updates;
    rep.measured = M;
    rep.bound = (a > 0.0 && b > 0.0) ? cor_log2(a, b, 0.0, L) : L;
    const double implicit_rhs = std::sqrt(a * std::log1p(b * M)) + L;
    rep.terms = {{"M", M}, {"L(u)", L}, {"s", s_used}, {"X_T", std::sqrt(X2)}, {"a", a}, {"b", b},
                 {"implicit_rhs_at_M", implicit_rhs}};
    rep.flags["hypothesis"] = hypothesis;
    rep.flags["M_satisfies_implicit"] = M <= implicit_rhs + 1e-9;
    rep.required = {"hypothesis", "M_satisfies_implicit"};
    rep.finalize();
    return rep;
  };
}

// ---------------------------------------------------------------------------

std::vector<std::string> applicable_bounds(const RunTrace& trace) {
  const std::string& name = trace.header.learner;
  std::vector<std::string> out{"lemma1"};
  if (name == "ogd" || name == "composite") {
    out.push_back("cor1_general");
    const std::string schedule = param_string(trace, "schedule");
    if (schedule == "sqrt") out.push_back("cor1_sqrt");
    if (name == "composite" && schedule == "none") out.push_back("cor1_linear");
  } else if (name == "scale_invariant") {
    out.push_back("theorem3");
  } else if (name == "first_order") {
    out.push_back("cor3");
  } else if (name == "second_order") {
    if (param_string(trace, "variant") == "full") {
      out.push_back("second_order");
      out.push_back("second_order_arow");
    } else {
      out.push_back("second_order_diag");
      if (param_string(trace, "trigger") == "conservative") out.push_back("diag_rare_feature");
    }
  } else if (name == "vaw") {
    out.push_back("vaw");
  } else if (name == "adaptive_filter") {
    out.push_back("af");
  }
  return out;
}

BoundEvaluator make_bound(const std::string& name, const RunTrace& trace) {
  if (name == "lemma1") return lemma1_audit(trace);
  if (name == "cor1_general") return cor1_bound(trace, Cor1Form::general);
  if (name == "cor1_sqrt") return cor1_bound(trace, Cor1Form::sqrt_time);
  if (name == "cor1_linear") return cor1_bound(trace, Cor1Form::linear_time);
  if (name == "theorem3") return theorem3_bound(trace);
  if (name == "cor3") return cor3_bound(trace);
  if (name == "second_order") return second_order_bound(trace);
  if (name == "second_order_arow") return second_order_arow_bound(trace);
  if (name == "second_order_diag") return diag_bound(trace);
  if (name == "diag_rare_feature") return diag_rare_feature_bound(trace);
  if (name == "vaw") return vaw_bound(trace);
  if (name == "af") return af_bound(trace);
  throw std::invalid_argument("unknown bound '" + name + "'");
}

BoundReport worst_case(const BoundEvaluator& eval, const std::string& bound_name, const std::string& label,
                       const std::vector<Comparator>& comparators) {
  if (comparators.empty()) throw std::invalid_argument("worst_case: no comparators");
  BoundReport worst;
  bool all_ok = true;
  std::size_t worst_index = 0;
  for (std::size_t k = 0; k < comparators.size(); ++k) {
    BoundReport rep = eval(comparators[k].u);
    all_ok = all_ok && rep.ok;
    if (k == 0 || rep.slack < worst.slack) {
      worst = std::move(rep);
      worst_index = k;
    }
  }
  worst.name = bound_name + "@" + label;
  if (comparators.size() > 1) {
    const RealVec& u = comparators[worst_index].u;
    for (std::size_t i = 0; i < u.size(); ++i) worst.terms["u[" + std::to_string(i) + "]"] = u[i];
    worst.terms["comparators"] = static_cast<double>(comparators.size());
  }
  worst.ok = all_ok;
  return worst;
}

// ---------------------------------------------------------------------------

namespace {

double parse_number(std::string_view s, const std::string& context) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("comparator '" + context + "': bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

ComparatorSpec parse_comparator_spec(const std::string& text) {
  ComparatorSpec spec;
  spec.text = text;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string_view rest = colon == std::string::npos ? std::string_view{} : std::string_view(text).substr(colon + 1);
  if (head == "zero" || head == "target") {
    if (!rest.empty()) throw std::invalid_argument("comparator '" + text + "' takes no arguments");
    spec.kind = head == "zero" ? ComparatorSpec::Kind::zero : ComparatorSpec::Kind::target;
    return spec;
  }
  if (head == "fixed") {
    spec.kind = ComparatorSpec::Kind::fixed;
    if (rest.empty()) throw std::invalid_argument("comparator 'fixed' needs values");
    for (auto v : split(rest, ',')) spec.values.push_back(parse_number(v, text));
    return spec;
  }
  if (head == "grid" || head == "batch") {
    spec.kind = head == "grid" ? ComparatorSpec::Kind::grid : ComparatorSpec::Kind::batch;
    if (!rest.empty()) {
      for (auto kv : split(rest, ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw std::invalid_argument("comparator '" + text + "': expected key=value");
        const auto key = kv.substr(0, eq);
        const double v = parse_number(kv.substr(eq + 1), text);
        if (spec.kind == ComparatorSpec::Kind::grid && key == "R") {
          if (!(v > 0.0)) throw std::invalid_argument("comparator grid: R must be positive");
          spec.radius = v;
        } else if (spec.kind == ComparatorSpec::Kind::grid && key == "n") {
          if (v < 2.0 || v != std::floor(v)) throw std::invalid_argument("comparator grid: n must be an integer >= 2");
          spec.points = static_cast<std::size_t>(v);
        } else if (spec.kind == ComparatorSpec::Kind::batch && key == "iters") {
          if (v < 1.0 || v != std::floor(v)) throw std::invalid_argument("comparator batch: iters must be a positive integer");
          spec.iterations = static_cast<std::size_t>(v);
        } else if (spec.kind == ComparatorSpec::Kind::batch && key == "R") {
          if (!(v > 0.0)) throw std::invalid_argument("comparator batch: R must be positive");
          spec.radius = v;
        } else {
          throw std::invalid_argument("comparator '" + text + "': unknown key '" + std::string(key) + "'");
        }
      }
    }
    if (spec.kind == ComparatorSpec::Kind::batch && spec.radius == 2.0 && rest.find("R=") == std::string_view::npos) {
      spec.radius = 10.0;
    }
    return spec;
  }
  throw std::invalid_argument("unknown comparator '" + text + "'");
}

RealVec batch_comparator(const RunTrace& trace, std::size_t iterations, double radius) {
  const std::size_t d = trace.header.dim;
  const LossKind loss = trace_loss(trace);
  std::shared_ptr<const Regularizer> f_T;
  const CompositeQuadL1* comp = nullptr;
  if (trace.header.learner == "composite") {
    f_T = trace.final_regularizer();
    comp = dynamic_cast<const CompositeQuadL1*>(f_T.get());
  }
  const double T = static_cast<double>(trace.records.size());
  auto objective = [&](const RealVec& u) {
    double v = 0.0;
    for (const auto& r : trace.records) v += evaluate_loss(loss, r.x.dot(u), r.y).value;
    if (comp) v += T * comp->penalty(u);
    return v;
  };
  // Five phases; each restarts from the best point so far with a step scale a
  // quarter of the previous one.
  constexpr std::size_t kPhases = 5;
  RealVec u(d, 0.0), best = u;
  double best_obj = objective(u);
  RealVec g(d);
  double scale = radius;
  for (std::size_t it = 0; it < iterations; ++it) {
    const std::size_t per_phase = std::max<std::size_t>(1, iterations / kPhases);
    const std::size_t k = it % per_phase + 1;
    if (it > 0 && k == 1) {
      u = best;
      scale *= 0.25;
    }
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& r : trace.records) {
      const double s = evaluate_loss(loss, r.x.dot(u), r.y).subgrad_scalar;
      if (s != 0.0) axpy(s, r.x, g);
    }
    if (comp) {
      const auto& p = comp->params();
      for (std::size_t i = 0; i < d; ++i) {
        const double sign = u[i] > 0.0 ? 1.0 : (u[i] < 0.0 ? -1.0 : 0.0);
        g[i] += T * (p.l2 * u[i] + p.l1 * sign);
      }
    }
    const double gn = std::sqrt(squared_norm(g));
    if (gn == 0.0) break;
    const double step = scale / (2.0 * std::sqrt(static_cast<double>(k)));
    for (std::size_t i = 0; i < d; ++i) u[i] -= step * g[i] / gn;
    const double un = std::sqrt(squared_norm(u));
    if (un > radius) {
      for (double& v : u) v *= radius / un;
    }
    const double obj = objective(u);
    if (obj < best_obj) {
      best_obj = obj;
      best = u;
    }
  }
  return best;
}

std::vector<Comparator> resolve_comparators(const ComparatorSpec& spec, const RunTrace& trace,
                                            const std::optional<RealVec>& target) {
  const std::size_t d = trace.header.dim;
  switch (spec.kind) {
    case ComparatorSpec::Kind::zero:
      return {{spec.text, RealVec(d, 0.0)}};
    case ComparatorSpec::Kind::target:
      if (!target) throw std::invalid_argument("comparator 'target': the data source has no embedded target");
      require_dim("target comparator", d, target->size());
      return {{spec.text, *target}};
    case ComparatorSpec::Kind::fixed: {
      RealVec u = spec.values;
      if (u.size() == 1 && d != 1) u.assign(d, spec.values[0]);
      require_dim("fixed comparator", d, u.size());
      return {{spec.text, u}};
    }
    case ComparatorSpec::Kind::grid: {
      if (d == 0 || d > 3) throw std::invalid_argument("comparator grid: needs 1 <= d <= 3");
      std::vector<double> axis(spec.points);
      for (std::size_t k = 0; k < spec.points; ++k) {
        axis[k] = -spec.radius + 2.0 * spec.radius * static_cast<double>(k) / static_cast<double>(spec.points - 1);
      }
      std::size_t total = 1;
      for (std::size_t i = 0; i < d; ++i) total *= spec.points;
      std::vector<Comparator> out;
      out.reserve(total);
      for (std::size_t flat = 0; flat < total; ++flat) {
        RealVec u(d);
        std::size_t rem = flat;
        for (std::size_t i = 0; i < d; ++i) {
          u[i] = axis[rem % spec.points];
          rem /= spec.points;
        }
        out.push_back({spec.text, std::move(u)});
      }
      return out;
    }
    case ComparatorSpec::Kind::batch:
      return {{spec.text, batch_comparator(trace, spec.iterations, spec.radius)}};
  }
  return {};
}

std::vector<BoundReport> evaluate_bounds(const RunTrace& trace, const std::vector<ComparatorSpec>& specs,
                                         const std::optional<RealVec>& target) {
  const auto names = applicable_bounds(trace);
  std::vector<BoundEvaluator> evals;
  evals.reserve(names.size());
  for (const auto& n : names) evals.push_back(make_bound(n, trace));
  std::vector<BoundReport> out;
  std::optional<BoundReport> cor3_min;
  for (const auto& spec : specs) {
    const auto comps = resolve_comparators(spec, trace, target);
    for (std::size_t k = 0; k < names.size(); ++k) {
      out.push_back(worst_case(evals[k], names[k], spec.text, comps));
      if (names[k] == "cor3") {
        for (const auto& c : comps) {
          BoundReport rep = evals[k](c.u);
          if (!cor3_min || rep.bound < cor3_min->bound) {
            cor3_min = std::move(rep);
            cor3_min->name = "cor3@min";
          }
        }
      }
    }
  }
  if (cor3_min) {
    cor3_min->finalize();
    out.push_back(*cor3_min);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

void require_nonneg(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be nonnegative");
}

void require_n(double n) {
  if (!(n > 1.0) || !std::isfinite(n)) throw std::invalid_argument("n must exceed 1");
}

}  // namespace

double lemma_log1(double a, double n) {
  require_positive(a, "lemma_log1: a");
  require_n(n);
  return n / (n - 1.0) * a * std::log(n * a / kE);
}

double cor_log1(double a, double b, double c, double d, double n) {
  require_positive(a, "cor_log1: a");
  require_positive(b, "cor_log1: b");
  require_nonneg(c, "cor_log1: c");
  require_nonneg(d, "cor_log1: d");
  require_n(n);
  return n / (n - 1.0) * (a * std::log(n * a * b / kE) + d) + c / (b * (n - 1.0));
}

double cor_log2(double a, double b, double c, double d) {
  require_positive(a, "cor_log2: a");
  require_positive(b, "cor_log2: b");
  require_nonneg(c, "cor_log2: c");
  require_nonneg(d, "cor_log2: d");
  const double arg = std::sqrt(8.0) * a * b * b / kE + 2.0 * b * std::sqrt(c) + 2.0 * d * b + 2.0;
  return std::sqrt(a * std::log(arg) + c) + d;
}

double diag_log_lhs(const std::vector<SparseVec>& xs, double r) {
  require_positive(r, "diag_log_lhs: r");
  if (xs.empty()) return 0.0;
  DiagInverse D(xs.front().dim(), r);
  double total = 0.0;
  for (const auto& x : xs) {
    D.update(x);
    total += D.quad_form(x);
  }
  return total;
}

double diag_log_rhs(const std::vector<SparseVec>& xs, double r) {
  require_positive(r, "diag_log_rhs: r");
  if (xs.empty()) return 0.0;
  RealVec sums(xs.front().dim(), 0.0);
  for (const auto& x : xs) {
    require_dim("diag_log_rhs", sums.size(), x.dim());
    for (const auto& e : x.entries()) sums[e.index] += e.value * e.value;
  }
  double total = 0.0;
  for (double s : sums) total += std::log1p(s / r);
  return r * total;
}

bool sqrt_sum_inequality_check(std::span<const double> a) {
  double prefix = 0.0, lhs = 0.0;
  for (double v : a) {
    if (!(v >= 0.0)) throw std::invalid_argument("sqrt_sum_inequality_check: entries must be nonnegative");
    prefix += v;
    if (prefix > 0.0) lhs += v / std::sqrt(prefix);
  }
  return lhs <= 2.0 * std::sqrt(prefix) + 1e-12;
}

}  // namespace omd
