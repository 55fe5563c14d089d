#include "pfc/potential.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace pfc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x ln x with the continuous extension 0 at x = 0.
double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

[[noreturn]] void out_of_domain(const char* what, double r) {
  std::ostringstream msg;
  msg << what << ": argument " << r << " outside D(beta)";
  throw OutOfDomain(msg.str());
}

}  // namespace

double Interval::distance_to_boundary(double r) const {
  return std::min(r - lo, hi - r);
}

Potential Potential::regular(double eps) {
  Potential p;
  p.kind_ = PotentialKind::regular;
  p.eps_ = eps;
  return p;
}

Potential Potential::logarithmic(double c, double eps) {
  if (!(c > 0.0)) {
    throw ConfigError("logarithmic potential needs c > 0");
  }
  Potential p;
  p.kind_ = PotentialKind::logarithmic;
  p.c_ = c;
  p.eps_ = eps;
  p.domain_ = {-1.0, 1.0};
  return p;
}

Potential Potential::loglinear(double eps) {
  Potential p;
  p.kind_ = PotentialKind::loglinear;
  p.eps_ = eps;
  p.domain_ = {-1.0, kInf};
  return p;
}

Potential Potential::custom(CustomPotential parts, double eps) {
  if (!parts.beta_hat || !parts.beta || !parts.beta_prime || !parts.pi_hat || !parts.pi ||
      !parts.pi_prime || !parts.pi_second) {
    throw ConfigError("custom potential requires every evaluator");
  }
  if (!parts.domain.contains(0.0)) {
    throw ConfigError("custom potential: D(beta) must contain 0");
  }
  Potential p;
  p.kind_ = PotentialKind::custom;
  p.eps_ = eps;
  p.domain_ = parts.domain;
  p.custom_ = std::make_shared<const CustomPotential>(std::move(parts));
  return p;
}

Potential Potential::with_eps(double eps) const {
  Potential p = *this;
  p.eps_ = eps;
  return p;
}

double Potential::beta_hat(double r) const {
  if (!domain_.contains(r)) out_of_domain("beta_hat", r);
  switch (kind_) {
    case PotentialKind::regular:
      return 0.25 * r * r * r * r;
    case PotentialKind::logarithmic:
      return xlogx(1.0 + r) + xlogx(1.0 - r);
    case PotentialKind::loglinear:
      return r - std::log1p(r);
    case PotentialKind::custom:
      return custom_->beta_hat(r);
  }
  return 0.0;
}

double Potential::beta(double r) const {
  if (!domain_.contains(r)) out_of_domain("beta", r);
  switch (kind_) {
    case PotentialKind::regular:
      return r * r * r;
    case PotentialKind::logarithmic:
      return std::log1p(r) - std::log1p(-r);
    case PotentialKind::loglinear:
      return 1.0 - 1.0 / (r + 1.0);
    case PotentialKind::custom:
      return custom_->beta(r);
  }
  return 0.0;
}

double Potential::beta_prime(double r) const {
  if (!domain_.contains(r)) out_of_domain("beta_prime", r);
  switch (kind_) {
    case PotentialKind::regular:
      return 3.0 * r * r;
    case PotentialKind::logarithmic:
      return 2.0 / ((1.0 - r) * (1.0 + r));
    case PotentialKind::loglinear:
      return 1.0 / ((r + 1.0) * (r + 1.0));
    case PotentialKind::custom:
      return custom_->beta_prime(r);
  }
  return 0.0;
}

double Potential::pi_hat(double r) const {
  switch (kind_) {
    case PotentialKind::regular:
      return 0.25 * (1.0 - 2.0 * r * r);
    case PotentialKind::logarithmic:
      return -c_ * r * r;
    case PotentialKind::loglinear:
      return 0.0;
    case PotentialKind::custom:
      return custom_->pi_hat(r);
  }
  return 0.0;
}

double Potential::pi(double r) const {
  switch (kind_) {
    case PotentialKind::regular:
      return -r;
    case PotentialKind::logarithmic:
      return -2.0 * c_ * r;
    case PotentialKind::loglinear:
      return 0.0;
    case PotentialKind::custom:
      return custom_->pi(r);
  }
  return 0.0;
}

double Potential::pi_prime(double r) const {
  switch (kind_) {
    case PotentialKind::regular:
      return -1.0;
    case PotentialKind::logarithmic:
      return -2.0 * c_;
    case PotentialKind::loglinear:
      return 0.0;
    case PotentialKind::custom:
      return custom_->pi_prime(r);
  }
  return 0.0;
}

double Potential::pi_second(double r) const {
  if (kind_ == PotentialKind::custom) return custom_->pi_second(r);
  return 0.0;
}

double Potential::resolvent(double eps, double r) const {
  if (!(eps > 0.0)) {
    throw ConfigError("Yosida level must be positive");
  }
  if (!std::isfinite(r)) {
    throw RootSolveFailure("resolvent: non-finite argument");
  }
  if (r == 0.0) return 0.0;

  // beta(0) = 0 and beta is monotone, so the root lies between 0 and r,
  // clipped to D(beta).
  double lo = std::max(std::min(0.0, r), domain_.lo);
  double hi = std::min(std::max(0.0, r), domain_.hi);
  auto residual = [&](double x) { return x + eps * beta(x) - r; };

  // Closed ends that are inside D can be tested directly.
  if (domain_.contains(lo) && residual(lo) == 0.0) return lo;
  if (domain_.contains(hi) && residual(hi) == 0.0) return hi;

  double x = domain_.contains(r) ? r : 0.5 * (lo + hi);
  if (!domain_.contains(x)) x = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double g = residual(x);
    if (g == 0.0) return x;
    if (g > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double slope = 1.0 + eps * beta_prime(x);
    double next = x - g / slope;
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x) ||
        next == lo || next == hi) {
      return domain_.contains(next) ? next : x;
    }
    x = next;
  }
  throw RootSolveFailure("resolvent: no convergence");
}

double Potential::yosida(double eps, double r) const {
  return (r - resolvent(eps, r)) / eps;
}

double Potential::yosida_prime(double eps, double r) const {
  const double x = resolvent(eps, r);
  const double bp = beta_prime(x);
  // Written so that bp -> infinity gives the limit 1 / eps.
  return bp / (1.0 + eps * bp);
}

double Potential::yosida_hat(double eps, double r) const {
  const double x = resolvent(eps, r);
  const double d = r - x;
  return beta_hat(x) + d * d / (2.0 * eps);
}

double Potential::monotone(double r) const { return eps_ > 0.0 ? yosida(eps_, r) : beta(r); }

double Potential::monotone_prime(double r) const {
  return eps_ > 0.0 ? yosida_prime(eps_, r) : beta_prime(r);
}

double Potential::monotone_hat(double r) const {
  return eps_ > 0.0 ? yosida_hat(eps_, r) : beta_hat(r);
}

PotentialValue Potential::eval_w(double r) const {
  const double bh = monotone_hat(r);
  const double ph = pi_hat(r);
  return {bh + ph, bh, ph};
}

SplitValue Potential::eval_split(double r) const {
  return {monotone(r), monotone_prime(r), pi(r), pi_prime(r), pi_second(r)};
}

std::string Potential::name() const {
  std::ostringstream out;
  switch (kind_) {
    case PotentialKind::regular:
      out << "regular";
      break;
    case PotentialKind::logarithmic:
      out << "logarithmic(c=" << c_ << ")";
      break;
    case PotentialKind::loglinear:
      out << "loglinear";
      break;
    case PotentialKind::custom:
      out << "custom";
      break;
  }
  if (eps_ > 0.0) out << "[eps=" << eps_ << "]";
  return out.str();
}

}  // namespace pfc
