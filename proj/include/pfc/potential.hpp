#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>

#include "pfc/errors.hpp"

namespace pfc {

enum class PotentialKind { regular, logarithmic, loglinear, custom };

/// Open interval, endpoints may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double r) const { return r > lo && r < hi; }
  bool bounded() const { return std::isfinite(lo) || std::isfinite(hi); }
  double distance_to_boundary(double r) const;
};

/// W = beta_hat + pi_hat, values and derivatives of both parts.
struct PotentialValue {
  double w;
  double beta_hat;
  double pi_hat;
};

struct SplitValue {
  double beta;
  double beta_prime;
  double pi;
  double pi_prime;
  double pi_second;
};

/// Evaluators for a user-supplied split. beta_hat must be convex with
/// beta_hat(0) = 0 on `domain`; pi_prime must be Lipschitz.
struct CustomPotential {
  Interval domain;
  std::function<double(double)> beta_hat;
  std::function<double(double)> beta;
  std::function<double(double)> beta_prime;
  std::function<double(double)> pi_hat;
  std::function<double(double)> pi;
  std::function<double(double)> pi_prime;
  std::function<double(double)> pi_second;
};

/// Double-well potential with its convex/perturbation split and an optional
/// Yosida level. With eps > 0 the monotone part is replaced everywhere by
/// its Yosida regularization; eps == 0 evaluates beta exactly on D(beta).
///
/// Stock splits:
///   regular      beta_hat = r^4/4,               pi_hat = (1 - 2 r^2)/4
///   logarithmic  beta_hat = (1+r)ln(1+r) + (1-r)ln(1-r),  pi_hat = -c r^2
///   loglinear    beta_hat = r - ln(1+r),          pi_hat = 0
class Potential {
 public:
  static Potential regular(double eps = 0.0);
  static Potential logarithmic(double c = 2.0, double eps = 0.0);
  static Potential loglinear(double eps = 0.0);
  static Potential custom(CustomPotential parts, double eps = 0.0);

  PotentialKind kind() const { return kind_; }
  double c() const { return c_; }
  double yosida_eps() const { return eps_; }
  const Interval& domain() const { return domain_; }
  bool singular() const { return domain_.bounded(); }

  /// Copy with a different Yosida level.
  Potential with_eps(double eps) const;

  // Exact parts. The beta_hat / beta family throws OutOfDomain outside D(beta).
  double beta_hat(double r) const;
  double beta(double r) const;
  double beta_prime(double r) const;
  double pi_hat(double r) const;
  double pi(double r) const;
  double pi_prime(double r) const;
  double pi_second(double r) const;

  /// Resolvent J_eps(r): the x in D(beta) with x + eps beta(x) = r.
  double resolvent(double eps, double r) const;
  /// Yosida regularization (r - J_eps(r)) / eps.
  double yosida(double eps, double r) const;
  /// beta'(J) / (1 + eps beta'(J)) with J = J_eps(r).
  double yosida_prime(double eps, double r) const;
  /// Moreau envelope beta_hat(J) + (r - J)^2 / (2 eps), the primitive of the
  /// Yosida regularization.
  double yosida_hat(double eps, double r) const;

  // Monotone part as used by the dynamics: Yosida when eps > 0, exact otherwise.
  double monotone(double r) const;
  double monotone_prime(double r) const;
  double monotone_hat(double r) const;

  /// W and its parts. Uses the regularized convex part when eps > 0.
  PotentialValue eval_w(double r) const;
  SplitValue eval_split(double r) const;

  std::string name() const;

 private:
  Potential() = default;

  PotentialKind kind_ = PotentialKind::regular;
  double c_ = 0.0;
  double eps_ = 0.0;
  Interval domain_;
  std::shared_ptr<const CustomPotential> custom_;
};

}  // namespace pfc
