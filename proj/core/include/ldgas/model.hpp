#pragma once

// Potentials, linear statistics and gas parameters shared by every other
// part of the library. All types are immutable values.

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ldgas {

/// Real polynomial stored by ascending powers: coefficient k multiplies
/// lambda^k. Trailing zeros are trimmed on construction, so the zero
/// polynomial has an empty coefficient list.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients);
  Polynomial(std::initializer_list<double> coefficients);

  static Polynomial monomial(int power, double coefficient = 1.0);
  static Polynomial constant(double value) { return Polynomial{value}; }

  std::span<const double> coefficients() const noexcept { return coeffs_; }
  double coefficient(int k) const noexcept;

  /// Degree of the polynomial; -1 for the zero polynomial.
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  double leading() const noexcept { return coeffs_.empty() ? 0.0 : coeffs_.back(); }

  double operator()(double x) const noexcept;

  Polynomial derivative() const;
  /// Antiderivative with zero constant term.
  Polynomial antiderivative() const;
  /// Returns q with q(x) = p(x + shift) (Taylor shift).
  Polynomial shifted(double shift) const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double scale, const Polynomial& p);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend bool operator==(const Polynomial&, const Polynomial&) = default;

  std::string to_string() const;

 private:
  void trim();
  std::vector<double> coeffs_;
};

double eval(const Polynomial& p, double x) noexcept;
Polynomial derivative(const Polynomial& p);

/// One side of a confining box: either a finite position or unbounded.
class Bound {
 public:
  static Bound infinite() { return Bound{}; }
  static Bound at(double position) { return Bound{position}; }

  bool finite() const noexcept { return value_.has_value(); }
  /// Position of a finite bound; calling on an infinite bound is a logic error.
  double value() const { return value_.value(); }

  friend bool operator==(const Bound&, const Bound&) = default;

 private:
  Bound() = default;
  explicit Bound(double v) : value_(v) {}
  std::optional<double> value_;
};

/// Hard confinement [lower, upper]; either side may be unbounded.
class Walls {
 public:
  Walls() : lower_(Bound::infinite()), upper_(Bound::infinite()) {}
  Walls(Bound lower, Bound upper);
  static Walls none() { return Walls{}; }
  static Walls box(double lower, double upper) {
    return Walls{Bound::at(lower), Bound::at(upper)};
  }

  const Bound& lower() const noexcept { return lower_; }
  const Bound& upper() const noexcept { return upper_; }
  bool unbounded() const noexcept { return !lower_.finite() && !upper_.finite(); }
  /// Strictly inside the walls.
  bool contains(double x) const noexcept;

  friend bool operator==(const Walls&, const Walls&) = default;

 private:
  Bound lower_;
  Bound upper_;
};

/// External potential V together with its walls. make() enforces the
/// growth condition when the walls are absent; local() skips it and is used
/// for analytic continuation of a saddle point past the confinement domain.
class ConfinementPotential {
 public:
  static ConfinementPotential make(Polynomial v, Walls walls = Walls::none());
  static ConfinementPotential local(Polynomial v, Walls walls = Walls::none());

  const Polynomial& v() const noexcept { return v_; }
  const Walls& walls() const noexcept { return walls_; }
  /// False for potentials built with local() that violate the growth condition.
  bool confined() const noexcept { return confined_; }

  /// Whether v on these walls confines a gas with logarithmic repulsion.
  static bool growth_ok(const Polynomial& v, const Walls& walls) noexcept;

 private:
  ConfinementPotential(Polynomial v, Walls walls, bool confined)
      : v_(std::move(v)), walls_(walls), confined_(confined) {}
  Polynomial v_;
  Walls walls_;
  bool confined_ = true;
};

/// Linear statistic F = N^-1 sum_i f(lambda_i); f must be non-constant.
class LinearStatistic {
 public:
  explicit LinearStatistic(Polynomial f);
  const Polynomial& f() const noexcept { return f_; }
  double operator()(double x) const noexcept { return f_(x); }

 private:
  Polynomial f_;
};

struct GasParameters {
  GasParameters(int n_particles, double beta = 2.0);

  int n_particles;
  double beta;

  /// Large-deviation speed beta * N^2.
  double speed() const noexcept {
    return beta * static_cast<double>(n_particles) * static_cast<double>(n_particles);
  }
};

/// W_s = V + s f on the walls of V. Throws Error(IllConfined) when the walls
/// are absent and W_s fails the growth condition.
ConfinementPotential tilt(const ConfinementPotential& potential,
                          const LinearStatistic& statistic, double s);

/// Same as tilt() but returns a local() potential instead of throwing.
ConfinementPotential tilt_local(const ConfinementPotential& potential,
                                const LinearStatistic& statistic, double s);

}  // namespace ldgas
