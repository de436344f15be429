#include "ldgas/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ldgas/error.hpp"

namespace ldgas {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::IllConfined: return "ILL_CONFINED";
    case ErrorCode::NoOneCut: return "NO_ONE_CUT";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::FlatSegment: return "FLAT_SEGMENT";
    case ErrorCode::NotAnalytic: return "NOT_ANALYTIC";
    case ErrorCode::PathMismatch: return "PATH_MISMATCH";
  }
  return "UNKNOWN";
}

Polynomial::Polynomial(std::vector<double> coefficients) : coeffs_(std::move(coefficients)) {
  trim();
}

Polynomial::Polynomial(std::initializer_list<double> coefficients) : coeffs_(coefficients) {
  trim();
}

Polynomial Polynomial::monomial(int power, double coefficient) {
  if (power < 0) throw Error(ErrorCode::InvalidArgument, "monomial power must be >= 0");
  std::vector<double> c(static_cast<std::size_t>(power) + 1, 0.0);
  c.back() = coefficient;
  return Polynomial(std::move(c));
}

void Polynomial::trim() {
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

double Polynomial::coefficient(int k) const noexcept {
  if (k < 0 || k >= static_cast<int>(coeffs_.size())) return 0.0;
  return coeffs_[static_cast<std::size_t>(k)];
}

double Polynomial::operator()(double x) const noexcept {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (coeffs_.size() <= 1) return {};
  std::vector<double> d(coeffs_.size() - 1);
  for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return Polynomial(std::move(d));
}

Polynomial Polynomial::antiderivative() const {
  if (coeffs_.empty()) return {};
  std::vector<double> a(coeffs_.size() + 1, 0.0);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) a[k + 1] = coeffs_[k] / static_cast<double>(k + 1);
  return Polynomial(std::move(a));
}

Polynomial Polynomial::shifted(double shift) const {
  // Horner in polynomial arithmetic: q = (...(c_n (x+h) + c_{n-1})(x+h) + ...).
  std::vector<double> q;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    q.push_back(0.0);
    for (std::size_t k = q.size() - 1; k > 0; --k) q[k] = q[k - 1] + shift * q[k];
    q[0] = shift * q[0] + *it;
  }
  return Polynomial(std::move(q));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
  for (std::size_t k = 0; k < a.coeffs_.size(); ++k) c[k] += a.coeffs_[k];
  for (std::size_t k = 0; k < b.coeffs_.size(); ++k) c[k] += b.coeffs_[k];
  return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }

Polynomial operator*(double scale, const Polynomial& p) {
  std::vector<double> c(p.coeffs_);
  for (double& v : c) v *= scale;
  return Polynomial(std::move(c));
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return Polynomial(std::move(c));
}

std::string Polynomial::to_string() const {
  if (coeffs_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    if (coeffs_[k] == 0.0) continue;
    if (!first) os << " + ";
    os << coeffs_[k];
    if (k == 1) os << "*x";
    if (k > 1) os << "*x^" << k;
    first = false;
  }
  return os.str();
}

double eval(const Polynomial& p, double x) noexcept { return p(x); }
Polynomial derivative(const Polynomial& p) { return p.derivative(); }

Walls::Walls(Bound lower, Bound upper) : lower_(lower), upper_(upper) {
  if (lower_.finite() && upper_.finite() && !(lower_.value() < upper_.value()))
    throw Error(ErrorCode::InvalidArgument, "walls require lower < upper");
}

bool Walls::contains(double x) const noexcept {
  if (lower_.finite() && !(x > lower_.value())) return false;
  if (upper_.finite() && !(x < upper_.value())) return false;
  return true;
}

bool ConfinementPotential::growth_ok(const Polynomial& v, const Walls& walls) noexcept {
  const int deg = v.degree();
  const double lead = v.leading();
  if (!walls.upper().finite() && !(deg >= 1 && lead > 0.0)) return false;
  if (!walls.lower().finite()) {
    const double sign_at_minus_inf = (deg % 2 == 0) ? lead : -lead;
    if (!(deg >= 1 && sign_at_minus_inf > 0.0)) return false;
  }
  return true;
}

ConfinementPotential ConfinementPotential::make(Polynomial v, Walls walls) {
  if (!growth_ok(v, walls)) {
    std::ostringstream os;
    os << "potential " << v.to_string() << " does not confine the gas: degree " << v.degree()
       << ", leading coefficient " << v.leading();
    throw Error(ErrorCode::IllConfined, os.str());
  }
  return ConfinementPotential(std::move(v), walls, true);
}

ConfinementPotential ConfinementPotential::local(Polynomial v, Walls walls) {
  const bool ok = growth_ok(v, walls);
  return ConfinementPotential(std::move(v), walls, ok);
}

LinearStatistic::LinearStatistic(Polynomial f) : f_(std::move(f)) {
  if (f_.degree() < 1)
    throw Error(ErrorCode::InvalidArgument, "linear statistic must have degree >= 1");
}

GasParameters::GasParameters(int n, double b) : n_particles(n), beta(b) {
  if (n_particles <= 0) throw Error(ErrorCode::InvalidArgument, "n_particles must be positive");
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
}

ConfinementPotential tilt(const ConfinementPotential& potential, const LinearStatistic& statistic,
                          double s) {
  if (s == 0.0) return potential;
  return ConfinementPotential::make(potential.v() + s * statistic.f(), potential.walls());
}

ConfinementPotential tilt_local(const ConfinementPotential& potential,
                                const LinearStatistic& statistic, double s) {
  if (s == 0.0) return potential;
  return ConfinementPotential::local(potential.v() + s * statistic.f(), potential.walls());
}

}  // namespace ldgas
