#include "wavelab/damping.hpp"

#include <cmath>
#include <utility>

#include "wavelab/errors.hpp"

namespace wavelab {

DampingLaw DampingLaw::linear(double gain) {
  if (!(gain >= 0.0)) throw InvalidArgument("linear damping gain must be nonnegative");
  DampingLaw law;
  law.name = "linear";
  law.g = [gain](double s) { return gain * s; };
  law.g_prime = [gain](double) { return gain; };
  law.exponents = DampingExponents{1.0, 1.0, gain, gain};
  law.linear_gain = gain;
  return law;
}

DampingLaw DampingLaw::power(double p) {
  if (!(p > 0.0)) throw InvalidArgument("power damping exponent must be positive");
  DampingLaw law;
  law.name = "power";
  law.g = [p](double s) { return std::copysign(std::pow(std::abs(s), p), s); };
  law.g_prime = [p](double s) {
    const double a = std::abs(s);
    if (a == 0.0) return p < 1.0 ? HUGE_VAL : (p == 1.0 ? 1.0 : 0.0);
    return p * std::pow(a, p - 1.0);
  };
  law.exponents = DampingExponents{p, p, 1.0, 1.0};
  if (p == 1.0) law.linear_gain = 1.0;
  return law;
}

DampingLaw DampingLaw::saturating() {
  DampingLaw law;
  law.name = "saturating";
  law.g = [](double s) { return s / (1.0 + std::abs(s)); };
  law.g_prime = [](double s) {
    const double d = 1.0 + std::abs(s);
    return 1.0 / (d * d);
  };
  // g(s)s = s^2/(1+|s|) >= s^2/2 on [-1,1]; |g(s)| <= |s|.
  law.exponents = DampingExponents{1.0, 1.0, 0.5, 1.0};
  return law;
}

DampingLaw DampingLaw::table(Eigen::VectorXd s, Eigen::VectorXd values) {
  if (s.size() < 2 || s.size() != values.size())
    throw InvalidArgument("damping table needs at least two (s, g) rows");
  for (Eigen::Index k = 1; k < s.size(); ++k) {
    if (!(s(k) > s(k - 1))) throw InvalidArgument("damping table s column must increase");
    if (values(k) < values(k - 1)) throw InvalidArgument("damping table must be nondecreasing");
  }
  DampingLaw law;
  law.name = "table";
  law.g = [s = std::move(s), values = std::move(values)](double at) {
    const Eigen::Index n = s.size();
    auto extend = [&](Eigen::Index i0, Eigen::Index i1) {
      const double slope = (values(i1) - values(i0)) / (s(i1) - s(i0));
      return values(i0) + slope * (at - s(i0));
    };
    if (at <= s(0)) return extend(0, 1);
    if (at >= s(n - 1)) return extend(n - 2, n - 1);
    Eigen::Index k = 0;
    while (s(k + 1) < at) ++k;
    return extend(k, k + 1);
  };
  return law;
}

bool is_admissible(const DampingLaw& law, double span, int samples) {
  if (std::abs(law.g(0.0)) > 1e-14) return false;
  double prev = law.g(-span);
  for (int i = 1; i < samples; ++i) {
    const double s = -span + 2.0 * span * i / (samples - 1);
    const double cur = law.g(s);
    if (cur < prev - 1e-14 * (1.0 + std::abs(prev))) return false;
    prev = cur;
  }
  return true;
}

double solve_damped_velocity(double mass, double weight, const DampingLaw& law, double rhs) {
  if (weight == 0.0) return rhs / mass;
  if (law.linear_gain) return rhs / (mass + weight * *law.linear_gain);

  const double guess = rhs / mass;
  if (guess == 0.0) return 0.0;
  double lo = std::min(0.0, guess);
  double hi = std::max(0.0, guess);
  auto residual = [&](double v) { return mass * v + weight * law.g(v) - rhs; };
  const double scale = std::abs(guess);
  double v = guess;
  for (int it = 0; it < 200; ++it) {
    const double r = residual(v);
    if (r == 0.0) return v;
    if (r > 0.0) hi = v; else lo = v;
    if (hi - lo <= 1e-13 * scale) break;
    double next = 0.5 * (lo + hi);
    if (law.g_prime) {
      const double slope = mass + weight * law.g_prime(v);
      if (std::isfinite(slope) && slope > 0.0) {
        const double newton = v - r / slope;
        if (newton > lo && newton < hi) next = newton;
      }
    }
    if (std::abs(next - v) <= 1e-15 * scale) {
      v = next;
      break;
    }
    v = next;
  }
  return v;
}

}  // namespace wavelab
