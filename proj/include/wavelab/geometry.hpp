#pragma once

// Multiplier geometry for the domains used in the numerical studies: the
// field m(x) = x - x0, the radius R(x0), the boundary partition
// {Gamma(x0), Gamma*(x0)} and the minimal control times.
//
// Everything here is header-only and templated on the scalar type.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "wavelab/errors.hpp"

namespace wavelab {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct Interval {
  Scalar left;
  Scalar right;
};

template <typename Scalar>
struct Rectangle {
  Point2<Scalar> corner_min;
  Point2<Scalar> corner_max;
};

template <typename Scalar>
struct Disk {
  Point2<Scalar> center;
  Scalar radius;
};

template <typename Scalar>
using Domain = std::variant<Interval<Scalar>, Rectangle<Scalar>, Disk<Scalar>>;

// Observer point x0; its dimension must match the domain (1 or 2).
template <typename Scalar>
using ObserverPoint = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class PieceKind { point, segment, arc };

// One boundary piece. Segments are parametrized by the varying coordinate,
// arcs by the polar angle (radians, half-open [begin, end), begin in [0, 2pi)).
// Points carry counting measure 1.
template <typename Scalar>
struct BoundaryPiece {
  std::string label;
  PieceKind kind;
  Scalar begin;
  Scalar end;
  Scalar measure;
};

template <typename Scalar>
struct BoundaryPartition {
  std::vector<BoundaryPiece<Scalar>> gamma_x0;
  std::vector<BoundaryPiece<Scalar>> gamma_star;

  Scalar measure_gamma_x0() const { return total(gamma_x0); }
  Scalar measure_gamma_star() const { return total(gamma_star); }

 private:
  static Scalar total(const std::vector<BoundaryPiece<Scalar>>& pieces) {
    Scalar s(0);
    for (const auto& p : pieces) s += p.measure;
    return s;
  }
};

struct BoundaryOneEnd {};
struct BoundaryBothEnds {};
template <typename Scalar>
struct InternalInterval {
  Scalar l1;
  Scalar l2;
};
struct MultiplierGeometric {};

template <typename Scalar>
using ControlPlacement = std::variant<BoundaryOneEnd, BoundaryBothEnds,
                                      InternalInterval<Scalar>, MultiplierGeometric>;

namespace detail {

template <typename Scalar>
void validate(const Domain<Scalar>& domain) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Interval<Scalar>>) {
          if (!(d.left < d.right)) throw InvalidArgument("interval requires x_left < x_right");
        } else if constexpr (std::is_same_v<T, Rectangle<Scalar>>) {
          if (!(d.corner_min.array() < d.corner_max.array()).all())
            throw InvalidArgument("rectangle requires corner_min < corner_max componentwise");
        } else {
          if (!(d.radius > Scalar(0))) throw InvalidArgument("disk requires radius > 0");
        }
      },
      domain);
}

template <typename Scalar>
int dimension(const Domain<Scalar>& domain) {
  return std::holds_alternative<Interval<Scalar>>(domain) ? 1 : 2;
}

template <typename Scalar>
void validate(const Domain<Scalar>& domain, const ObserverPoint<Scalar>& x0) {
  validate(domain);
  if (x0.size() != dimension(domain))
    throw InvalidArgument("observer point dimension does not match the domain");
  if (!x0.allFinite()) throw InvalidArgument("observer point must be finite");
}

template <typename Scalar>
Point2<Scalar> as_point2(const ObserverPoint<Scalar>& x0) {
  return Point2<Scalar>(x0(0), x0(1));
}

template <typename Scalar>
std::string format_number(Scalar value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(value));
  return buf;
}

template <typename Scalar>
Scalar wrap_angle(Scalar theta) {
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  theta = std::fmod(theta, two_pi);
  if (theta < Scalar(0)) theta += two_pi;
  return theta;
}

}  // namespace detail

// m(x) = x - x0.
template <typename Derived, typename Scalar = typename Derived::Scalar>
auto multiplier_field(const Eigen::MatrixBase<Derived>& x, const ObserverPoint<Scalar>& x0) {
  return (x - x0).eval();
}

// R(x0): sup of |x - x0| over the closure of the domain.
template <typename Scalar>
Scalar multiplier_radius(const Domain<Scalar>& domain, const ObserverPoint<Scalar>& x0) {
  detail::validate(domain, x0);
  return std::visit(
      [&](const auto& d) -> Scalar {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Interval<Scalar>>) {
          return std::max(std::abs(d.left - x0(0)), std::abs(d.right - x0(0)));
        } else if constexpr (std::is_same_v<T, Rectangle<Scalar>>) {
          const Point2<Scalar> p = detail::as_point2(x0);
          Scalar best(0);
          for (int i = 0; i < 4; ++i) {
            const Point2<Scalar> corner((i & 1) ? d.corner_max.x() : d.corner_min.x(),
                                        (i & 2) ? d.corner_max.y() : d.corner_min.y());
            best = std::max(best, (corner - p).norm());
          }
          return best;
        } else {
          return (d.center - detail::as_point2(x0)).norm() + d.radius;
        }
      },
      domain);
}

// Sign partition of the boundary by m(x).nu(x). Pieces where m.nu = 0 go to
// Gamma*(x0).
template <typename Scalar>
BoundaryPartition<Scalar> boundary_partition(const Domain<Scalar>& domain,
                                             const ObserverPoint<Scalar>& x0) {
  detail::validate(domain, x0);
  BoundaryPartition<Scalar> out;
  auto assign = [&](Scalar m_dot_nu, BoundaryPiece<Scalar> piece) {
    (m_dot_nu > Scalar(0) ? out.gamma_x0 : out.gamma_star).push_back(std::move(piece));
  };
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Interval<Scalar>>) {
          assign(x0(0) - d.left, {"x=" + detail::format_number(d.left), PieceKind::point, d.left,
                                  d.left, Scalar(1)});
          assign(d.right - x0(0), {"x=" + detail::format_number(d.right), PieceKind::point, d.right,
                                   d.right, Scalar(1)});
        } else if constexpr (std::is_same_v<T, Rectangle<Scalar>>) {
          const Scalar x_lo = d.corner_min.x(), x_hi = d.corner_max.x();
          const Scalar y_lo = d.corner_min.y(), y_hi = d.corner_max.y();
          // On a straight side m.nu is constant.
          assign(x0(0) - x_lo, {"x=xmin", PieceKind::segment, y_lo, y_hi, y_hi - y_lo});
          assign(x_hi - x0(0), {"x=xmax", PieceKind::segment, y_lo, y_hi, y_hi - y_lo});
          assign(x0(1) - y_lo, {"y=ymin", PieceKind::segment, x_lo, x_hi, x_hi - x_lo});
          assign(y_hi - x0(1), {"y=ymax", PieceKind::segment, x_lo, x_hi, x_hi - x_lo});
        } else {
          // x = c + r e(theta): m.nu = r + (c - x0).e(theta).
          const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
          const Point2<Scalar> offset = d.center - detail::as_point2(x0);
          const Scalar dist = offset.norm();
          if (dist <= d.radius) {
            // x0 in the closed disk: m.nu > 0 except at one point at most.
            out.gamma_x0.push_back({"arc", PieceKind::arc, Scalar(0), two_pi, two_pi * d.radius});
            return;
          }
          const Scalar psi = std::atan2(offset.y(), offset.x());
          const Scalar half = std::acos(-d.radius / dist);
          const Scalar begin = detail::wrap_angle(psi - half);
          out.gamma_x0.push_back(
              {"arc", PieceKind::arc, begin, begin + Scalar(2) * half, Scalar(2) * half * d.radius});
          const Scalar star_begin = detail::wrap_angle(psi + half);
          const Scalar star_width = two_pi - Scalar(2) * half;
          out.gamma_star.push_back({"arc", PieceKind::arc, star_begin, star_begin + star_width,
                                    star_width * d.radius});
        }
      },
      domain);
  return out;
}

template <typename Scalar>
Scalar boundary_measure(const Domain<Scalar>& domain) {
  detail::validate(domain);
  return std::visit(
      [](const auto& d) -> Scalar {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Interval<Scalar>>) {
          return Scalar(2);
        } else if constexpr (std::is_same_v<T, Rectangle<Scalar>>) {
          return Scalar(2) * (d.corner_max - d.corner_min).sum();
        } else {
          return Scalar(2) * std::numbers::pi_v<Scalar> * d.radius;
        }
      },
      domain);
}

// Threshold control time for a placement and wave speed bound a0.
template <typename Scalar>
Scalar minimal_control_time(const Domain<Scalar>& domain, const ObserverPoint<Scalar>& x0,
                            Scalar a0, const ControlPlacement<Scalar>& placement) {
  detail::validate(domain, x0);
  if (!(a0 > Scalar(0))) throw InvalidArgument("a0 must be positive");
  const Scalar speed = std::sqrt(a0);
  const auto* interval = std::get_if<Interval<Scalar>>(&domain);
  return std::visit(
      [&](const auto& p) -> Scalar {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, MultiplierGeometric>) {
          return Scalar(2) * multiplier_radius(domain, x0) / speed;
        } else {
          if (interval == nullptr)
            throw InvalidArgument("this placement is defined on interval domains only");
          const Scalar length = interval->right - interval->left;
          if constexpr (std::is_same_v<P, BoundaryOneEnd>) {
            return Scalar(2) * length / speed;
          } else if constexpr (std::is_same_v<P, BoundaryBothEnds>) {
            return length / speed;
          } else {
            if (!(interval->left <= p.l1 && p.l1 < p.l2 && p.l2 <= interval->right))
              throw InvalidArgument("internal interval requires x_left <= l1 < l2 <= x_right");
            const Scalar reach = std::max(p.l1 - interval->left, interval->right - p.l2);
            return Scalar(2) * reach / speed;
          }
        }
      },
      placement);
}

}  // namespace wavelab
