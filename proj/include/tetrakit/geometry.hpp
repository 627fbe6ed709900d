#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "matkernel.hpp"

namespace tetrakit {

struct Point3 {
    Complex a{}, b{}, t{};
};

struct MembershipVerdict {
    bool in_open = false;
    bool in_closure = false;
    bool in_bE = false;
    double sup_psi_ab = 0.0;
    double sup_psi_ba = 0.0;
    bool boundary_marginal = false;
    bool symmetry_consistent = true;
    std::optional<Matrix> witness;
};

inline constexpr double kPoleTol = 1e-14;
inline constexpr double kDegenerateTol = 1e-14;

inline Complex psi_eval(Complex z, const Point3& p) {
    const Complex den = 1.0 - z * p.b;
    if (std::abs(den) < kPoleTol) throw PoleError("psi_eval: 1 - z*b vanishes");
    return (p.a - z * p.t) / den;
}

/// Supremum of |Psi(., p)| over the closed unit disk. Psi is a Moebius map
/// sending the disk onto the disk with centre (a - conj(b) t)/(1-|b|^2)
/// and radius |ab - t|/(1-|b|^2).
inline double sup_psi_circle(const Point3& p) {
    const Complex ab_t = p.a * p.b - p.t;
    if (std::abs(ab_t) <= kDegenerateTol) return std::abs(p.a);
    const double nb = std::norm(p.b);
    if (std::abs(p.b) >= 1.0) return std::numeric_limits<double>::infinity();
    const Complex c = (p.a - std::conj(p.b) * p.t) / (1.0 - nb);
    const double r = std::abs(ab_t) / (1.0 - nb);
    return std::abs(c) + r;
}

namespace detail {

struct HalfVerdict {
    bool open = false, closure = false, marginal = false;
    double sup = 0.0;
};

inline HalfVerdict psi_criterion(const Point3& p, double eq_tol) {
    HalfVerdict h;
    h.sup = sup_psi_circle(p);
    const bool degenerate = std::abs(p.a * p.b - p.t) <= kDegenerateTol;
    const double nb = std::abs(p.b);
    if (degenerate) {
        h.open = h.sup < 1.0 - eq_tol && nb < 1.0 - eq_tol;
        h.closure = h.sup <= 1.0 + eq_tol && nb <= 1.0 + eq_tol;
        h.marginal = std::abs(h.sup - 1.0) <= eq_tol || std::abs(nb - 1.0) <= eq_tol;
        return h;
    }
    h.open = h.sup < 1.0 - eq_tol;
    // Equivalent polynomial form of sup <= 1, stable as |b| -> 1.
    const double lhs = std::abs(p.a - std::conj(p.b) * p.t) + std::abs(p.a * p.b - p.t);
    const double rhs = 1.0 - nb * nb;
    h.closure = nb <= 1.0 + eq_tol && lhs <= rhs + eq_tol;
    h.marginal = std::abs(h.sup - 1.0) <= eq_tol || (std::abs(lhs - rhs) <= eq_tol && nb > 0.5);
    return h;
}

}  // namespace detail

/// Unitary 2x2 completion [[a, t*beta], [-beta, b]] of a bE point.
inline Matrix bE_witness(const Point3& p) {
    const double beta = std::sqrt(std::max(0.0, 1.0 - std::norm(p.b)));
    Matrix X(2, 2);
    X << p.a, p.t * beta, -beta, p.b;
    return X;
}

inline bool bE_criterion(const Point3& p, double eq_tol) {
    return std::abs(std::abs(p.t) - 1.0) <= eq_tol &&
           std::abs(p.a - std::conj(p.b) * p.t) <= eq_tol && std::abs(p.b) <= 1.0 + eq_tol;
}

inline MembershipVerdict in_tetrablock(const Point3& p, const Tolerances& tol = {}) {
    MembershipVerdict v;
    const auto ab = detail::psi_criterion(p, tol.eq_tol);
    const auto ba = detail::psi_criterion({p.b, p.a, p.t}, tol.eq_tol);
    v.sup_psi_ab = ab.sup;
    v.sup_psi_ba = ba.sup;
    v.in_bE = bE_criterion(p, tol.eq_tol);
    v.in_open = ab.open;
    v.in_closure = ab.closure || v.in_bE;
    v.boundary_marginal = ab.marginal || ba.marginal;
    v.symmetry_consistent =
        (ab.open == ba.open && ab.closure == ba.closure) || ab.marginal || ba.marginal;
    if (v.in_open && !v.in_closure) v.in_closure = true;

    if (v.in_bE) {
        v.witness = bE_witness(p);
    } else if (v.in_closure) {
        // Symmetric completion: off-diagonal entries share sqrt(ab - t).
        const Complex s = std::sqrt(p.a * p.b - p.t);
        Matrix X(2, 2);
        X << p.a, s, s, p.b;
        if (operator_norm(X) <= 1.0 + tol.eq_tol) v.witness = X;
    }
    return v;
}

inline MembershipVerdict in_distinguished_boundary(const Point3& p, const Tolerances& tol = {}) {
    return in_tetrablock(p, tol);
}

inline std::vector<Point3> sample_bE(int count, std::uint64_t seed) {
    if (count < 1) throw PreconditionError("sample_bE: count must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0), ang(0.0, 2.0 * kPi);
    std::vector<Point3> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        const double r = std::sqrt(u01(rng));
        const Complex b = std::polar(r, ang(rng));
        const Complex t = std::polar(1.0, ang(rng));
        out.push_back({std::conj(b) * t, b, t});
    }
    return out;
}

}  // namespace tetrakit
