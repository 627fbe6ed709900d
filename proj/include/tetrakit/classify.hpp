#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "matkernel.hpp"

namespace tetrakit {

struct OperatorTriple {
    Matrix A, B, T;

    Eigen::Index dim() const { return T.rows(); }

    void validate() const {
        const Eigen::Index n = T.rows();
        for (const Matrix* M : {&A, &B, &T}) {
            if (M->rows() != M->cols()) throw DimensionError("triple: matrices must be square");
            if (M->rows() != n) throw DimensionError("triple: matrices must have equal size");
            if (!all_finite(*M)) throw PreconditionError("triple: non-finite entry");
        }
    }

    double max_norm() const { return std::max({norm0(A), norm0(B), norm0(T)}); }

    OperatorTriple adjoint() const { return {A.adjoint(), B.adjoint(), T.adjoint()}; }
    OperatorTriple swapped() const { return {B, A, T}; }
    /// (U A U*, U B U*, U T U*)
    OperatorTriple conjugated(const Matrix& U) const {
        return {U * A * U.adjoint(), U * B * U.adjoint(), U * T * U.adjoint()};
    }
    OperatorTriple compressed(const SubspaceBasis& S) const {
        return {compress(A, S), compress(B, S), compress(T, S)};
    }
};

/// Boolean verdict with the residuals it was decided on.
struct Check {
    bool ok = false;
    ResidualMap residuals;
};

enum class ContractionCertificate { CertifiedNot, PassedNecessary };

inline const char* to_string(ContractionCertificate c) {
    return c == ContractionCertificate::CertifiedNot ? "CertifiedNot" : "PassedNecessary";
}

struct ClassificationReport {
    bool commuting = false;
    bool e_unitary = false;
    bool e_isometry = false;
    bool pc_isometry = false;
    bool pc_unitary = false;
    std::optional<bool> semi_strict;  // not applicable to raw finite triples
    ContractionCertificate contraction_certificate = ContractionCertificate::CertifiedNot;
    std::vector<std::string> failed_checks;
    ResidualMap residuals;
};

namespace detail {

inline double commute_threshold(const OperatorTriple& x, const Tolerances& tol) {
    return tol.eq_tol * (1.0 + x.max_norm());
}
inline double identity_threshold(const OperatorTriple& x, const Tolerances& tol) {
    const double m = 1.0 + x.max_norm();
    return tol.eq_tol * m * m;
}

}  // namespace detail

inline Check is_commuting(const OperatorTriple& x, const Tolerances& tol = {}) {
    x.validate();
    Check c;
    c.residuals["[A,B]"] = norm0(commutator(x.A, x.B));
    c.residuals["[A,T]"] = norm0(commutator(x.A, x.T));
    c.residuals["[B,T]"] = norm0(commutator(x.B, x.T));
    const double thr = detail::commute_threshold(x, tol);
    c.ok = c.residuals["[A,B]"] <= thr && c.residuals["[A,T]"] <= thr && c.residuals["[B,T]"] <= thr;
    return c;
}

struct IsometryCheck {
    bool e_isometry = false;
    bool e_unitary = false;
    bool criteria_agree = true;  // (A=B*T, ||B||<=1) vs (B=A*T, ||A||<=1)
    ResidualMap residuals;
};

inline IsometryCheck check_e_isometry(const OperatorTriple& x, const Tolerances& tol = {}) {
    x.validate();
    IsometryCheck r;
    const Eigen::Index n = x.dim();
    const auto comm = is_commuting(x, tol);
    r.residuals = comm.residuals;
    const double thr = detail::identity_threshold(x, tol);
    const double a_bt = norm0(x.A - x.B.adjoint() * x.T);
    const double b_at = norm0(x.B - x.A.adjoint() * x.T);
    const double iso = norm0(x.T.adjoint() * x.T - identity(n));
    const double coiso = norm0(x.T * x.T.adjoint() - identity(n));
    const double nA = norm0(x.A), nB = norm0(x.B);
    r.residuals["A-B*T"] = a_bt;
    r.residuals["B-A*T"] = b_at;
    r.residuals["T*T-I"] = iso;
    r.residuals["TT*-I"] = coiso;
    const bool iii = comm.ok && a_bt <= thr && nB <= 1.0 + tol.eq_tol && iso <= thr;
    const bool iv = comm.ok && b_at <= thr && nA <= 1.0 + tol.eq_tol && iso <= thr;
    r.e_isometry = iii;
    r.e_unitary = iii && coiso <= thr;
    r.criteria_agree = iii == iv;
    return r;
}

struct PcCheck {
    bool pc_isometry = false;
    bool pc_unitary = false;
    bool formulations_agree = true;  // A = B*T vs B = A*T
    bool pc1_identities = true;      // A*A = BB*, AA* = B*B when pc_unitary
    ResidualMap residuals;
};

inline PcCheck check_pc(const OperatorTriple& x, const Tolerances& tol = {}) {
    x.validate();
    PcCheck r;
    const Eigen::Index n = x.dim();
    const double cthr = detail::commute_threshold(x, tol);
    const double thr = detail::identity_threshold(x, tol);
    const double at = norm0(commutator(x.A, x.T));
    const double bt = norm0(commutator(x.B, x.T));
    const double a_bt = norm0(x.A - x.B.adjoint() * x.T);
    const double b_at = norm0(x.B - x.A.adjoint() * x.T);
    const double iso = norm0(x.T.adjoint() * x.T - identity(n));
    const double coiso = norm0(x.T * x.T.adjoint() - identity(n));
    r.residuals = {{"[A,T]", at}, {"[B,T]", bt}, {"A-B*T", a_bt},
                   {"B-A*T", b_at}, {"T*T-I", iso}, {"TT*-I", coiso}};
    r.pc_isometry = iso <= thr && at <= cthr && bt <= cthr && a_bt <= thr;
    const bool second = iso <= thr && at <= cthr && bt <= cthr && b_at <= thr;
    r.formulations_agree = r.pc_isometry == second;
    r.pc_unitary = r.pc_isometry && coiso <= thr;
    if (r.pc_unitary) {
        const double s1 = norm0(x.A.adjoint() * x.A - x.B * x.B.adjoint());
        const double s2 = norm0(x.A * x.A.adjoint() - x.B.adjoint() * x.B);
        r.residuals["A*A-BB*"] = s1;
        r.residuals["AA*-B*B"] = s2;
        r.pc1_identities = s1 <= 10 * thr && s2 <= 10 * thr;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Necessary-condition certifier for tetrablock contractions.

struct CertifyOptions {
    int mc_samples = 32;
    std::uint64_t seed = 0;
    int bE_samples = 4096;
};

namespace detail {

/// Monomials a^i b^j t^k of total degree <= 3, in a fixed order.
inline const std::vector<std::array<int, 3>>& monomials3() {
    static const std::vector<std::array<int, 3>> m = [] {
        std::vector<std::array<int, 3>> v;
        for (int d = 0; d <= 3; ++d)
            for (int i = d; i >= 0; --i)
                for (int j = d - i; j >= 0; --j) v.push_back({i, j, d - i - j});
        return v;
    }();
    return m;
}

inline Complex eval_poly(const std::vector<Complex>& c, const Point3& p) {
    const auto& mons = monomials3();
    Complex pa[4] = {1.0, p.a, p.a * p.a, p.a * p.a * p.a};
    Complex pb[4] = {1.0, p.b, p.b * p.b, p.b * p.b * p.b};
    Complex pt[4] = {1.0, p.t, p.t * p.t, p.t * p.t * p.t};
    Complex s = 0.0;
    for (std::size_t k = 0; k < mons.size(); ++k)
        s += c[k] * pa[mons[k][0]] * pb[mons[k][1]] * pt[mons[k][2]];
    return s;
}

inline Point3 bE_from_params(double x, double y, double psi) {
    Complex b(x, y);
    if (std::abs(b) > 1.0) b /= std::abs(b);
    const Complex t = std::polar(1.0, psi);
    return {std::conj(b) * t, b, t};
}

/// Sampled supremum of |p| over bE: seeded samples, then pattern search from
/// the best starts. Extra points known to lie in the closure join the pool.
inline double bE_poly_sup(const std::vector<Complex>& c, const std::vector<Point3>& samples,
                          const std::vector<Point3>& extra) {
    std::vector<std::pair<double, std::array<double, 3>>> starts;
    starts.reserve(samples.size());
    for (const auto& p : samples)
        starts.push_back({std::abs(eval_poly(c, p)), {p.b.real(), p.b.imag(), std::arg(p.t)}});
    double best = 0.0;
    for (const auto& p : extra) best = std::max(best, std::abs(eval_poly(c, p)));
    const std::size_t top = std::min<std::size_t>(8, starts.size());
    std::partial_sort(starts.begin(), starts.begin() + top, starts.end(),
                      [](const auto& u, const auto& v) { return u.first > v.first; });
    for (std::size_t s = 0; s < top; ++s) {
        auto x = starts[s].second;
        double fx = starts[s].first;
        double step = 0.05;
        while (step > 1e-9) {
            bool moved = false;
            for (int d = 0; d < 3; ++d)
                for (double sgn : {1.0, -1.0}) {
                    auto y = x;
                    y[d] += sgn * step;
                    const double fy = std::abs(eval_poly(c, bE_from_params(y[0], y[1], y[2])));
                    if (fy > fx) { x = y; fx = fy; moved = true; }
                }
            if (!moved) step /= 2.0;
        }
        best = std::max(best, fx);
    }
    for (const auto& s : starts) best = std::max(best, s.first);
    return best;
}

inline Matrix matrix_power(const Matrix& M, int k) {
    Matrix R = identity(M.rows());
    for (int i = 0; i < k; ++i) R = R * M;
    return R;
}

/// Largest excess of ||(X - z T)(I - z Y)^{-1}|| over 1 on the unit circle,
/// allowing eps/sigma_min for the conditioning of the resolvent. Near-singular
/// points are skipped and the circles of radius 0.99 and 0.9 are added.
inline double psi_operator_excess(const Matrix& X, const Matrix& Y, const Matrix& T, int grid,
                                  double eps, bool& skipped) {
    const Eigen::Index n = T.rows();
    double sup = -1e300;
    skipped = false;
    auto eval_circle = [&](double rho, bool allow_skip) {
        for (int k = 0; k < grid; ++k) {
            const Complex z = std::polar(rho, 2.0 * kPi * k / grid);
            Matrix M = identity(n) - z * Y;
            const double smin = smallest_singular_value(M);
            if (smin < 1e-6 && allow_skip) { skipped = true; continue; }
            Matrix P = (X - z * T) * M.inverse();
            sup = std::max(sup, norm0(P) - 1.0 - eps / std::max(smin, 1e-300));
        }
    };
    eval_circle(1.0, true);
    if (skipped) {
        eval_circle(0.99, false);
        eval_circle(0.9, false);
    }
    return sup;
}

}  // namespace detail

struct CertifyResult {
    ContractionCertificate certificate = ContractionCertificate::CertifiedNot;
    std::vector<std::string> failed_checks;
    ResidualMap residuals;
};

inline CertifyResult certify_e_contraction(const OperatorTriple& x, const Tolerances& tol = {},
                                           const CertifyOptions& opt = {}) {
    x.validate();
    CertifyResult r;
    const Eigen::Index n = x.dim();
    const double eps = tol.eq_tol;
    auto fail = [&](const std::string& name) { r.failed_checks.push_back(name); };

    // (a) commutativity
    const auto comm = is_commuting(x, tol);
    for (const auto& [k, v] : comm.residuals) r.residuals["commute " + k] = v;
    if (!comm.ok) fail("commuting");

    // (b) norm bounds
    const double nA = norm0(x.A), nB = norm0(x.B), nT = norm0(x.T);
    r.residuals["norm A excess"] = nA - 1.0;
    r.residuals["norm B excess"] = nB - 1.0;
    r.residuals["norm T excess"] = nT - 1.0;
    if (nA > 1.0 + eps || nB > 1.0 + eps || nT > 1.0 + eps) fail("norm_bound");

    if (!r.failed_checks.empty()) return r;

    // (c) operator Psi grid in both variants
    bool skip_ab = false, skip_ba = false;
    const double s_ab = detail::psi_operator_excess(x.A, x.B, x.T, tol.grid_points, eps, skip_ab);
    const double s_ba = detail::psi_operator_excess(x.B, x.A, x.T, tol.grid_points, eps, skip_ba);
    r.residuals["psi excess (A,B)"] = s_ab;
    r.residuals["psi excess (B,A)"] = s_ba;
    if (s_ab > eps || s_ba > eps) fail("psi_operator");

    // (d) joint spectrum in the closure
    std::vector<Point3> spectrum_points;
    double worst_sup = 0.0;
    bool spectrum_ok = true;
    for (const auto& l : joint_eigenvalues({x.A, x.B, x.T}, tol)) {
        Point3 p{l[0], l[1], l[2]};
        const auto v = in_tetrablock(p, tol);
        if (!v.in_closure) spectrum_ok = false; else spectrum_points.push_back(p);
        worst_sup = std::max(worst_sup, std::min(v.sup_psi_ab, 1e300));
    }
    r.residuals["joint spectrum sup psi"] = worst_sup;
    if (!spectrum_ok) fail("joint_spectrum");

    // (e) randomized von Neumann inequality for degree <= 3 polynomials
    static const std::vector<Point3> bE_pool = sample_bE(4096, 0x5eedb0e5ULL);
    std::vector<Point3> pool(bE_pool.begin(),
                             bE_pool.begin() + std::min<int>(opt.bE_samples, bE_pool.size()));
    const auto& mons = detail::monomials3();
    std::vector<Matrix> pw_a(4), pw_b(4), pw_t(4);
    for (int k = 0; k < 4; ++k) {
        pw_a[k] = detail::matrix_power(x.A, k);
        pw_b[k] = detail::matrix_power(x.B, k);
        pw_t[k] = detail::matrix_power(x.T, k);
    }
    std::vector<Matrix> mon_ops;
    for (const auto& m : mons) mon_ops.push_back(pw_a[m[0]] * pw_b[m[1]] * pw_t[m[2]]);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> g;
    double worst = -1e300;
    for (int s = 0; s < opt.mc_samples; ++s) {
        std::vector<Complex> c(mons.size());
        double mass = 0.0;
        for (auto& ck : c) { ck = Complex(g(rng), g(rng)); mass += std::abs(ck); }
        Matrix P = Matrix::Zero(n, n);
        for (std::size_t k = 0; k < mons.size(); ++k) P += c[k] * mon_ops[k];
        const double lhs = norm0(P);
        const double rhs = detail::bE_poly_sup(c, pool, spectrum_points);
        worst = std::max(worst, (lhs - rhs) / mass);
        if (lhs > rhs + 10.0 * eps * mass) {
            fail("von_neumann");
            break;
        }
    }
    r.residuals["von Neumann excess per mass"] = worst;

    r.certificate = r.failed_checks.empty() ? ContractionCertificate::PassedNecessary
                                            : ContractionCertificate::CertifiedNot;
    return r;
}

// ---------------------------------------------------------------------------

struct DecompositionResult {
    SubspaceBasis H_u, H_cnu;
    OperatorTriple unitary_part, cnu_part;
    ResidualMap residuals;
};

inline DecompositionResult canonical_decomposition(const OperatorTriple& x,
                                                   const Tolerances& tol = {}) {
    x.validate();
    const Eigen::Index n = x.dim();
    DecompositionResult d;
    if (n == 0) {
        d.H_u = d.H_cnu = SubspaceBasis::empty(0);
        d.unitary_part = d.cnu_part = x;
        return d;
    }
    Matrix stacked(2 * n * n, n);
    Matrix Tk = identity(n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        Tk = Tk * x.T;
        stacked.middleRows(2 * n * (k - 1), n) = identity(n) - Tk.adjoint() * Tk;
        stacked.middleRows(2 * n * (k - 1) + n, n) = identity(n) - Tk * Tk.adjoint();
    }
    const double scale = std::max(1.0, norm0(x.T));
    d.H_u = null_space(stacked, tol.eq_tol * std::sqrt(2.0 * n) * scale);
    // Complement via the kernel of the projector.
    d.H_cnu = null_space(d.H_u.basis.adjoint(), 0.5);
    d.unitary_part = x.compressed(d.H_u);
    d.cnu_part = x.compressed(d.H_cnu);

    const Matrix Pu = d.H_u.projector();
    const Matrix Pc = identity(n) - Pu;
    auto leak = [&](const Matrix& X) {
        return std::max(norm0(Pc * X * Pu), norm0(Pu * X * Pc));
    };
    d.residuals["reduce A"] = leak(x.A);
    d.residuals["reduce B"] = leak(x.B);
    d.residuals["reduce T"] = leak(x.T);
    d.residuals["T|H_u unitary"] = unitarity_defect(d.unitary_part.T);
    return d;
}

inline ClassificationReport classify(const OperatorTriple& x, const Tolerances& tol = {},
                                     const CertifyOptions& opt = {}) {
    ClassificationReport rep;
    const auto comm = is_commuting(x, tol);
    const auto iso = check_e_isometry(x, tol);
    const auto pc = check_pc(x, tol);
    const auto cert = certify_e_contraction(x, tol, opt);
    rep.commuting = comm.ok;
    rep.e_isometry = iso.e_isometry;
    rep.e_unitary = iso.e_unitary;
    rep.pc_isometry = pc.pc_isometry;
    rep.pc_unitary = pc.pc_unitary;
    rep.contraction_certificate = cert.certificate;
    rep.failed_checks = cert.failed_checks;
    for (const auto& [k, v] : iso.residuals) rep.residuals["isometry " + k] = v;
    for (const auto& [k, v] : pc.residuals) rep.residuals["pc " + k] = v;
    for (const auto& [k, v] : cert.residuals) rep.residuals["certify " + k] = v;
    rep.residuals["isometry criteria agree"] = iso.criteria_agree ? 1.0 : 0.0;
    rep.residuals["pc formulations agree"] = pc.formulations_agree ? 1.0 : 0.0;
    return rep;
}

}  // namespace tetrakit
