#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "classify.hpp"
#include "matkernel.hpp"

namespace tetrakit {

struct Defect {
    Matrix D;               // ambient n x n
    SubspaceBasis carrier;  // closure of Ran D
};

/// D_T = (I - T*T)^{1/2}, or D_{T*} = (I - TT*)^{1/2} when adjoint.
inline Defect defect(const Matrix& T, bool adjoint, const Tolerances& tol = {}) {
    require_square(T, "defect");
    if (adjoint) return defect(Matrix(T.adjoint()), false, tol);
    const Eigen::Index n = T.rows();
    if (n > 0 && operator_norm(T) > 1.0 + tol.psd_tol)
        throw NotContractionError("defect: operator norm exceeds 1");
    const Matrix sq = identity(n) - T.adjoint() * T;
    auto r = psd_sqrt_with_range(hermitian_part(sq), tol);
    return {r.root, r.range};
}

struct FundamentalPair {
    SubspaceBasis carrier;
    Matrix X1, X2;  // carrier coordinates
    double pencil_nu_max = 0.0;
    bool is_special = false;
    Eigen::Index rank = 0;      // rank of the realified homogeneous system
    bool unique = true;         // rank == 4 dim^2
    ResidualMap residuals;

    Eigen::Index dim() const { return carrier.dim(); }
    Matrix X1_ambient() const { return carrier.basis * X1 * carrier.basis.adjoint(); }
    Matrix X2_ambient() const { return carrier.basis * X2 * carrier.basis.adjoint(); }
};

namespace detail {

inline void push_realified(RealMatrix& M, Eigen::Index col, const Matrix& top, const Matrix& bottom) {
    Eigen::Index r = 0;
    for (const Matrix* P : {&top, &bottom})
        for (Eigen::Index j = 0; j < P->cols(); ++j)
            for (Eigen::Index i = 0; i < P->rows(); ++i) {
                M(r++, col) = (*P)(i, j).real();
                M(r++, col) = (*P)(i, j).imag();
            }
}

/// max over (alpha, beta) on the torus of lambda_max(Re(alpha X1 + beta X2)),
/// which equals sup_{|z|=1} nu(X1 + z X2).
inline double pencil_numerical_radius(const Matrix& X1, const Matrix& X2, int grid = 48) {
    if (X1.rows() == 0) return 0.0;
    auto f = [&](double a, double b) {
        Matrix H = std::polar(1.0, a) * X1 + std::polar(1.0, b) * X2;
        Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(H), Eigen::EigenvaluesOnly);
        return es.eigenvalues()(es.eigenvalues().size() - 1);
    };
    const double h = 2.0 * kPi / grid;
    std::vector<std::pair<double, std::array<double, 2>>> pts;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) pts.push_back({f(i * h, j * h), {i * h, j * h}});
    const std::size_t top = std::min<std::size_t>(4, pts.size());
    std::partial_sort(pts.begin(), pts.begin() + top, pts.end(),
                      [](const auto& u, const auto& v) { return u.first > v.first; });
    double best = pts.front().first;
    for (std::size_t s = 0; s < top; ++s) {
        auto x = pts[s].second;
        double fx = pts[s].first, step = h / 2;
        while (step > 1e-10) {
            bool moved = false;
            for (int d = 0; d < 2; ++d)
                for (double sgn : {1.0, -1.0}) {
                    auto y = x;
                    y[d] += sgn * step;
                    const double fy = f(y[0], y[1]);
                    if (fy > fx) { x = y; fx = fy; moved = true; }
                }
            if (!moved) step /= 2;
        }
        best = std::max(best, fx);
    }
    return std::max(0.0, best);
}

}  // namespace detail

inline Check is_special_pair(const Matrix& G1, const Matrix& G2, const Tolerances& tol = {}) {
    if (G1.rows() != G2.rows() || G1.cols() != G2.cols() || G1.rows() != G1.cols())
        throw DimensionError("is_special_pair: size mismatch");
    Check c;
    const double m = 1.0 + norm0(G1) + norm0(G2);
    const double thr = tol.eq_tol * m * m;
    c.residuals["[G1,G2]"] = norm0(G1 * G2 - G2 * G1);
    c.residuals["G1*G1+G2G2*-G1G1*-G2*G2"] =
        norm0(G1.adjoint() * G1 + G2 * G2.adjoint() - G1 * G1.adjoint() - G2.adjoint() * G2);
    c.ok = c.residuals["[G1,G2]"] <= thr && c.residuals["G1*G1+G2G2*-G1G1*-G2*G2"] <= thr;
    return c;
}

struct PencilCheck {
    bool ok = false;
    double sup = 0.0;
};

/// sup over the circle of ||G1* + z G2||.
inline PencilCheck pencil_contractive(const Matrix& G1, const Matrix& G2, const Tolerances& tol = {}) {
    if (G1.rows() != G2.rows() || G1.cols() != G2.cols())
        throw DimensionError("pencil_contractive: size mismatch");
    PencilCheck p;
    if (G1.size() == 0) { p.ok = true; return p; }
    p.sup = detail::periodic_max(
        [&](double th) { return operator_norm(G1.adjoint() + std::polar(1.0, th) * G2); },
        tol.grid_points);
    p.ok = p.sup <= 1.0 + tol.eq_tol;
    return p;
}

/// The z^0, z^1, z^2 coefficient identities for the product of the pencils
/// G1* + z G2 and G2* + z G1 taken in both orders.
inline Check symbols_commute(const Matrix& G1, const Matrix& G2, const Tolerances& tol = {}) {
    if (G1.rows() != G2.rows() || G1.cols() != G2.cols())
        throw DimensionError("symbols_commute: size mismatch");
    Check c;
    const double m = 1.0 + norm0(G1) + norm0(G2);
    const double thr = tol.eq_tol * m * m;
    const Matrix G1s = G1.adjoint(), G2s = G2.adjoint();
    c.residuals["z0"] = norm0(G1s * G2s - G2s * G1s);
    c.residuals["z1"] = norm0(G1s * G1 + G2 * G2s - G1 * G1s - G2s * G2);
    c.residuals["z2"] = norm0(G1 * G2 - G2 * G1);
    c.ok = c.residuals["z0"] <= thr && c.residuals["z1"] <= thr && c.residuals["z2"] <= thr;
    return c;
}

inline FundamentalPair fundamental_pair(const OperatorTriple& input, bool adjoint,
                                        const Tolerances& tol = {}) {
    input.validate();
    const OperatorTriple x = adjoint ? input.adjoint() : input;
    const auto comm = is_commuting(x, tol);
    if (!comm.ok) throw NotCommutingError("fundamental_pair: triple does not commute");

    const Eigen::Index n = x.dim();
    const Defect d = defect(x.T, false, tol);
    FundamentalPair fp;
    fp.carrier = d.carrier;
    const Eigen::Index k = d.carrier.dim();
    const Matrix Delta = d.carrier.basis.adjoint() * d.D;  // k x n
    const Matrix DeltaT = Delta * x.T;

    // Unknowns (Y1, Y2) with Delta A = Y1 Delta + Y2* Delta T and
    // Delta B = Y2 Delta + Y1* Delta T; conjugate-linear in Y, so realify.
    const Eigen::Index rows = 2 * 2 * k * n, cols = 4 * k * k;
    RealMatrix L(rows, cols);
    RealVector rhs(rows);
    {
        RealMatrix tmp(rows, 1);
        detail::push_realified(tmp, 0, Matrix(Delta * x.A), Matrix(Delta * x.B));
        rhs = tmp.col(0);
    }
    auto apply = [&](const Matrix& Y1, const Matrix& Y2, Matrix& top, Matrix& bot) {
        top = Y1 * Delta + Y2.adjoint() * DeltaT;
        bot = Y2 * Delta + Y1.adjoint() * DeltaT;
    };
    Eigen::Index col = 0;
    for (int which = 0; which < 2; ++which)
        for (int part = 0; part < 2; ++part)
            for (Eigen::Index j = 0; j < k; ++j)
                for (Eigen::Index i = 0; i < k; ++i) {
                    Matrix Y1 = Matrix::Zero(k, k), Y2 = Matrix::Zero(k, k);
                    (which == 0 ? Y1 : Y2)(i, j) = part == 0 ? Complex(1, 0) : Complex(0, 1);
                    Matrix top, bot;
                    apply(Y1, Y2, top, bot);
                    detail::push_realified(L, col++, top, bot);
                }

    fp.X1 = Matrix::Zero(k, k);
    fp.X2 = Matrix::Zero(k, k);
    if (k > 0) {
        Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(L);
        cod.setThreshold(std::max(tol.psd_tol, 1e-12));
        fp.rank = cod.rank();
        fp.unique = fp.rank == cols;
        RealVector u = cod.solve(rhs);
        col = 0;
        for (int which = 0; which < 2; ++which)
            for (int part = 0; part < 2; ++part)
                for (Eigen::Index j = 0; j < k; ++j)
                    for (Eigen::Index i = 0; i < k; ++i) {
                        Matrix& Y = which == 0 ? fp.X1 : fp.X2;
                        if (part == 0) Y(i, j) += u(col++);
                        else Y(i, j) += Complex(0, u(col++));
                    }
        Matrix top, bot;
        apply(fp.X1, fp.X2, top, bot);
        fp.residuals["determining"] =
            std::max(norm0(top - Delta * x.A), norm0(bot - Delta * x.B));
    } else {
        fp.residuals["determining"] = 0.0;
    }

    const double m = 1.0 + x.max_norm();
    const double scale = m * m;
    const Matrix F1 = fp.X1_ambient(), F2 = fp.X2_ambient();
    fp.residuals["sandwich 1"] = norm0(x.A - x.B.adjoint() * x.T - d.D * F1 * d.D);
    fp.residuals["sandwich 2"] = norm0(x.B - x.A.adjoint() * x.T - d.D * F2 * d.D);
    fp.residuals["rank deficiency"] = static_cast<double>(cols - fp.rank);
    if (fp.residuals["sandwich 1"] > tol.eq_tol * scale ||
        fp.residuals["sandwich 2"] > tol.eq_tol * scale ||
        fp.residuals["determining"] > tol.eq_tol * scale)
        throw NotEContractionEvidence("fundamental_pair: sandwich identities fail", fp.residuals);

    fp.pencil_nu_max = detail::pencil_numerical_radius(fp.X1, fp.X2);
    fp.is_special = is_special_pair(fp.X1, fp.X2, tol).ok;
    return fp;
}

struct DouglasSolution {
    Matrix F;               // ambient, supported on closure Ran D*
    Matrix coords;
    SubspaceBasis carrier;
    double nu = 0.0;
    double residual = 0.0;
};

/// Solves Sigma = D F D* for F on closure Ran D*, given DD* >= Re(alpha Sigma)
/// for all unimodular alpha.
inline DouglasSolution solve_quadratic_douglas(const Matrix& D, const Matrix& Sigma,
                                               const Tolerances& tol = {}) {
    require_square(Sigma, "solve_quadratic_douglas");
    if (D.rows() != Sigma.rows()) throw DimensionError("solve_quadratic_douglas: size mismatch");
    const Matrix DD = D * D.adjoint();
    const double scale = std::max(1.0, norm0(DD) + norm0(Sigma));
    for (int k = 0; k < 64; ++k) {
        const Complex a = std::polar(1.0, 2.0 * kPi * k / 64);
        Matrix H = DD - (a * Sigma + std::conj(a) * Sigma.adjoint()) / 2.0;
        if (H.rows() == 0) break;
        Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(H), Eigen::EigenvaluesOnly);
        if (es.eigenvalues()(0) < -tol.psd_tol * scale)
            throw PreconditionError("solve_quadratic_douglas: DD* >= Re(alpha Sigma) fails");
    }
    DouglasSolution out;
    SandwichSolution s = solve_sandwich(D, D.adjoint(), Sigma, tol);
    out.F = s.ambient;
    out.coords = s.coords;
    out.carrier = s.in_space;
    out.residual = s.residual;
    out.nu = numerical_radius(out.F, tol);
    if (out.nu > 1.0 + 10.0 * tol.eq_tol)
        throw InternalConsistencyError("solve_quadratic_douglas: numerical radius exceeds 1");
    return out;
}

}  // namespace tetrakit
