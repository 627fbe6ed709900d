#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "classify.hpp"
#include "models.hpp"

namespace tetrakit {

enum class GenClass { NormalEContraction, PureEContraction, PcUnitary, StrictEUnitary, SpecialScalarDataSet, NonExample };

inline const char* to_string(GenClass c) {
    switch (c) {
        case GenClass::NormalEContraction: return "NormalEContraction";
        case GenClass::PureEContraction: return "PureEContraction";
        case GenClass::PcUnitary: return "PcUnitary";
        case GenClass::StrictEUnitary: return "StrictEUnitary";
        case GenClass::SpecialScalarDataSet: return "SpecialScalarDataSet";
        case GenClass::NonExample: return "NonExample";
    }
    return "?";
}

inline GenClass gen_class_from_string(const std::string& s) {
    for (GenClass c : {GenClass::NormalEContraction, GenClass::PureEContraction, GenClass::PcUnitary,
                       GenClass::StrictEUnitary, GenClass::SpecialScalarDataSet, GenClass::NonExample})
        if (s == to_string(c)) return c;
    throw InputError("unknown generator class '" + s + "'");
}

struct GenConfig {
    std::uint64_t seed = 0;
    int dim = 2;
    GenClass class_tag = GenClass::NormalEContraction;
};

using Rng = std::mt19937_64;

namespace detail {

inline Complex cgauss(Rng& rng) {
    std::normal_distribution<double> g;
    const double re = g(rng), im = g(rng);
    return {re, im};
}

inline Matrix gaussian_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix M(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) M(i, j) = cgauss(rng);
    return M;
}

inline double uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return u(rng);
}

inline Complex unit_phase(Rng& rng) { return std::polar(1.0, uniform(rng, 0.0, 2.0 * kPi)); }

inline void check_dim(int dim) {
    if (dim < 1) throw PreconditionError("generator: dim must be at least 1");
}

}  // namespace detail

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of R's diagonal moved into Q.
inline Matrix haar_unitary(Eigen::Index n, Rng& rng) {
    if (n == 0) return Matrix(0, 0);
    Matrix G = detail::gaussian_matrix(n, n, rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * identity(n);
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex d = R(i, i);
        if (std::abs(d) > 0) Q.col(i) *= d / std::abs(d);
    }
    return Q;
}

/// 2x2 matrix with operator norm exactly s.
inline Matrix random_contraction_2x2(double s, Rng& rng) {
    Matrix X = detail::gaussian_matrix(2, 2, rng);
    return X * (s / operator_norm(X));
}

inline Point3 pushforward(const Matrix& X) {
    return {X(0, 0), X(1, 1), X(0, 0) * X(1, 1) - X(0, 1) * X(1, 0)};
}

inline OperatorTriple diagonal_triple(const std::vector<Point3>& pts) {
    const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
    OperatorTriple x{Matrix::Zero(n, n), Matrix::Zero(n, n), Matrix::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        x.A(i, i) = pts[i].a;
        x.B(i, i) = pts[i].b;
        x.T(i, i) = pts[i].t;
    }
    return x;
}

namespace detail {

inline std::vector<Point3> tetrablock_points(int count, double smax, Rng& rng) {
    std::vector<Point3> pts;
    for (int k = 0; k < count; ++k) pts.push_back(pushforward(random_contraction_2x2(uniform(rng, 0.0, smax), rng)));
    return pts;
}

}  // namespace detail

inline OperatorTriple gen_normal_e_contraction(const GenConfig& cfg) {
    detail::check_dim(cfg.dim);
    Rng rng(cfg.seed);
    const auto pts = detail::tetrablock_points(cfg.dim, 0.95, rng);
    return diagonal_triple(pts).conjugated(haar_unitary(cfg.dim, rng));
}

/// Commuting normal pair with |g1_j| + |g2_j| <= bound in a common eigenbasis.
inline std::pair<Matrix, Matrix> gen_normal_pencil_pair(Eigen::Index k, double bound, Rng& rng) {
    Matrix G1 = Matrix::Zero(k, k), G2 = Matrix::Zero(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double total = detail::uniform(rng, 0.0, bound);
        const double split = detail::uniform(rng, 0.0, 1.0);
        G1(j, j) = std::polar(total * split, detail::uniform(rng, 0.0, 2.0 * kPi));
        G2(j, j) = std::polar(total * (1.0 - split), detail::uniform(rng, 0.0, 2.0 * kPi));
    }
    const Matrix U = haar_unitary(k, rng);
    return {U * G1 * U.adjoint(), U * G2 * U.adjoint()};
}

/// Compression of the pencil lift (M_{G1*+zG2}, M_{G2*+zG1}, M_z) to the first
/// m Fourier modes, a co-invariant subspace.
inline OperatorTriple truncated_pencil_model(const Matrix& G1, const Matrix& G2, int m) {
    const Eigen::Index k = G1.rows(), n = m * k;
    OperatorTriple x{Matrix::Zero(n, n), Matrix::Zero(n, n), Matrix::Zero(n, n)};
    for (int j = 0; j < m; ++j) {
        x.A.block(j * k, j * k, k, k) = G1.adjoint();
        x.B.block(j * k, j * k, k, k) = G2.adjoint();
        if (j + 1 < m) {
            x.A.block((j + 1) * k, j * k, k, k) = G2;
            x.B.block((j + 1) * k, j * k, k, k) = G1;
            x.T.block((j + 1) * k, j * k, k, k) = identity(k);
        }
    }
    return x;
}

/// Even seeds: restriction of a normal tetrablock contraction with |t| <= 0.9
/// to a joint invariant subspace. Odd seeds: a non-normal truncated pencil model.
inline OperatorTriple gen_pure_e_contraction(const GenConfig& cfg) {
    detail::check_dim(cfg.dim);
    Rng rng(cfg.seed);
    if (cfg.seed % 2 == 1) {
        const int k = (cfg.dim % 2 == 0 && cfg.dim >= 4) ? 2 : 1;
        const int m = cfg.dim / k;
        auto [G1, G2] = gen_normal_pencil_pair(k, 0.95, rng);
        return truncated_pencil_model(G1, G2, m).conjugated(haar_unitary(cfg.dim, rng));
    }
    for (int attempt = 0; attempt < 100; ++attempt) {
        const auto pts = detail::tetrablock_points(2 * cfg.dim, 0.94, rng);
        const OperatorTriple big = diagonal_triple(pts).conjugated(haar_unitary(2 * cfg.dim, rng));
        Eigen::ComplexSchur<Matrix> schur(big.T);
        const SubspaceBasis lead{schur.matrixU().leftCols(cfg.dim)};
        OperatorTriple x = big.compressed(lead);
        if (spectral_radius(x.T) < 1.0) return x;
    }
    throw Error("gen_pure_e_contraction: resampling cap exceeded");
}

/// (S*W, S, W) with W unitary and S in the commutant of W, ||S|| <= 2.
inline OperatorTriple gen_pc_unitary(const GenConfig& cfg) {
    detail::check_dim(cfg.dim);
    Rng rng(cfg.seed);
    const Eigen::Index n = cfg.dim;
    std::vector<Eigen::Index> sizes;
    for (Eigen::Index left = n; left > 0;) {
        const Eigen::Index s = 1 + static_cast<Eigen::Index>(detail::uniform(rng, 0.0, 1.0) * std::min<Eigen::Index>(left, 3));
        sizes.push_back(std::min(s, left));
        left -= sizes.back();
    }
    Matrix W = Matrix::Zero(n, n), S = Matrix::Zero(n, n);
    Eigen::Index off = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        const Eigen::Index s = sizes[b];
        W.block(off, off, s, s) = detail::unit_phase(rng) * identity(s);
        S.block(off, off, s, s) = detail::gaussian_matrix(s, s, rng);
        off += s;
    }
    S *= detail::uniform(rng, 0.1, 2.0) / operator_norm(S);
    const Matrix U = haar_unitary(n, rng);
    W = U * W * U.adjoint();
    S = U * S * U.adjoint();
    return {S.adjoint() * W, S, W};
}

/// (S*W, S, W) with W unitary and S a normal contraction commuting with W.
inline OperatorTriple gen_strict_e_unitary(const GenConfig& cfg) {
    detail::check_dim(cfg.dim);
    Rng rng(cfg.seed);
    const Eigen::Index n = cfg.dim;
    Matrix W = Matrix::Zero(n, n), S = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        W(i, i) = detail::unit_phase(rng);
        S(i, i) = std::polar(std::sqrt(detail::uniform(rng, 0.0, 1.0)), detail::uniform(rng, 0.0, 2.0 * kPi));
    }
    const Matrix U = haar_unitary(n, rng);
    W = U * W * U.adjoint();
    S = U * S * U.adjoint();
    return {S.adjoint() * W, S, W};
}

/// Negative controls: seed % 3 selects a non-commuting triple, a commuting
/// triple with ||A|| = 1.2, or a normal triple with the planted joint
/// eigenvalue (0.99, 0.99, -0.99). dim = 1 skips the non-commuting kind.
inline OperatorTriple gen_non_example(const GenConfig& cfg) {
    detail::check_dim(cfg.dim);
    Rng rng(cfg.seed);
    int kind = static_cast<int>(cfg.seed % 3);
    if (cfg.dim == 1 && kind == 0) kind = 1;
    const Eigen::Index n = cfg.dim;
    const Matrix U = haar_unitary(n, rng);
    if (kind == 0) {
        Matrix A = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i + 1 < n; ++i) A(i, i + 1) = 0.5;
        return OperatorTriple{A, A.adjoint(), 0.5 * identity(n)}.conjugated(U);
    }
    auto pts = detail::tetrablock_points(cfg.dim, 0.95, rng);
    if (kind == 1) {
        OperatorTriple x = diagonal_triple(pts);
        const double na = norm0(x.A);
        if (na < 1e-3) x.A = identity(n); else x.A /= na;
        x.A *= 1.2;
        return x.conjugated(U);
    }
    pts[0] = {0.99, 0.99, -0.99};
    return diagonal_triple(pts).conjugated(U);
}

inline Complex blaschke(const std::vector<Complex>& zeros, Complex unimodular, Complex z) {
    Complex v = unimodular;
    for (const Complex a : zeros) v *= (z - a) / (1.0 - std::conj(a) * z);
    return v;
}

struct ScalarSpecialParams {
    Complex g1, g2, unimodular;
    std::vector<Complex> zeros;
};

inline ScalarSpecialParams gen_scalar_special_params(const GenConfig& cfg) {
    detail::check_dim(cfg.dim);
    Rng rng(cfg.seed);
    ScalarSpecialParams s;
    const double total = detail::uniform(rng, 0.0, 0.95);
    const double split = detail::uniform(rng, 0.0, 1.0);
    s.g1 = std::polar(total * split, detail::uniform(rng, 0.0, 2.0 * kPi));
    s.g2 = std::polar(total * (1.0 - split), detail::uniform(rng, 0.0, 2.0 * kPi));
    s.unimodular = detail::unit_phase(rng);
    for (int k = 0; k < cfg.dim; ++k)
        s.zeros.push_back(std::polar(std::sqrt(detail::uniform(rng, 0.0, 1.0)) * 0.6,
                                     detail::uniform(rng, 0.0, 2.0 * kPi)));
    return s;
}

/// Scalar data set: Theta a Blaschke product with dim zeros of modulus <= 0.6,
/// (G1, G2) = (g1, g2), psi(zeta) = conj(g2) + g1 zeta on the boundary grid.
inline TetrablockDataSet scalar_special_dataset(const ScalarSpecialParams& s, int interior_grid = 16,
                                                int fourier_modes = 32) {
    TetrablockDataSet d;
    d.dim_in = d.dim_out = 1;
    for (const Complex z : sample_points(interior_grid, 2 * fourier_modes))
        d.theta_samples.push_back({z, Matrix::Constant(1, 1, blaschke(s.zeros, s.unimodular, z))});
    for (int k = 0; k < 2 * fourier_modes; ++k) {
        const Complex z = std::polar(1.0, 2.0 * kPi * k / (2 * fourier_modes));
        d.psi_samples.push_back({z, Matrix::Constant(1, 1, std::conj(s.g2) + s.g1 * z)});
    }
    d.G1 = Matrix::Constant(1, 1, s.g1);
    d.G2 = Matrix::Constant(1, 1, s.g2);
    d.residual = ResidualTriple::empty();
    d.pure_flag = std::abs(d.theta_samples.front().value(0, 0)) < 1.0;
    return d;
}

inline TetrablockDataSet gen_scalar_special_dataset(const GenConfig& cfg, int interior_grid = 16,
                                                    int fourier_modes = 32) {
    return scalar_special_dataset(gen_scalar_special_params(cfg), interior_grid, fourier_modes);
}

inline OperatorTriple gen_triple(const GenConfig& cfg) {
    switch (cfg.class_tag) {
        case GenClass::NormalEContraction: return gen_normal_e_contraction(cfg);
        case GenClass::PureEContraction: return gen_pure_e_contraction(cfg);
        case GenClass::PcUnitary: return gen_pc_unitary(cfg);
        case GenClass::StrictEUnitary: return gen_strict_e_unitary(cfg);
        case GenClass::NonExample: return gen_non_example(cfg);
        case GenClass::SpecialScalarDataSet: break;
    }
    throw PreconditionError("gen_triple: class produces a data set, not a triple");
}

/// The nilpotent pair 0.3 [[0,1],[0,0]], 0.3 [[0,0],[1,0]] padded to size k,
/// which fails both commutativity conditions.
inline std::pair<Matrix, Matrix> noncommuting_pair(Eigen::Index k, Rng& rng) {
    Matrix G1 = Matrix::Zero(k, k), G2 = Matrix::Zero(k, k);
    G1(0, 1) = 0.3;
    G2(1, 0) = 0.3;
    const Matrix U = haar_unitary(k, rng);
    return {U * G1 * U.adjoint(), U * G2 * U.adjoint()};
}

}  // namespace tetrakit
