#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace tetrakit {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

struct Tolerances {
    double eq_tol = 1e-9;
    double psd_tol = 1e-10;
    int grid_points = 512;
    int max_power_iters = 10000;

    void validate() const {
        if (!(eq_tol > 0.0) || !(psd_tol > 0.0))
            throw PreconditionError("tolerances must be positive");
        if (grid_points < 8) throw PreconditionError("grid_points must be at least 8");
        if (max_power_iters < 1) throw PreconditionError("max_power_iters must be positive");
    }
};

/// Orthonormal columns spanning a subspace of C^ambient_dim.
/// A rank-zero subspace is an ambient_dim x 0 matrix.
struct SubspaceBasis {
    Matrix basis;

    Eigen::Index ambient_dim() const { return basis.rows(); }
    Eigen::Index dim() const { return basis.cols(); }
    Matrix projector() const { return basis * basis.adjoint(); }

    static SubspaceBasis empty(Eigen::Index n) { return {Matrix(n, 0)}; }
    static SubspaceBasis full(Eigen::Index n) { return {Matrix::Identity(n, n)}; }
};

inline Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

inline bool all_finite(const Matrix& M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j)
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            if (!std::isfinite(M(i, j).real()) || !std::isfinite(M(i, j).imag())) return false;
    return true;
}

inline void require_square(const Matrix& M, const char* what) {
    if (M.rows() != M.cols())
        throw DimensionError(std::string(what) + ": matrix is " + std::to_string(M.rows()) + "x" +
                             std::to_string(M.cols()) + ", expected square");
}

inline double operator_norm(const Matrix& M) {
    if (M.size() == 0) throw DimensionError("operator_norm: empty matrix");
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

/// Operator norm that treats empty matrices (zero-dimensional spaces) as 0.
inline double norm0(const Matrix& M) { return M.size() == 0 ? 0.0 : operator_norm(M); }

inline double smallest_singular_value(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

inline std::vector<Complex> eigenvalues(const Matrix& M) {
    require_square(M, "eigenvalues");
    if (M.rows() == 0) return {};
    Eigen::ComplexEigenSolver<Matrix> es(M, false);
    std::vector<Complex> out(es.eigenvalues().data(), es.eigenvalues().data() + M.rows());
    return out;
}

inline double spectral_radius(const Matrix& M) {
    require_square(M, "spectral_radius");
    if (M.rows() == 0) throw DimensionError("spectral_radius: empty matrix");
    double r = 0.0;
    for (const auto& l : eigenvalues(M)) r = std::max(r, std::abs(l));
    return r;
}

inline Matrix hermitian_part(const Matrix& M) { return (M + M.adjoint()) / 2.0; }

namespace detail {

inline double lambda_max_rotated(const Matrix& M, double theta) {
    const Complex w = std::polar(1.0, theta);
    Matrix H = (w * M + std::conj(w) * M.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

template <class F>
double golden_max(F&& f, double lo, double hi, int iters = 80) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int k = 0; k < iters && hi - lo > 1e-15; ++k) {
        if (f1 < f2) {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + g * (hi - lo); f2 = f(x2);
        } else {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - g * (hi - lo); f1 = f(x1);
        }
    }
    return std::max(f1, f2);
}

/// Maximizes a 2*pi periodic function: grid scan, then golden-section
/// refinement around the best few local maxima.
template <class F>
double periodic_max(F&& f, int grid, int refine = 4) {
    std::vector<double> v(grid);
    const double h = 2.0 * kPi / grid;
    for (int k = 0; k < grid; ++k) v[k] = f(k * h);
    std::vector<int> peaks;
    for (int k = 0; k < grid; ++k) {
        double prev = v[(k + grid - 1) % grid], next = v[(k + 1) % grid];
        if (v[k] >= prev && v[k] >= next) peaks.push_back(k);
    }
    std::sort(peaks.begin(), peaks.end(), [&](int i, int j) { return v[i] > v[j]; });
    double best = *std::max_element(v.begin(), v.end());
    for (int i = 0; i < std::min<int>(refine, peaks.size()); ++i) {
        double c = peaks[i] * h;
        best = std::max(best, golden_max(f, c - h, c + h));
    }
    return best;
}

}  // namespace detail

inline double numerical_radius(const Matrix& M, const Tolerances& tol = {}) {
    require_square(M, "numerical_radius");
    if (M.rows() == 0) return 0.0;
    return std::max(0.0, detail::periodic_max(
                             [&](double th) { return detail::lambda_max_rotated(M, th); },
                             tol.grid_points));
}

inline double numerical_radius_grid(const Matrix& M, int grid) {
    Tolerances t;
    t.grid_points = grid;
    return numerical_radius(M, t);
}

namespace detail {

inline void require_hermitian(const Matrix& M, const Tolerances& tol, const char* what) {
    require_square(M, what);
    double scale = std::max(1.0, norm0(M));
    if (norm0(M - M.adjoint()) > tol.eq_tol * scale)
        throw PreconditionError(std::string(what) + ": matrix is not Hermitian");
}

}  // namespace detail

inline Matrix psd_sqrt(const Matrix& M, const Tolerances& tol = {}) {
    detail::require_hermitian(M, tol, "psd_sqrt");
    if (M.rows() == 0) return M;
    double scale = std::max(1.0, operator_norm(M));
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(M));
    RealVector ev = es.eigenvalues();
    if (ev(0) < -tol.psd_tol * scale)
        throw NotPsdError("psd_sqrt: eigenvalue " + std::to_string(ev(0)) + " below -psd_tol");
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::sqrt(std::max(0.0, ev(i)));
    return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

/// PSD square root with a rank decision: eigenvalues at or below
/// psd_tol*scale are set to zero and excluded from the returned range.
struct RootWithRange {
    Matrix root;
    SubspaceBasis range;
};

inline RootWithRange psd_sqrt_with_range(const Matrix& M, const Tolerances& tol = {}) {
    detail::require_hermitian(M, tol, "psd_sqrt_with_range");
    const Eigen::Index n = M.rows();
    if (n == 0) return {M, SubspaceBasis::empty(0)};
    double scale = std::max(1.0, operator_norm(M));
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(M));
    RealVector ev = es.eigenvalues();
    if (ev(0) < -tol.psd_tol * scale)
        throw NotPsdError("psd_sqrt: eigenvalue " + std::to_string(ev(0)) + " below -psd_tol");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = n - 1; i >= 0; --i)
        if (ev(i) > tol.psd_tol * scale) keep.push_back(i);
    Matrix basis(n, static_cast<Eigen::Index>(keep.size()));
    RealVector roots(keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) {
        basis.col(c) = es.eigenvectors().col(keep[c]);
        roots(c) = std::sqrt(ev(keep[c]));
    }
    Matrix root = basis * roots.cast<Complex>().asDiagonal() * basis.adjoint();
    return {root, {basis}};
}

inline Matrix commutator(const Matrix& X, const Matrix& Y) {
    require_square(X, "commutator");
    if (X.rows() != Y.rows() || Y.rows() != Y.cols())
        throw DimensionError("commutator: size mismatch");
    return X * Y - Y * X;
}

inline SubspaceBasis orthonormal_range(const Matrix& M, const Tolerances& tol = {}) {
    if (M.rows() == 0 || M.cols() == 0) return SubspaceBasis::empty(M.rows());
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU);
    const auto& s = svd.singularValues();
    const double cut = tol.psd_tol * s(0);
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cut && s(r) > 0.0) ++r;
    return {svd.matrixU().leftCols(r)};
}

/// Orthonormal basis of the kernel, decided by singular values <= cutoff.
inline SubspaceBasis null_space(const Matrix& M, double cutoff) {
    const Eigen::Index n = M.cols();
    if (M.rows() == 0) return SubspaceBasis::full(n);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cutoff) ++r;
    return {svd.matrixV().rightCols(n - r)};
}

inline Matrix compress(const Matrix& M, const SubspaceBasis& S) {
    require_square(M, "compress");
    if (S.ambient_dim() != M.rows())
        throw DimensionError("compress: subspace ambient dimension does not match matrix");
    return S.basis.adjoint() * M * S.basis;
}

using JointEigenvalue = std::vector<Complex>;

inline std::vector<JointEigenvalue> joint_eigenvalues(const std::vector<Matrix>& family,
                                                      const Tolerances& tol = {}) {
    if (family.empty()) return {};
    const Eigen::Index n = family.front().rows();
    double mx = 0.0;
    for (const auto& M : family) {
        require_square(M, "joint_eigenvalues");
        if (M.rows() != n) throw DimensionError("joint_eigenvalues: size mismatch");
        mx = std::max(mx, norm0(M));
    }
    const double scale = (1.0 + mx) * (1.0 + mx);
    for (std::size_t i = 0; i < family.size(); ++i)
        for (std::size_t j = i + 1; j < family.size(); ++j)
            if (norm0(commutator(family[i], family[j])) > tol.eq_tol * scale)
                throw NotCommutingError("joint_eigenvalues: family does not commute");
    if (n == 0) return {};

    std::mt19937_64 rng(0x7e7ab10cULL);
    std::normal_distribution<double> g;
    Matrix C = Matrix::Zero(n, n);
    for (const auto& M : family) C += Complex(g(rng), g(rng)) * M;
    Eigen::ComplexSchur<Matrix> schur(C);
    const Matrix& U = schur.matrixU();

    std::vector<JointEigenvalue> out(n, JointEigenvalue(family.size()));
    for (std::size_t k = 0; k < family.size(); ++k) {
        Matrix Tk = U.adjoint() * family[k] * U;
        for (Eigen::Index i = 0; i < n; ++i) out[i][k] = Tk(i, i);
    }
    std::sort(out.begin(), out.end(), [](const JointEigenvalue& x, const JointEigenvalue& y) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (x[k].real() != y[k].real()) return x[k].real() < y[k].real();
            if (x[k].imag() != y[k].imag()) return x[k].imag() < y[k].imag();
        }
        return false;
    });
    return out;
}

/// Solution of D_left * X * D_right = S with X mapping closure Ran(D_right)
/// into closure Ran(D_left^*).
struct SandwichSolution {
    Matrix coords;          // X in the bases below
    SubspaceBasis out_space;  // orthonormal basis of Ran(D_left^*)
    SubspaceBasis in_space;   // orthonormal basis of Ran(D_right)
    Matrix ambient;         // out_space.basis * coords * in_space.basis^*
    double residual = 0.0;
};

inline Matrix lstsq(const Matrix& A, const Matrix& B) {
    if (A.cols() == 0) return Matrix(0, B.cols());
    if (A.rows() == 0) return Matrix::Zero(A.cols(), B.cols());
    return A.completeOrthogonalDecomposition().solve(B);
}

inline SandwichSolution solve_sandwich(const Matrix& D_left, const Matrix& D_right, const Matrix& S,
                                       const Tolerances& tol = {}) {
    if (D_left.rows() != S.rows() || D_right.cols() != S.cols())
        throw DimensionError("solve_sandwich: size mismatch");
    SandwichSolution sol;
    sol.out_space = orthonormal_range(D_left.adjoint(), tol);
    sol.in_space = orthonormal_range(D_right, tol);
    Matrix L = D_left * sol.out_space.basis;
    Matrix R = sol.in_space.basis.adjoint() * D_right;
    Matrix Y1 = lstsq(L, S);
    sol.coords = lstsq(R.adjoint(), Y1.adjoint()).adjoint();
    sol.ambient = sol.out_space.basis * sol.coords * sol.in_space.basis.adjoint();
    sol.residual = norm0(D_left * sol.ambient * D_right - S);
    if (sol.residual > tol.eq_tol * (1.0 + norm0(S)))
        throw NoSolutionError("solve_sandwich: inconsistent system", sol.residual);
    return sol;
}

/// Closest unitary in the polar sense (U V^* from an SVD).
inline Matrix nearest_unitary(const Matrix& M) {
    if (M.size() == 0) return M;
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

inline double unitarity_defect(const Matrix& U) {
    if (U.size() == 0) return 0.0;
    return std::max(norm0(U.adjoint() * U - identity(U.cols())),
                    norm0(U * U.adjoint() - identity(U.rows())));
}

inline double isometry_defect(const Matrix& V) {
    if (V.cols() == 0) return 0.0;
    return norm0(V.adjoint() * V - identity(V.cols()));
}

}  // namespace tetrakit
