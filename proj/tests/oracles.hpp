#pragma once
// Independent reference computations used only by tests. Each one avoids the
// library routine it is compared against.

#include <tetrakit/tetrakit.hpp>

namespace oracle {

using tetrakit::Complex;
using tetrakit::Matrix;
using tetrakit::kPi;

/// sqrt(lambda_max(M*M)) by power iteration.
inline double norm_power(const Matrix& M, int iters = 5000) {
    if (M.size() == 0) return 0.0;
    const Matrix G = M.adjoint() * M;
    tetrakit::Vector v = tetrakit::Vector::Ones(G.cols()) / std::sqrt(double(G.cols()));
    v(0) += Complex(0.1, 0.2);
    double lam = 0.0;
    for (int k = 0; k < iters; ++k) {
        tetrakit::Vector w = G * v;
        const double n = w.norm();
        if (n == 0.0) return 0.0;
        lam = n;
        v = w / n;
    }
    return std::sqrt(std::abs(v.dot(G * v)));
}

/// Local refinement of a periodic function near the best of n samples,
/// by ternary search on the bracketing interval.
template <class F>
double periodic_max_sampled(F&& f, int n, double* raw = nullptr) {
    double best = -1e300, arg = 0.0;
    const double h = 2.0 * kPi / n;
    for (int k = 0; k < n; ++k) {
        const double v = f(k * h);
        if (v > best) { best = v; arg = k * h; }
    }
    if (raw) *raw = best;
    double lo = arg - h, hi = arg + h;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (f(m1) < f(m2)) lo = m1; else hi = m2;
    }
    return std::max(best, f(0.5 * (lo + hi)));
}

/// max over theta of lambda_max(Re(e^{i theta} M)).
inline double numerical_radius_dense(const Matrix& M, int n = 4096) {
    return periodic_max_sampled(
        [&](double th) {
            const Matrix X = std::polar(1.0, th) * M;
            const Matrix H = (X + X.adjoint()) / 2.0;
            Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
            return es.eigenvalues().maxCoeff();
        },
        n);
}

/// |Psi| sampled on the unit circle.
inline double sup_psi_sampled(const tetrakit::Point3& p, int n = 4096, double* raw = nullptr) {
    return periodic_max_sampled(
        [&](double th) {
            const Complex z = std::polar(1.0, th);
            return std::abs((p.a - z * p.t) / (1.0 - z * p.b));
        },
        n, raw);
}

/// Norm of a 2x2 matrix from trace and determinant of X*X.
inline double norm2x2(const Matrix& X) {
    const Matrix G = X.adjoint() * X;
    const double tr = G.trace().real();
    const double det = std::abs(G.determinant());
    return std::sqrt(0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4.0 * det))));
}

/// min ||[[a, x], [y, b]]|| subject to x y = ab - t, by search over x.
inline double min_completion_norm(const tetrakit::Point3& p) {
    const Complex c = p.a * p.b - p.t;
    auto f = [&](double logr, double phi) {
        Matrix X(2, 2);
        const Complex x = std::polar(std::exp(logr), phi);
        X << p.a, x, c / x, p.b;
        return norm2x2(X);
    };
    if (std::abs(c) < 1e-300) {
        Matrix X(2, 2);
        X << p.a, 0.0, 0.0, p.b;
        return norm2x2(X);
    }
    const double centre = 0.5 * std::log(std::abs(c));
    double bl = centre, bp = 0.0, bv = f(bl, bp);
    for (int i = -60; i <= 60; ++i)
        for (int j = 0; j < 64; ++j) {
            const double l = centre + i * 0.1, ph = 2.0 * kPi * j / 64;
            const double v = f(l, ph);
            if (v < bv) { bv = v; bl = l; bp = ph; }
        }
    double step = 0.1;
    while (step > 1e-12) {
        bool moved = false;
        for (auto [dl, dp] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}) {
            const double v = f(bl + dl * step, bp + dp * step);
            if (v < bv) { bv = v; bl += dl * step; bp += dp * step; moved = true; }
        }
        if (!moved) step /= 2;
    }
    return bv;
}

/// -T + sum_{n>=0} z^{n+1} D_{T*} T*^n D_T on the ambient space.
inline Matrix char_function_series(const Matrix& T, Complex z, int terms) {
    const Eigen::Index n = T.rows();
    const Matrix I = Matrix::Identity(n, n);
    auto root = [](const Matrix& P) {
        Eigen::SelfAdjointEigenSolver<Matrix> es((P + P.adjoint()) / 2.0);
        return Matrix(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                      es.eigenvectors().adjoint());
    };
    const Matrix D = root(I - T.adjoint() * T), Ds = root(I - T * T.adjoint());
    Matrix out = -T;
    Matrix P = I;
    Complex zp = z;
    for (int k = 0; k < terms; ++k) {
        out += zp * Ds * P * D;
        P = P * T.adjoint();
        zp *= z;
    }
    return out;
}

/// Fundamental operator of a scalar point with |t| < 1.
inline Complex scalar_F1(Complex a, Complex b, Complex t) {
    return (a - std::conj(b) * t) / (1.0 - std::norm(t));
}

/// Lower block-bidiagonal truncation of the pencil X0 + z X1 at order N.
inline Matrix pencil_toeplitz(const Matrix& X0, const Matrix& X1, int N) {
    const Eigen::Index d = X0.rows();
    Matrix M = Matrix::Zero((N + 1) * d, (N + 1) * d);
    for (int j = 0; j <= N; ++j) {
        M.block(j * d, j * d, d, d) = X0;
        if (j < N) M.block((j + 1) * d, j * d, d, d) = X1;
    }
    return M;
}

/// Random unitary from the QR factor of a Gaussian matrix.
inline Matrix random_unitary(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) G(i, j) = Complex(g(rng), g(rng));
    Eigen::HouseholderQR<Matrix> qr(G);
    return qr.householderQ() * Matrix::Identity(n, n);
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix G(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) G(i, j) = Complex(g(rng), g(rng));
    return G;
}

inline Matrix diag(std::initializer_list<Complex> v) {
    Matrix M = Matrix::Zero(v.size(), v.size());
    Eigen::Index i = 0;
    for (Complex x : v) { M(i, i) = x; ++i; }
    return M;
}

inline Matrix mat2(Complex a, Complex b, Complex c, Complex d) {
    Matrix M(2, 2);
    M << a, b, c, d;
    return M;
}

inline Matrix scalar(Complex a) { return Matrix::Constant(1, 1, a); }

}  // namespace oracle
