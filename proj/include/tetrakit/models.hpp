#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "classify.hpp"
#include "fundops.hpp"
#include "matkernel.hpp"

namespace tetrakit {

// ---------------------------------------------------------------------------
// Q_{T*} and the canonical tetrablock unitary

struct QResult {
    Matrix Q;
    SubspaceBasis carrier;
    int iterations = 0;
    bool converged = true;
    double last_change = 0.0;
    std::string warning;
};

/// Q^2 = lim T^n T*^n, by repeated squaring of T.
inline QResult compute_Q(const Matrix& T, const Tolerances& tol = {}) {
    require_square(T, "compute_Q");
    const Eigen::Index n = T.rows();
    QResult q;
    if (n == 0) { q.Q = T; q.carrier = SubspaceBasis::empty(0); return q; }
    if (operator_norm(T) > 1.0 + tol.psd_tol)
        throw NotContractionError("compute_Q: operator norm exceeds 1");
    Matrix S = T;
    Matrix P = identity(n);
    const int cap = std::min(tol.max_power_iters, 200);
    q.converged = false;
    for (int it = 1; it <= cap; ++it) {
        Matrix Pn = S * S.adjoint();
        q.last_change = operator_norm(Pn - P);
        P = Pn;
        q.iterations = it;
        if (q.last_change <= tol.psd_tol * 1e-2) { q.converged = true; break; }
        S = S * S;
    }
    if (!q.converged && q.last_change > 100 * tol.psd_tol)
        q.warning = "compute_Q: power iteration did not converge";
    auto r = psd_sqrt_with_range(hermitian_part(P), tol);
    q.Q = r.root;
    q.carrier = r.range;
    return q;
}

struct ResidualTriple {
    Matrix R, S, W;  // carrier coordinates
    SubspaceBasis carrier;
    bool strict = false;
    ResidualMap residuals;

    Eigen::Index dim() const { return W.rows(); }
    static ResidualTriple empty() {
        ResidualTriple r;
        r.R = r.S = r.W = Matrix(0, 0);
        r.carrier = SubspaceBasis::empty(0);
        r.strict = true;
        for (const char* k : {"W unitary", "[R,W]", "[S,W]", "R-S*W", "[R,S]"}) r.residuals[k] = 0.0;
        return r;
    }
};

inline void check_residual_invariants(ResidualTriple& r, const Tolerances& tol) {
    const Eigen::Index q = r.dim();
    const double m = 1.0 + std::max({norm0(r.R), norm0(r.S), norm0(r.W)});
    const double thr = tol.eq_tol * m * m;
    r.residuals["W unitary"] = unitarity_defect(r.W);
    r.residuals["[R,W]"] = norm0(r.R * r.W - r.W * r.R);
    r.residuals["[S,W]"] = norm0(r.S * r.W - r.W * r.S);
    r.residuals["R-S*W"] = norm0(r.R - r.S.adjoint() * r.W);
    r.residuals["[R,S]"] = norm0(r.R * r.S - r.S * r.R);
    const bool contractive = q == 0 || (norm0(r.R) <= 1.0 + tol.eq_tol && norm0(r.S) <= 1.0 + tol.eq_tol);
    r.strict = r.residuals["[R,S]"] <= thr && contractive &&
               r.residuals["[R,W]"] <= thr && r.residuals["[S,W]"] <= thr &&
               r.residuals["R-S*W"] <= thr;
}

inline ResidualTriple residual_triple_with(const OperatorTriple& x, const QResult& q,
                                          const Tolerances& tol) {
    const Eigen::Index k = q.carrier.dim();
    if (k == 0) return ResidualTriple::empty();
    const Matrix& V = q.carrier.basis;
    const Matrix Qc = V.adjoint() * q.Q * V;
    const Matrix Qc_inv = Qc.inverse();
    auto coords = [&](const Matrix& Xs) { return Matrix(V.adjoint() * q.Q * Xs * V * Qc_inv); };
    const Matrix Xs = coords(x.T.adjoint());
    const Matrix As = coords(x.A.adjoint());
    const Matrix Bs = coords(x.B.adjoint());
    ResidualTriple r;
    r.carrier = q.carrier;
    r.W = Xs.adjoint();
    r.R = As.adjoint();
    r.S = Bs.adjoint();
    const Matrix off = identity(x.dim()) - V * V.adjoint();
    r.residuals["A* well defined"] = norm0(V.adjoint() * q.Q * x.A.adjoint() * off);
    r.residuals["B* well defined"] = norm0(V.adjoint() * q.Q * x.B.adjoint() * off);
    r.residuals["X* isometry"] = isometry_defect(Xs);
    const double scale = 1.0 + x.max_norm();
    if (r.residuals["X* isometry"] > std::sqrt(tol.eq_tol) * scale)
        throw InconsistentInputError("residual_triple: X_{T*}^* is not isometric");
    check_residual_invariants(r, tol);
    return r;
}

inline ResidualTriple residual_triple(const OperatorTriple& x, const Tolerances& tol = {}) {
    x.validate();
    return residual_triple_with(x, compute_Q(x.T, tol), tol);
}

// ---------------------------------------------------------------------------
// Observability embedding and the lift

struct Embedding {
    Matrix Pi;
    int order_N = 0;
    Eigen::Index defect_dim = 0, residual_dim = 0;
    double tail = 0.0;
    double deficiency = 0.0;
};

inline Embedding embedding_with(const OperatorTriple& x, int N, const Defect& dstar, const QResult& q) {
    const Eigen::Index n = x.dim();
    Embedding e;
    e.order_N = N;
    e.defect_dim = dstar.carrier.dim();
    e.residual_dim = q.carrier.dim();
    const Eigen::Index d = e.defect_dim;
    e.Pi = Matrix::Zero((N + 1) * d + e.residual_dim, n);
    const Matrix top = dstar.carrier.basis.adjoint() * dstar.D;
    const Matrix Ts = x.T.adjoint();
    Matrix Tp = identity(n);  // T*^j
    for (int j = 0; j <= N; ++j) {
        if (d > 0) e.Pi.middleRows(j * d, d) = top * Tp;
        Tp = Tp * Ts;
    }
    if (e.residual_dim > 0)
        e.Pi.bottomRows(e.residual_dim) = q.carrier.basis.adjoint() * q.Q;
    e.tail = norm0(dstar.D * Tp);
    e.deficiency = norm0(e.Pi.adjoint() * e.Pi - identity(n));
    return e;
}

inline Embedding observability_embedding(const OperatorTriple& x, int N, const Tolerances& tol = {}) {
    x.validate();
    if (N < 0) throw PreconditionError("observability_embedding: order must be nonnegative");
    return embedding_with(x, N, defect(x.T, true, tol), compute_Q(x.T, tol));
}

struct OrderChoice {
    int N = 0;
    double tail = 0.0;
    double power_deficiency = 0.0;
    bool capped = false;
};

inline constexpr int kMaxOrder = 512;
inline constexpr double kTailTarget = 1e-10;

/// Smallest N with ||D_{T*} T*^{N+1}|| and ||T^{N+1} T*^{N+1} - Q^2|| below 1e-10.
inline OrderChoice choose_order(const Matrix& T, const Tolerances& tol = {}) {
    const Defect dstar = defect(T, true, tol);
    const QResult q = compute_Q(T, tol);
    const Matrix Q2 = q.Q * q.Q;
    const Matrix Ts = T.adjoint();
    Matrix Tp = Ts;  // T*^{N+1}
    OrderChoice c;
    for (int N = 0; N <= kMaxOrder; ++N) {
        c.N = N;
        c.tail = norm0(dstar.D * Tp);
        c.power_deficiency = norm0(Tp.adjoint() * Tp - Q2);
        if (c.tail <= kTailTarget && c.power_deficiency <= kTailTarget) return c;
        Tp = Tp * Ts;
    }
    c.N = kMaxOrder;
    c.capped = true;
    return c;
}

struct DouglasModel {
    int order_N = 0;
    Eigen::Index defect_dim = 0;
    Matrix G1, G2;
    bool has_embedding = false;
    Matrix embedding;
    Matrix V1, V2, V3;
    ResidualTriple residual;
    double tail = 0.0;
    double deficiency = 0.0;
    std::string warning;

    Eigen::Index space_dim() const { return V3.rows(); }
};

/// Block lower-bidiagonal truncations of the pencils, direct-summed with the
/// residual triple. Usable with arbitrary (G1, G2).
inline DouglasModel assemble_lift(const Matrix& G1, const Matrix& G2, const ResidualTriple& res, int N) {
    if (G1.rows() != G2.rows() || G1.rows() != G1.cols() || G2.rows() != G2.cols())
        throw DimensionError("assemble_lift: G1, G2 must be square of equal size");
    DouglasModel m;
    m.order_N = N;
    m.defect_dim = G1.rows();
    m.G1 = G1;
    m.G2 = G2;
    m.residual = res;
    const Eigen::Index d = G1.rows(), q = res.dim();
    const Eigen::Index dim = (N + 1) * d + q;
    m.V1 = m.V2 = m.V3 = Matrix::Zero(dim, dim);
    for (int j = 0; j <= N; ++j) {
        m.V1.block(j * d, j * d, d, d) = G1.adjoint();
        m.V2.block(j * d, j * d, d, d) = G2.adjoint();
        if (j < N) {
            m.V1.block((j + 1) * d, j * d, d, d) = G2;
            m.V2.block((j + 1) * d, j * d, d, d) = G1;
            m.V3.block((j + 1) * d, j * d, d, d) = identity(d);
        }
    }
    if (q > 0) {
        m.V1.bottomRightCorner(q, q) = res.R;
        m.V2.bottomRightCorner(q, q) = res.S;
        m.V3.bottomRightCorner(q, q) = res.W;
    }
    return m;
}

inline DouglasModel build_lift(const OperatorTriple& x, int N, const Tolerances& tol = {}) {
    x.validate();
    if (N < 0) throw PreconditionError("build_lift: order must be nonnegative");
    const FundamentalPair fp = fundamental_pair(x, true, tol);
    const QResult q = compute_Q(x.T, tol);
    const Defect dstar = defect(x.T, true, tol);
    DouglasModel m = assemble_lift(fp.X1, fp.X2, residual_triple_with(x, q, tol), N);
    const Embedding e = embedding_with(x, N, dstar, q);
    m.has_embedding = true;
    m.embedding = e.Pi;
    m.tail = e.tail;
    m.deficiency = e.deficiency;
    m.warning = q.warning;
    return m;
}

/// build_lift at the automatically chosen order.
inline DouglasModel build_lift_auto(const OperatorTriple& x, const Tolerances& tol = {}) {
    const OrderChoice c = choose_order(x.T, tol);
    DouglasModel m = build_lift(x, c.N, tol);
    if (c.capped) {
        if (!m.warning.empty()) m.warning += "; ";
        m.warning += "truncation order capped at " + std::to_string(kMaxOrder);
    }
    return m;
}

struct LiftVerification {
    ResidualMap residuals;
    double bound = 0.0;  // c * tail + eq_tol
    bool ok = false;
};

inline LiftVerification verify_lift(const DouglasModel& m, const OperatorTriple& x,
                                    const Tolerances& tol = {}) {
    if (!m.has_embedding) throw PreconditionError("verify_lift: model has no embedding");
    LiftVerification v;
    const Matrix& Pi = m.embedding;
    const Matrix* V[3] = {&m.V1, &m.V2, &m.V3};
    const Matrix* X[3] = {&x.A, &x.B, &x.T};
    const char* names[3] = {"A", "B", "T"};
    const double c = 2.0 * (1.0 + norm0(m.G1) + norm0(m.G2));
    v.bound = c * m.tail + tol.eq_tol;
    v.ok = true;
    for (int i = 0; i < 3; ++i) {
        const double inter = norm0(V[i]->adjoint() * Pi - Pi * X[i]->adjoint());
        const double comp = norm0(Pi.adjoint() * (*V[i]) * Pi - *X[i]);
        v.residuals[std::string("intertwine ") + names[i]] = inter;
        v.residuals[std::string("compress ") + names[i]] = comp;
        v.ok = v.ok && inter <= v.bound && comp <= v.bound + norm0(*X[i]) * m.deficiency;
    }
    // Wold form V1 = V2* V3, V2 = V1* V3 away from the top block column.
    const Eigen::Index d = m.defect_dim, N = m.order_N, dim = m.space_dim();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < dim; ++i)
        if (!(i >= N * d && i < (N + 1) * d)) keep.push_back(i);
    auto interior = [&](const Matrix& M) {
        Matrix S(dim, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) S.col(j) = M.col(keep[j]);
        return norm0(S);
    };
    v.residuals["wold V1-V2*V3"] = interior(m.V1 - m.V2.adjoint() * m.V3);
    v.residuals["wold V2-V1*V3"] = interior(m.V2 - m.V1.adjoint() * m.V3);
    v.residuals["V3 isometry"] = interior(m.V3.adjoint() * m.V3 - identity(dim));
    v.residuals["embedding deficiency"] = m.deficiency;
    return v;
}

struct HalvingCheck {
    int N_half = 0;
    double res_half = 0.0, res_full = 0.0;
    bool passed = false;
};

inline double max_intertwining(const LiftVerification& v) {
    return std::max({v.residuals.at("intertwine A"), v.residuals.at("intertwine B"),
                     v.residuals.at("intertwine T")});
}

/// Residuals at order 2N_h must be at most half those at N_h, or already at
/// the rounding floor.
inline HalvingCheck halving_check(const OperatorTriple& x, int N_auto, const Tolerances& tol = {}) {
    HalvingCheck h;
    h.N_half = std::max(1, (N_auto + 1) / 2);
    h.res_half = max_intertwining(verify_lift(build_lift(x, h.N_half, tol), x, tol));
    h.res_full = max_intertwining(verify_lift(build_lift(x, 2 * h.N_half, tol), x, tol));
    const double floor = 64.0 * 2.220446049250313e-16 * (1.0 + x.max_norm()) * (1.0 + x.max_norm());
    h.passed = h.res_full <= 0.5 * h.res_half || h.res_full <= floor;
    return h;
}

struct LiftStrictness {
    bool strict = false;
    bool symbols_commute = false;
    bool residual_strict = false;
    bool special_pair = false;
    double lift_commutator = 0.0;
    bool consistent = true;  // symbols_commute == special_pair == (lift commutator small)
};

inline LiftStrictness lift_is_strict(const DouglasModel& m, const Tolerances& tol = {}) {
    LiftStrictness s;
    s.symbols_commute = symbols_commute(m.G1, m.G2, tol).ok;
    s.special_pair = is_special_pair(m.G1, m.G2, tol).ok;
    s.residual_strict = m.residual.strict;
    // Truncated lower-triangular Toeplitz products are exact, so the
    // commutator of the truncation is the truncated symbol commutator.
    const Eigen::Index dd = (m.order_N + 1) * m.defect_dim;
    const Matrix C = m.V1 * m.V2 - m.V2 * m.V1;
    s.lift_commutator = norm0(C.topLeftCorner(dd, dd));
    const double g = 1.0 + norm0(m.G1) + norm0(m.G2);
    const bool comm_small = s.lift_commutator <= tol.eq_tol * g * g;
    s.consistent = s.symbols_commute == s.special_pair && (m.order_N < 1 || comm_small == s.symbols_commute);
    s.strict = s.symbols_commute && s.residual_strict;
    return s;
}

// ---------------------------------------------------------------------------
// Characteristic function and data sets

/// Theta_T(z) = -T + z D_{T*} (I - z T*)^{-1} D_T, in carrier coordinates
/// (D_T carrier -> D_{T*} carrier).
inline Matrix char_function_with(const Matrix& T, Complex z, const Defect& d, const Defect& dstar) {
    const Eigen::Index n = T.rows();
    const Matrix M = identity(n) - z * T.adjoint();
    if (n > 0 && smallest_singular_value(M) < 1e-12)
        throw PoleError("char_function: I - z T* is singular");
    const Matrix full = -T + z * dstar.D * M.inverse() * d.D;
    return dstar.carrier.basis.adjoint() * full * d.carrier.basis;
}

inline Matrix char_function(const Matrix& T, Complex z, const Tolerances& tol = {}) {
    require_square(T, "char_function");
    return char_function_with(T, z, defect(T, false, tol), defect(T, true, tol));
}

inline Matrix defect_of_theta(const Matrix& T, Complex zeta, const Tolerances& tol = {}) {
    const Matrix Th = char_function(T, zeta, tol);
    const Matrix sq = identity(Th.cols()) - Th.adjoint() * Th;
    return psd_sqrt_with_range(hermitian_part(sq), tol).root;
}

struct ThetaSample {
    Complex z;
    Matrix value;
};

struct TetrablockDataSet {
    Eigen::Index dim_in = 0, dim_out = 0;  // dims of D_T and D_{T*}
    std::vector<ThetaSample> theta_samples;
    Matrix G1, G2;
    ResidualTriple residual = ResidualTriple::empty();
    std::vector<ThetaSample> psi_samples;  // boundary points; optional
    bool pure_flag = true;
};

inline constexpr double kInteriorRadius = 0.95;

inline std::vector<Complex> sample_points(int interior, int boundary) {
    std::vector<Complex> z{Complex(0.0, 0.0)};
    for (int k = 0; k < interior; ++k) z.push_back(std::polar(kInteriorRadius, 2.0 * kPi * k / interior));
    for (int k = 0; k < boundary; ++k) z.push_back(std::polar(1.0, 2.0 * kPi * k / boundary));
    return z;
}

inline TetrablockDataSet extract_data_set(const OperatorTriple& x, int grid, const Tolerances& tol = {},
                                          int boundary_grid = 0) {
    x.validate();
    TetrablockDataSet ds;
    const Defect d = defect(x.T, false, tol);
    const Defect dstar = defect(x.T, true, tol);
    ds.dim_in = d.carrier.dim();
    ds.dim_out = dstar.carrier.dim();
    for (const Complex z : sample_points(grid, boundary_grid)) {
        try {
            ds.theta_samples.push_back({z, char_function_with(x.T, z, d, dstar)});
        } catch (const PoleError&) {
            if (std::abs(z) < 1.0) throw;
        }
    }
    const FundamentalPair fp = fundamental_pair(x, true, tol);
    ds.G1 = fp.X1;
    ds.G2 = fp.X2;
    ds.residual = residual_triple(x, tol);
    ds.pure_flag = ds.dim_in == 0 || norm0(ds.theta_samples.front().value) < 1.0 - tol.eq_tol;
    return ds;
}

// ---------------------------------------------------------------------------
// Coincidence

struct CoincidenceReport {
    bool coincide = false;
    bool undecided = false;
    std::optional<Matrix> phi, phi_star, omega;
    ResidualMap residuals;
    std::string note;
};

namespace detail {

/// Homogeneous linear system in unknown blocks, given as a callback that maps
/// the unknowns to a list of residual matrices. Returns the near-null space.
template <class Eval>
Matrix linear_null_space(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& shapes, Eval&& eval,
                         double rel_cut, double& sigma_ratio) {
    Eigen::Index nunk = 0;
    for (const auto& s : shapes) nunk += s.first * s.second;
    std::vector<Vector> cols;
    for (std::size_t b = 0, off = 0; b < shapes.size(); ++b) {
        for (Eigen::Index j = 0; j < shapes[b].second; ++j)
            for (Eigen::Index i = 0; i < shapes[b].first; ++i) {
                std::vector<Matrix> X;
                for (const auto& s : shapes) X.push_back(Matrix::Zero(s.first, s.second));
                X[b](i, j) = 1.0;
                std::vector<Matrix> out = eval(X);
                Eigen::Index len = 0;
                for (const auto& o : out) len += o.size();
                Vector v(len);
                Eigen::Index r = 0;
                for (const auto& o : out)
                    for (Eigen::Index q = 0; q < o.size(); ++q) v(r++) = o.data()[q];
                cols.push_back(v);
            }
        off += shapes[b].first * shapes[b].second;
    }
    const Eigen::Index rows = cols.empty() ? 0 : cols.front().size();
    Matrix L(rows, nunk);
    for (Eigen::Index c = 0; c < nunk; ++c) L.col(c) = cols[c];
    if (rows == 0) { sigma_ratio = 0.0; return identity(nunk); }
    Eigen::JacobiSVD<Matrix> svd(L, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double smax = std::max(s(0), 1.0);  // data are operators of norm O(1)
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > rel_cut * smax) ++r;
    sigma_ratio = s.size() ? s(s.size() - 1) / smax : 0.0;
    if (r >= nunk) return Matrix(nunk, 0);
    return svd.matrixV().rightCols(nunk - r);
}

inline std::vector<Matrix> unpack(const Vector& u, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& shapes) {
    std::vector<Matrix> out;
    Eigen::Index off = 0;
    for (const auto& s : shapes) {
        Matrix M(s.first, s.second);
        for (Eigen::Index q = 0; q < M.size(); ++q) M.data()[q] = u(off + q);
        off += M.size();
        out.push_back(M);
    }
    return out;
}

inline bool well_conditioned(const std::vector<Matrix>& blocks) {
    for (const auto& b : blocks) {
        if (b.size() == 0) continue;
        const RealVector sv = Eigen::JacobiSVD<Matrix>(b).singularValues();
        if (!(sv(sv.size() - 1) > 1e-6 * sv(0))) return false;
    }
    return true;
}

/// Projection of the identity onto the null space when every block of it is
/// invertible, else a random seeded combination; polar-corrected to unitaries.
inline std::vector<Matrix> unitary_candidate(const Matrix& null,
                                             const std::vector<std::pair<Eigen::Index, Eigen::Index>>& shapes,
                                             std::uint64_t seed) {
    Eigen::Index nunk = 0;
    for (const auto& sh : shapes) nunk += sh.first * sh.second;
    Vector id = Vector::Zero(nunk);
    for (Eigen::Index off = 0; const auto& sh : shapes) {
        for (Eigen::Index i = 0; i < std::min(sh.first, sh.second); ++i) id(off + i * sh.first + i) = 1.0;
        off += sh.first * sh.second;
    }
    auto projected = unpack(null * (null.adjoint() * id), shapes);
    if (well_conditioned(projected)) {
        for (auto& b : projected) b = nearest_unitary(b);
        return projected;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Vector c(null.cols());
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = Complex(g(rng), g(rng));
    auto blocks = unpack(null * c, shapes);
    for (auto& b : blocks) b = nearest_unitary(b);
    return blocks;
}

inline Matrix solve_omega(const ResidualTriple& r1, const ResidualTriple& r2, const Tolerances& tol,
                          double& residual, bool& found) {
    const Eigen::Index q = r1.dim();
    found = false;
    residual = 0.0;
    if (q == 0) { found = true; return Matrix(0, 0); }
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes{{q, q}};
    auto eval = [&](const std::vector<Matrix>& X) {
        const Matrix& w = X[0];
        return std::vector<Matrix>{w * r1.R - r2.R * w, w * r1.S - r2.S * w, w * r1.W - r2.W * w,
                                   w * r1.R.adjoint() - r2.R.adjoint() * w,
                                   w * r1.S.adjoint() - r2.S.adjoint() * w,
                                   w * r1.W.adjoint() - r2.W.adjoint() * w};
    };
    double ratio = 0.0;
    Matrix null = linear_null_space(shapes, eval, std::sqrt(tol.eq_tol), ratio);
    if (null.cols() == 0) { residual = ratio; return Matrix(0, 0); }
    Matrix w = unitary_candidate(null, shapes, 0x0e6a)[0];
    for (const auto& M : eval({w})) residual = std::max(residual, norm0(M));
    found = true;
    return w;
}

}  // namespace detail

inline CoincidenceReport coincide(const TetrablockDataSet& d1, const TetrablockDataSet& d2,
                                  const Tolerances& tol = {}) {
    CoincidenceReport rep;
    rep.note = "residual coordinates are compared up to a fixed unitary change of basis";
    if (d1.dim_in != d2.dim_in || d1.dim_out != d2.dim_out || d1.residual.dim() != d2.residual.dim() ||
        d1.G1.rows() != d2.G1.rows()) {
        rep.residuals["dimension mismatch"] = 1.0;
        return rep;
    }
    // Match samples by their z.
    std::vector<std::pair<const Matrix*, const Matrix*>> pairs;
    for (const auto& s1 : d1.theta_samples)
        for (const auto& s2 : d2.theta_samples)
            if (std::abs(s1.z - s2.z) <= 1e-12) { pairs.push_back({&s1.value, &s2.value}); break; }
    rep.residuals["matched samples"] = static_cast<double>(pairs.size());
    if (pairs.empty() && d1.dim_in > 0 && d1.dim_out > 0) {
        rep.residuals["no common samples"] = 1.0;
        rep.undecided = true;
        return rep;
    }

    const Eigen::Index m = d1.dim_in, ms = d1.dim_out;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes{{m, m}, {ms, ms}};
    auto eval = [&](const std::vector<Matrix>& X) {
        const Matrix& phi = X[0];
        const Matrix& phs = X[1];
        std::vector<Matrix> out;
        for (const auto& [a, b] : pairs) {
            out.push_back(phs * (*a) - (*b) * phi);
            out.push_back(phi * a->adjoint() - b->adjoint() * phs);
        }
        out.push_back(phs * d1.G1 - d2.G1 * phs);
        out.push_back(phs * d1.G2 - d2.G2 * phs);
        out.push_back(phs * d1.G1.adjoint() - d2.G1.adjoint() * phs);
        out.push_back(phs * d1.G2.adjoint() - d2.G2.adjoint() * phs);
        return out;
    };
    double theta_res = 0.0, g_res = 0.0;
    if (m + ms > 0) {
        double ratio = 0.0;
        Matrix null = detail::linear_null_space(shapes, eval, std::sqrt(tol.eq_tol), ratio);
        if (null.cols() == 0) {
            rep.residuals["theta/G system sigma_min ratio"] = ratio;
            rep.undecided = ratio <= std::sqrt(tol.eq_tol) && ratio > tol.eq_tol;
            return rep;
        }
        auto cand = detail::unitary_candidate(null, shapes, 0xc01c1de);
        rep.phi = cand[0];
        rep.phi_star = cand[1];
        for (const auto& [a, b] : pairs) theta_res = std::max(theta_res, norm0(cand[1] * (*a) - (*b) * cand[0]));
        g_res = std::max(norm0(cand[1] * d1.G1 - d2.G1 * cand[1]), norm0(cand[1] * d1.G2 - d2.G2 * cand[1]));
    } else {
        rep.phi = Matrix(0, 0);
        rep.phi_star = Matrix(0, 0);
    }
    rep.residuals["theta"] = theta_res;
    rep.residuals["G"] = g_res;

    double w_res = 0.0;
    bool found = false;
    Matrix omega = detail::solve_omega(d1.residual, d2.residual, tol, w_res, found);
    rep.residuals["residual triple"] = w_res;
    if (found) rep.omega = omega;

    const double scale = 1.0 + std::max(norm0(d1.G1), norm0(d1.G2));
    const double thr = tol.eq_tol * scale;
    const double worst = std::max({theta_res, g_res, found ? w_res : 1.0});
    rep.coincide = found && worst <= thr;
    rep.undecided = !rep.coincide && worst <= std::sqrt(tol.eq_tol) * scale;
    return rep;
}

// ---------------------------------------------------------------------------
// Special data sets

struct SpecialReport {
    bool condition_i = false;
    bool condition_ii = false;
    double pencil_sup = 0.0;
    double invariance_residual = 0.0;
    ResidualMap residuals;
    bool passed() const { return condition_i && condition_ii; }
};

inline SpecialReport validate_special_data_set(const TetrablockDataSet& d, int fourier_modes,
                                               const Tolerances& tol = {}) {
    SpecialReport rep;
    const auto sp = is_special_pair(d.G1, d.G2, tol);
    const auto pc = pencil_contractive(d.G1, d.G2, tol);
    const auto pc2 = pencil_contractive(d.G2, d.G1, tol);
    rep.residuals = sp.residuals;
    rep.pencil_sup = std::max(pc.sup, pc2.sup);
    rep.residuals["pencil sup"] = rep.pencil_sup;
    rep.condition_i = sp.ok && pc.ok && pc2.ok;

    const int M = 2 * fourier_modes;
    std::vector<const ThetaSample*> grid(M, nullptr);
    std::vector<const ThetaSample*> psi(M, nullptr);
    for (const auto& s : d.theta_samples)
        for (int k = 0; k < M; ++k)
            if (std::abs(s.z - std::polar(1.0, 2.0 * kPi * k / M)) <= 1e-12) grid[k] = &s;
    for (const auto& s : d.psi_samples)
        for (int k = 0; k < M; ++k)
            if (std::abs(s.z - std::polar(1.0, 2.0 * kPi * k / M)) <= 1e-12) psi[k] = &s;
    for (int k = 0; k < M; ++k)
        if (!grid[k])
            throw PreconditionError("validate_special_data_set: boundary samples on a grid of " +
                                    std::to_string(M) + " points are required");

    const Eigen::Index m = d.dim_in, ms = d.dim_out;
    if (m == 0) {
        rep.condition_ii = true;
        return rep;
    }
    // Pointwise Delta and psi on the grid.
    std::vector<Matrix> Delta(M);
    bool need_psi = false;
    for (int k = 0; k < M; ++k) {
        const Matrix& Th = grid[k]->value;
        Delta[k] = psd_sqrt_with_range(hermitian_part(identity(m) - Th.adjoint() * Th), tol).root;
        if (norm0(Delta[k]) > tol.eq_tol) need_psi = true;
    }
    if (need_psi)
        for (int k = 0; k < M; ++k)
            if (!psi[k]) throw PreconditionError("validate_special_data_set: psi samples required");

    const Eigen::Index blk = ms + m;
    const Eigen::Index len = M * blk;
    auto graph = [&](Eigen::Index j, int p) {
        Vector v(len);
        for (int k = 0; k < M; ++k) {
            const Complex zp = std::polar(1.0, 2.0 * kPi * k * p / M);
            v.segment(k * blk, ms) = grid[k]->value.col(j) * zp;
            v.segment(k * blk + ms, m) = Delta[k].col(j) * zp;
        }
        return v;
    };
    const int P = fourier_modes;
    Matrix enlarged(len, m * (P + 2));
    for (int p = 0; p <= P + 1; ++p)
        for (Eigen::Index j = 0; j < m; ++j) enlarged.col(p * m + j) = graph(j, p);
    const SubspaceBasis span = orthonormal_range(enlarged, tol);

    const Matrix G1s = d.G1.adjoint(), G2s = d.G2.adjoint();
    double worst = 0.0, scale = 1.0;
    for (int op = 0; op < 3; ++op)
        for (int p = 0; p <= P; ++p)
            for (Eigen::Index j = 0; j < m; ++j) {
                Vector g = graph(j, p);
                Vector h(len);
                for (int k = 0; k < M; ++k) {
                    const Complex z = std::polar(1.0, 2.0 * kPi * k / M);
                    const auto top = g.segment(k * blk, ms);
                    const auto bot = g.segment(k * blk + ms, m);
                    Matrix topOp, botOp;
                    if (op == 0) {
                        topOp = G1s + z * d.G2;
                        botOp = need_psi ? Matrix(psi[k]->value.adjoint() * z) : Matrix::Zero(m, m);
                    } else if (op == 1) {
                        topOp = G2s + z * d.G1;
                        botOp = need_psi ? psi[k]->value : Matrix::Zero(m, m);
                    } else {
                        topOp = z * identity(ms);
                        botOp = z * identity(m);
                    }
                    h.segment(k * blk, ms) = topOp * top;
                    h.segment(k * blk + ms, m) = botOp * bot;
                }
                const Vector leak = h - span.basis * (span.basis.adjoint() * h);
                worst = std::max(worst, leak.norm() / std::max(g.norm(), 1e-300));
                scale = std::max(scale, h.norm() / std::max(g.norm(), 1e-300));
            }
    rep.invariance_residual = worst;
    rep.residuals["invariance"] = worst;
    rep.condition_ii = worst <= tol.eq_tol * scale;
    return rep;
}

/// Model triple of a special data set with inner Theta, realised on the
/// Fourier grid: K_Theta is the near-kernel of f -> P_+(conj(Theta) f) on
/// polynomials of degree <= fourier_modes, and the pencils are compressed to it.
inline OperatorTriple model_triple_on_grid(const TetrablockDataSet& d, int fourier_modes,
                                           const Tolerances& tol = {}) {
    const int M = 2 * fourier_modes, L = fourier_modes;
    const Eigen::Index m = d.dim_in, ms = d.dim_out;
    std::vector<const Matrix*> grid(M, nullptr);
    for (const auto& s : d.theta_samples)
        for (int k = 0; k < M; ++k)
            if (std::abs(s.z - std::polar(1.0, 2.0 * kPi * k / M)) <= 1e-12) grid[k] = &s.value;
    for (int k = 0; k < M; ++k) {
        if (!grid[k]) throw PreconditionError("model_triple_on_grid: boundary samples required");
        if (norm0(identity(m) - grid[k]->adjoint() * (*grid[k])) > std::sqrt(tol.eq_tol))
            throw PreconditionError("model_triple_on_grid: Theta must be inner");
    }
    // Columns: f = z^p e_j (p <= L, j < dim_out). Rows: modes 0..L of Theta^* f.
    const Eigen::Index nf = (L + 1) * ms;
    Matrix K((L + 1) * m, nf);
    for (int p = 0; p <= L; ++p)
        for (Eigen::Index j = 0; j < ms; ++j) {
            std::vector<Vector> vals(M);
            for (int k = 0; k < M; ++k)
                vals[k] = grid[k]->adjoint().col(j) * std::polar(1.0, 2.0 * kPi * k * p / M);
            for (int q = 0; q <= L; ++q) {
                Vector c = Vector::Zero(m);
                for (int k = 0; k < M; ++k) c += vals[k] * std::polar(1.0, -2.0 * kPi * k * q / M);
                K.block(q * m, p * ms + j, m, 1) = c / static_cast<double>(M);
            }
        }
    const SubspaceBasis Y = null_space(K, 1e-8 * std::max(1.0, norm0(K)));
    Matrix Z = Matrix::Zero(nf, nf);
    for (int p = 0; p < L; ++p) Z.block((p + 1) * ms, p * ms, ms, ms) = identity(ms);
    auto blockdiag = [&](const Matrix& G) {
        Matrix out = Matrix::Zero(nf, nf);
        for (int p = 0; p <= L; ++p) out.block(p * ms, p * ms, ms, ms) = G;
        return out;
    };
    const Matrix A = blockdiag(d.G1.adjoint()) + Z * blockdiag(d.G2);
    const Matrix B = blockdiag(d.G2.adjoint()) + Z * blockdiag(d.G1);
    return {compress(A, Y), compress(B, Y), compress(Z, Y)};
}

// ---------------------------------------------------------------------------

struct OmegaResult {
    Matrix omega;
    ResidualMap residuals;
};

inline OmegaResult omega_tau(const OperatorTriple& x, const OperatorTriple& x2, const Matrix& tau,
                             const Tolerances& tol = {}) {
    x.validate();
    x2.validate();
    if (tau.rows() != x2.dim() || tau.cols() != x.dim())
        throw DimensionError("omega_tau: tau has the wrong shape");
    const double scale = 1.0 + std::max(x.max_norm(), x2.max_norm());
    const double thr = tol.eq_tol * scale * scale;
    const double it = std::max({norm0(tau * x.A - x2.A * tau), norm0(tau * x.B - x2.B * tau),
                                norm0(tau * x.T - x2.T * tau), unitarity_defect(tau)});
    if (it > thr) throw PreconditionError("omega_tau: tau does not intertwine the triples");

    const QResult q1 = compute_Q(x.T, tol), q2 = compute_Q(x2.T, tol);
    const ResidualTriple r1 = residual_triple_with(x, q1, tol), r2 = residual_triple_with(x2, q2, tol);
    OmegaResult out;
    const Eigen::Index k = r1.dim();
    if (k != r2.dim()) throw InconsistentInputError("omega_tau: residual dimensions differ");
    if (k == 0) {
        out.omega = Matrix(0, 0);
        for (const char* key : {"fit", "unitary", "R", "S", "W"}) out.residuals[key] = 0.0;
        return out;
    }
    const Eigen::Index n = x.dim();
    Matrix K(k, (k + 1) * n), K2(k, (k + 1) * n);
    Matrix c1 = q1.carrier.basis.adjoint() * q1.Q;
    Matrix c2 = q2.carrier.basis.adjoint() * q2.Q * tau;
    for (Eigen::Index j = 0; j <= k; ++j) {
        K.middleCols(j * n, n) = c1;
        K2.middleCols(j * n, n) = c2;
        c1 = r1.W * c1;
        c2 = r2.W * c2;
    }
    out.omega = lstsq(K.adjoint(), K2.adjoint()).adjoint();
    const Matrix& w = out.omega;
    out.residuals["fit"] = norm0(w * K - K2);
    out.residuals["unitary"] = unitarity_defect(w);
    out.residuals["R"] = norm0(w * r1.R - r2.R * w);
    out.residuals["S"] = norm0(w * r1.S - r2.S * w);
    out.residuals["W"] = norm0(w * r1.W - r2.W * w);
    return out;
}

}  // namespace tetrakit
