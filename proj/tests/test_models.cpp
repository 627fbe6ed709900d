#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace tetrakit;
using oracle::diag;
using oracle::mat2;
using oracle::scalar;

namespace {

OperatorTriple scalar_triple(Complex a, Complex b, Complex t) { return {scalar(a), scalar(b), scalar(t)}; }

GenConfig cfg(GenClass c, std::uint64_t seed, int dim) {
    GenConfig g;
    g.class_tag = c;
    g.seed = seed;
    g.dim = dim;
    return g;
}

double max_residual(const LiftVerification& v) {
    double m = 0;
    for (const auto& [k, r] : v.residuals)
        if (k.rfind("intertwine", 0) == 0 || k.rfind("compress", 0) == 0) m = std::max(m, r);
    return m;
}

Matrix ambient_theta(const Matrix& T, Complex z) {
    const Defect d = defect(T, false), ds = defect(T, true);
    return ds.carrier.basis * char_function(T, z) * d.carrier.basis.adjoint();
}

}  // namespace

TEST(ComputeQ, Examples) {
    std::mt19937_64 rng(1);
    const Matrix U = oracle::random_unitary(3, rng);
    EXPECT_LE(norm0(compute_Q(U).Q - identity(3)), 1e-9);
    const auto p = gen_pure_e_contraction(cfg(GenClass::PureEContraction, 2, 3));
    EXPECT_LT(spectral_radius(p.T), 1.0);
    EXPECT_LE(norm0(compute_Q(p.T).Q), 1e-9);
    EXPECT_EQ(compute_Q(p.T).carrier.dim(), 0);
    const auto q = compute_Q(diag({1, 0.5}));
    EXPECT_LE(norm0(q.Q - diag({1, 0})), 1e-12);
    EXPECT_EQ(q.carrier.dim(), 1);
}

TEST(ResidualTriple, Examples) {
    const auto p = gen_pure_e_contraction(cfg(GenClass::PureEContraction, 3, 3));
    EXPECT_EQ(residual_triple(p).dim(), 0);

    const auto u = gen_strict_e_unitary(cfg(GenClass::StrictEUnitary, 5, 3));
    const auto r = residual_triple(u);
    ASSERT_EQ(r.dim(), 3);
    const Matrix& V = r.carrier.basis;
    EXPECT_LE(norm0(V * r.R * V.adjoint() - u.A), 1e-9);
    EXPECT_LE(norm0(V * r.S * V.adjoint() - u.B), 1e-9);
    EXPECT_LE(norm0(V * r.W * V.adjoint() - u.T), 1e-9);
    EXPECT_TRUE(r.strict);

    const auto e = residual_triple({Matrix::Zero(2, 2), Matrix::Zero(2, 2), diag({1, 0.5})});
    ASSERT_EQ(e.dim(), 1);
    EXPECT_LE(std::abs(e.R(0, 0)) + std::abs(e.S(0, 0)) + std::abs(e.W(0, 0) - 1.0), 1e-12);
    EXPECT_LE(e.residuals.at("W unitary"), 1e-12);
}

TEST(Embedding, Examples) {
    const auto z = observability_embedding({diag({0.2, 0.1}), diag({0.1, 0.3}), Matrix::Zero(2, 2)}, 5);
    EXPECT_LE(norm0(z.Pi.adjoint() * z.Pi - identity(2)), 1e-14);
    EXPECT_LE(norm0(z.Pi.bottomRows(10)), 0.0);
    EXPECT_EQ(z.residual_dim, 0);

    const auto s = observability_embedding(scalar_triple(0.1, 0.2, 0.5), 10);
    EXPECT_NEAR(s.deficiency, std::pow(0.25, 11), 1e-15);
    EXPECT_NEAR(s.tail, std::sqrt(0.75) * std::pow(0.5, 11), 1e-16);

    const auto u = observability_embedding(gen_strict_e_unitary(cfg(GenClass::StrictEUnitary, 1, 3)), 4);
    EXPECT_EQ(u.defect_dim, 0);
    EXPECT_EQ(u.Pi.rows(), 3);
    EXPECT_LE(unitarity_defect(u.Pi), 1e-9);
}

TEST(Embedding, DeficiencyBoundedByPowerNorm) {
    for (int s = 0; s < 20; ++s) {
        const auto x = gen_pure_e_contraction(cfg(GenClass::PureEContraction, s, 1 + s % 4));
        for (int N : {1, 4, 9}) {
            const auto e = observability_embedding(x, N);
            Matrix P = identity(x.dim());
            for (int k = 0; k <= N; ++k) P = P * x.T.adjoint();
            const double bound = std::pow(operator_norm(P), 2);
            EXPECT_LE(e.deficiency, bound + 1e-14);
            // Telescoping: Pi* Pi = I - T^{N+1} T*^{N+1} on a pure triple.
            EXPECT_LE(norm0(e.Pi.adjoint() * e.Pi - identity(x.dim()) + P.adjoint() * P), 1e-12);
        }
    }
    // Diagonal T: equality with the largest entry.
    const auto d = observability_embedding({Matrix::Zero(2, 2), Matrix::Zero(2, 2), diag({0.5, 0.3})}, 3);
    EXPECT_NEAR(d.deficiency, std::pow(0.5, 8), 1e-15);
}

TEST(BuildLift, PureScalar) {
    const Complex a(0.3, 0.1), b(-0.2, 0.25), t(-0.105, 0.055);
    ASSERT_TRUE(in_tetrablock({a, b, t}).in_open);
    const int N = 6;
    const auto m = build_lift(scalar_triple(a, b, t), N);
    ASSERT_EQ(m.defect_dim, 1);
    ASSERT_EQ(m.space_dim(), N + 1);
    // The adjoint triple has fundamental operators conj(F1), conj(F2).
    const Complex g1 = std::conj(oracle::scalar_F1(a, b, t)), g2 = std::conj(oracle::scalar_F1(b, a, t));
    EXPECT_NEAR(std::abs(m.G1(0, 0) - g1), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(m.G2(0, 0) - g2), 0.0, 1e-12);
    const Matrix shift = oracle::pencil_toeplitz(scalar(0), scalar(1), N);
    EXPECT_LE(norm0(m.V3 - shift), 0.0);
    EXPECT_LE(norm0(m.V1 - oracle::pencil_toeplitz(scalar(std::conj(g1)), scalar(g2), N)), 1e-12);
    EXPECT_LE(norm0(m.V2 - oracle::pencil_toeplitz(scalar(std::conj(g2)), scalar(g1), N)), 1e-12);
}

TEST(BuildLift, UnitaryAndZero) {
    const auto u = gen_strict_e_unitary(cfg(GenClass::StrictEUnitary, 9, 3));
    const auto m = build_lift(u, 4);
    EXPECT_EQ(m.defect_dim, 0);
    EXPECT_EQ(m.space_dim(), 3);
    EXPECT_LE(norm0(m.V1 - m.residual.R) + norm0(m.V3 - m.residual.W), 0.0);
    const auto v = verify_lift(m, u);
    EXPECT_LE(max_residual(v), 1e-9);
    EXPECT_TRUE(v.ok);

    const OperatorTriple z{diag({0.2, Complex(0, 0.3)}), diag({0.4, 0.1}), Matrix::Zero(2, 2)};
    const auto fp = fundamental_pair(z, true);
    EXPECT_LE(norm0(fp.X1_ambient() - z.A.adjoint()), 1e-12);
    EXPECT_LE(norm0(fp.X2_ambient() - z.B.adjoint()), 1e-12);
    const auto mz = build_lift(z, 3);
    const Matrix& C = fp.carrier.basis;
    Matrix expect_V3 = Matrix::Zero(8, 8);
    for (int j = 0; j < 3; ++j) expect_V3.block(2 * j + 2, 2 * j, 2, 2) = identity(2);
    EXPECT_LE(norm0(mz.V3 - expect_V3), 0.0);
    EXPECT_LE(norm0(C * mz.G1 * C.adjoint() - z.A.adjoint()), 1e-12);
}

TEST(VerifyLift, PureScalarAndDecrease) {
    const auto x = scalar_triple(0.2, 0.3, 0.5);
    const auto v30 = verify_lift(build_lift(x, 30), x);
    EXPECT_LE(max_residual(v30), 1e-8);
    EXPECT_TRUE(v30.ok);
    for (int s = 0; s < 6; ++s) {
        const auto p = gen_pure_e_contraction(cfg(GenClass::PureEContraction, 2 * s, 3));
        double prev = 1e300;
        for (int N : {2, 4, 8}) {
            const double r = max_intertwining(verify_lift(build_lift(p, N), p));
            if (prev > 1e-14) EXPECT_LT(r, prev);
            prev = r;
        }
    }
}

TEST(VerifyLift, WoldAndBound) {
    for (int s = 0; s < 12; ++s) {
        const auto p = gen_pure_e_contraction(cfg(GenClass::PureEContraction, s, 1 + s % 4));
        const auto m = build_lift_auto(p);
        const auto v = verify_lift(m, p);
        EXPECT_TRUE(v.ok);
        EXPECT_LE(m.tail, 1e-10);
        for (const char* k : {"wold V1-V2*V3", "wold V2-V1*V3", "V3 isometry"}) EXPECT_LE(v.residuals.at(k), 1e-9) << k;
        EXPECT_LE(max_intertwining(v), 2 * (1 + norm0(m.G1) + norm0(m.G2)) * m.tail + 1e-9);
        for (const char* k : {"compress A", "compress B", "compress T"}) EXPECT_LE(v.residuals.at(k), 1e-7);
    }
}

TEST(VerifyLift, PerturbedFundamentalPairIsDetected) {
    std::mt19937_64 rng(12);
    for (int s = 0; s < 6; ++s) {
        const auto p = gen_pure_e_contraction(cfg(GenClass::PureEContraction, 2 * s + 1, 2));
        const auto m = build_lift_auto(p);
        const Eigen::Index d = m.defect_dim;
        Matrix E = oracle::random_matrix(d, d, rng);
        E /= operator_norm(E);
        DouglasModel bad = assemble_lift(m.G1 + 1e-3 * E, m.G2, m.residual, m.order_N);
        bad.has_embedding = true;
        bad.embedding = m.embedding;
        bad.tail = m.tail;
        const auto v = verify_lift(bad, p);
        EXPECT_GT(max_intertwining(v), 1e-6);
        EXPECT_FALSE(v.ok);
    }
}

TEST(LiftStrict, Examples) {
    const auto sc = build_lift(scalar_triple(0.2, 0.3, 0.5), 5);
    EXPECT_TRUE(lift_is_strict(sc).strict);
    Rng rng(3);
    auto [G1, G2] = noncommuting_pair(2, rng);
    const auto inj = assemble_lift(G1, G2, ResidualTriple::empty(), 6);
    const auto s = lift_is_strict(inj);
    EXPECT_FALSE(s.strict);
    EXPECT_FALSE(s.special_pair);
    EXPECT_TRUE(s.consistent);
    const auto u = gen_strict_e_unitary(cfg(GenClass::StrictEUnitary, 4, 3));
    EXPECT_TRUE(lift_is_strict(build_lift(u, 2)).strict);
}

TEST(CharFunction, Examples) {
    for (Complex z : {Complex(0.3, 0.2), Complex(-0.7, 0.1), Complex(0, 0)}) {
        EXPECT_LE(norm0(ambient_theta(Matrix::Zero(3, 3), z) - z * identity(3)), 1e-14);
        const Complex mob = (z - 0.5) / (1.0 - 0.5 * z);
        EXPECT_NEAR(std::abs(ambient_theta(scalar(0.5), z)(0, 0) - mob), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(oracle::char_function_series(scalar(0.5), z, 200)(0, 0) - mob), 0.0, 1e-14);
    }
    for (int s = 0; s < 8; ++s) {
        const auto p = gen_pure_e_contraction(cfg(GenClass::PureEContraction, s, 3));
        const Defect d = defect(p.T, false), ds = defect(p.T, true);
        EXPECT_LE(norm0(char_function(p.T, 0.0) + ds.carrier.basis.adjoint() * p.T * d.carrier.basis), 1e-14);
        const Complex z(0.4, -0.3);
        EXPECT_LE(norm0(ambient_theta(p.T, z) - ds.carrier.basis * ds.carrier.basis.adjoint() *
                                                     oracle::char_function_series(p.T, z, 400) *
                                                     d.carrier.basis * d.carrier.basis.adjoint()),
                  1e-10);
    }
    EXPECT_THROW(char_function(scalar(1.0), 1.0), PoleError);
}

TEST(DefectOfTheta, Examples) {
    EXPECT_LE(norm0(defect_of_theta(Matrix::Zero(2, 2), std::polar(1.0, 0.7))), 1e-7);
    EXPECT_LE(norm0(defect_of_theta(scalar(0.5), std::polar(1.0, 1.3))), 1e-7);
    // Every finite-dimensional contraction has a pure c.n.u. part, so Theta is
    // inner and the boundary defect vanishes.
    std::mt19937_64 rng(13);
    for (int k = 0; k < 10; ++k) {
        Matrix T = oracle::random_matrix(3, 3, rng);
        T *= 0.9 / operator_norm(T);
        EXPECT_LE(norm0(defect_of_theta(T, std::polar(1.0, 0.3 + k))), 1e-6);
    }
    EXPECT_LE(norm0(defect_of_theta(diag({0.5, 1.0}), std::polar(1.0, 0.4))), 1e-6);
}

TEST(ExtractDataSet, Examples) {
    const auto d = extract_data_set(scalar_triple(0.2, 0.3, 0.5), 8);
    ASSERT_EQ(d.dim_in, 1);
    ASSERT_EQ(d.theta_samples.size(), 9u);
    // Carrier bases of 1-dim defect spaces may differ by a phase; |Theta| is basis free.
    for (const auto& s : d.theta_samples)
        EXPECT_NEAR(std::abs(s.value(0, 0)), std::abs((s.z - 0.5) / (1.0 - 0.5 * s.z)), 1e-14);
    EXPECT_TRUE(d.pure_flag);
    EXPECT_EQ(d.residual.dim(), 0);

    const auto u = extract_data_set(gen_strict_e_unitary(cfg(GenClass::StrictEUnitary, 2, 3)), 8);
    EXPECT_EQ(u.dim_in, 0);
    EXPECT_EQ(u.dim_out, 0);
    EXPECT_EQ(u.residual.dim(), 3);

    const OperatorTriple z{diag({0.2, Complex(0, 0.3)}), diag({0.4, 0.1}), Matrix::Zero(2, 2)};
    const auto dz = extract_data_set(z, 4);
    const Defect dd = defect(z.T, false), ds = defect(z.T, true);
    for (const auto& s : dz.theta_samples)
        EXPECT_LE(norm0(ds.carrier.basis * s.value * dd.carrier.basis.adjoint() - s.z * identity(2)), 1e-14);
    EXPECT_LE(norm0(ds.carrier.basis * dz.G1 * ds.carrier.basis.adjoint() - z.A.adjoint()), 1e-12);
    EXPECT_LE(norm0(ds.carrier.basis * dz.G2 * ds.carrier.basis.adjoint() - z.B.adjoint()), 1e-12);
}

TEST(Coincide, Examples) {
    const auto x = gen_pure_e_contraction(cfg(GenClass::PureEContraction, 4, 3));
    const auto d = extract_data_set(x, 8);
    const auto self = coincide(d, d);
    EXPECT_TRUE(self.coincide);
    ASSERT_TRUE(self.phi.has_value());
    EXPECT_LE(norm0(*self.phi - identity(d.dim_in)), 1e-8);
    EXPECT_LE(norm0(*self.phi_star - identity(d.dim_out)), 1e-8);

    std::mt19937_64 rng(2);
    for (int s = 0; s < 8; ++s) {
        const auto y = gen_triple(cfg(s % 2 ? GenClass::PureEContraction : GenClass::NormalEContraction, s, 1 + s % 4));
        const Matrix U = oracle::random_unitary(y.dim(), rng);
        const auto r = coincide(extract_data_set(y, 8), extract_data_set(y.conjugated(U), 8));
        EXPECT_TRUE(r.coincide) << s;
    }
    const auto a = coincide(extract_data_set(scalar_triple(0.1, 0.1, 0.3), 8),
                            extract_data_set(scalar_triple(0.1, 0.1, 0.5), 8));
    EXPECT_FALSE(a.coincide);
}

TEST(OmegaTau, Examples) {
    const auto u = gen_strict_e_unitary(cfg(GenClass::StrictEUnitary, 3, 3));
    const auto w = omega_tau(u, u, identity(3));
    EXPECT_LE(norm0(w.omega - identity(3)), 1e-9);
    std::mt19937_64 rng(5);
    for (int s = 0; s < 5; ++s) {
        const auto y = gen_strict_e_unitary(cfg(GenClass::StrictEUnitary, s, 1 + s));
        const Matrix U = oracle::random_unitary(y.dim(), rng);
        const auto r = omega_tau(y, y.conjugated(U), U);
        for (const char* k : {"unitary", "R", "S", "W"}) EXPECT_LE(r.residuals.at(k), 1e-9) << k;
    }
    const auto p = gen_pure_e_contraction(cfg(GenClass::PureEContraction, 1, 2));
    EXPECT_EQ(omega_tau(p, p, identity(2)).omega.size(), 0);
    EXPECT_THROW(omega_tau(u, u, oracle::random_unitary(3, rng)), PreconditionError);
}

TEST(ValidateSpecial, BlaschkeScalar) {
    ScalarSpecialParams params{0.3, 0.4, 1.0, {0.2, Complex(0, -0.5)}};
    const auto d = scalar_special_dataset(params, 8, 64);
    const auto r = validate_special_data_set(d, 64);
    EXPECT_TRUE(r.condition_i);
    EXPECT_NEAR(r.pencil_sup, 0.7, 1e-12);
    EXPECT_TRUE(r.condition_ii);
    EXPECT_LE(r.invariance_residual, 1e-8);
    for (const auto& s : d.psi_samples) EXPECT_LE(std::abs(s.value(0, 0)), 0.7 + 1e-12);

    auto bad = d;
    bad.G1 = 0.3 * mat2(0, 1, 0, 0);
    bad.G2 = 0.3 * mat2(0, 0, 1, 0);
    bad.dim_out = 2;
    EXPECT_FALSE(validate_special_data_set(bad, 64).condition_i);

    auto no_boundary = d;
    no_boundary.theta_samples.resize(9);
    EXPECT_THROW(validate_special_data_set(no_boundary, 64), PreconditionError);
}

TEST(ValidateSpecial, NonInnerThetaSelectsPsi) {
    // Theta = c * Blaschke with |c| < 1 has constant boundary defect sqrt(1 - |c|^2).
    const Complex g1(0.2, 0.1), g2(-0.3, 0.2);
    const double c = 0.6;
    const int modes = 32, M = 2 * modes;
    auto make = [&](auto psi) {
        TetrablockDataSet d;
        d.dim_in = d.dim_out = 1;
        for (const Complex z : sample_points(4, M)) d.theta_samples.push_back({z, scalar(c * blaschke({0.3}, 1.0, z))});
        for (int k = 0; k < M; ++k) {
            const Complex z = std::polar(1.0, 2 * kPi * k / M);
            d.psi_samples.push_back({z, scalar(psi(z))});
        }
        d.G1 = scalar(g1);
        d.G2 = scalar(g2);
        return d;
    };
    const auto good = validate_special_data_set(make([&](Complex z) { return std::conj(g2) + g1 * z; }), modes);
    EXPECT_TRUE(good.passed());
    const auto other = validate_special_data_set(make([&](Complex z) { return std::conj(g2) * z + g1; }), modes);
    EXPECT_TRUE(other.condition_i);
    EXPECT_FALSE(other.condition_ii);
    EXPECT_GT(other.invariance_residual, 1e-3);
}

TEST(ValidateSpecial, ExtractedFromSpecialContraction) {
    for (int s = 0; s < 4; ++s) {
        const auto x = gen_pure_e_contraction(cfg(GenClass::PureEContraction, 2 * s + 1, 2));
        const auto d = extract_data_set(x, 4, {}, 64);
        ASSERT_TRUE(is_special_pair(d.G1, d.G2).ok);
        const auto r = validate_special_data_set(d, 32);
        EXPECT_TRUE(r.passed()) << r.invariance_residual;
    }
}

TEST(SpecialPipeline, ModelRoundTrip) {
    for (int s = 0; s < 3; ++s) {
        GenConfig g = cfg(GenClass::SpecialScalarDataSet, s, 1 + s % 2);
        const int modes = 32;
        const auto d = gen_scalar_special_dataset(g, 8, modes);
        const OperatorTriple x = model_triple_on_grid(d, modes);
        EXPECT_EQ(x.dim(), g.dim);
        const auto back = extract_data_set(x, 8, {}, 2 * modes);
        const auto r = coincide(d, back, Tolerances{1e-6});
        EXPECT_TRUE(r.coincide);
    }
}
