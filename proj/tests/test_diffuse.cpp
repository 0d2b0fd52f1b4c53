#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sharpflow/diffuse.hpp"
#include "sharpflow/motionlaw.hpp"

using namespace sharpflow;

namespace {

const CoefficientField one = CoefficientField::constant(1.0);

double sup_diff(const std::vector<double>& x, const std::vector<double>& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// sup |w0| over |x| < 0.5 for the flat tanh on a grid with h = eps / k
double flat_residual(Stencil st, double eps, std::size_t k) {
    const std::size_t n = static_cast<std::size_t>(std::llround(2.0 * k / eps)) + 1;
    const DiffuseProblem p = DiffuseProblem::planar(one, one, eps, -1.0, 1.0, n, st);
    std::vector<double> u(n), w(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = std::tanh(p.grid().x(i) / eps);
    p.natural_w<double>(u, w);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(p.grid().x(i)) < 0.5) m = std::max(m, std::abs(w[i]));
    return m;
}

} // namespace

TEST(Grid, VolumesPartitionTheDomain) {
    const DiffuseProblem s = DiffuseProblem::spherical(one, one, 0.1, 2.0, 81);
    double v = 0.0;
    for (double x : s.volumes()) v += x;
    EXPECT_NEAR(v * s.grid().measure_factor(), 4.0 / 3.0 * std::numbers::pi * 8.0, 1e-12);
    EXPECT_EQ(s.grid().x(0), 0.0);
    EXPECT_EQ(s.grid().x(80), 2.0);

    const DiffuseProblem q = DiffuseProblem::planar(one, one, 0.1, -1.0, 2.0, 61);
    v = 0.0;
    for (double x : q.volumes()) v += x;
    EXPECT_NEAR(v, 3.0, 1e-14);
    EXPECT_TRUE(q.left_boundary());
    EXPECT_FALSE(s.left_boundary());
}

TEST(AssembleW, UniformStates) {
    const auto a = CoefficientField::radial_bump(1.0, 0.3, 0.8);
    const auto b = CoefficientField::radial_bump(1.2, -0.2, 1.5);
    const DiffuseProblem p = DiffuseProblem::spherical(a, b, 0.05, 2.0, 321);
    for (double c : {1.0, -1.0, 0.0}) {
        const auto w = p.assemble_w(std::vector<double>(p.size(), c));
        for (double x : w) EXPECT_EQ(x, 0.0);
    }
}

TEST(AssembleW, FlatProfileResidualOrder) {
    const double eps = 0.1;
    const std::vector<std::size_t> ks = {4, 8, 16, 32};
    std::vector<double> hs, std_res, cor_res;
    for (std::size_t k : ks) {
        hs.push_back(eps / static_cast<double>(k));
        std_res.push_back(flat_residual(Stencil::standard, eps, k));
        cor_res.push_back(flat_residual(Stencil::corrected, eps, k));
    }
    EXPECT_GE(slope(hs, std_res), 1.9);
    EXPECT_LE(slope(hs, std_res), 2.2);
    EXPECT_GE(slope(hs, cor_res), 3.5);
}

TEST(AssembleW, SphericalLaplacianOfQuadratic) {
    // u = r^2 / 4 has Delta u = 3/2 everywhere, including the centre
    const double eps = 1.0;
    const DiffuseProblem p = DiffuseProblem::spherical(one, one, eps, 1.0, 101, Stencil::standard);
    std::vector<double> u(p.size()), w(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) u[i] = 0.25 * p.grid().x(i) * p.grid().x(i);
    p.natural_w<double>(u, w);
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const double expect = DoubleWell::psi_u(u[i]) - 1.5;
        EXPECT_NEAR(w[i], expect, 1e-10) << i;
    }
}

TEST(Step, WellsAreExactFixedPoints) {
    const auto a = CoefficientField::radial_bump(1.0, 0.3, 0.8);
    const auto b = CoefficientField::radial_bump(1.2, -0.2, 1.5);
    for (const DiffuseProblem& p : {DiffuseProblem::spherical(a, b, 0.05, 2.0, 321),
                                    DiffuseProblem::planar(a, b, 0.05, -1.0, 1.0, 321)}) {
        const DiffuseSolver solver(p);
        for (double c : {1.0, -1.0}) {
            PhaseState s = p.uniform_state(c);
            for (double f : p.rhs(s.u)) EXPECT_EQ(f, 0.0);
            const PhaseState next = solver.step(s, 1e-3);
            for (double v : next.u) EXPECT_EQ(v, c);
            solver.advance_fixed(s, 1e-2, 5);
            for (double v : s.u) EXPECT_EQ(v, c);
        }
    }
}

TEST(Step, RelaxedKinkIsStationary) {
    const double eps = 0.05;
    const std::size_t n = 401; // h = eps / 10, node 200 at x = 0
    const DiffuseProblem p = DiffuseProblem::planar(one, one, eps, -1.0, 1.0, n);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = std::tanh(p.grid().x(i) / eps);
    u = relax_kink(p, u, n / 2);
    EXPECT_NEAR(u[n / 2], 0.0, 1e-15);
    std::vector<double> w0(n);
    p.natural_w<double>(u, w0);
    for (double x : w0) EXPECT_LE(std::abs(x), 1e-12);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(u[i], -u[n - 1 - i], 1e-14);

    const DiffuseSolver solver(p);
    for (double dt : {1e-6, 1e-4}) {
        PhaseState s{u, p.assemble_w(u), 0.0};
        solver.advance_fixed(s, dt, 100);
        EXPECT_LE(sup_diff(s.u, u), 1e-8) << dt;
    }
}

TEST(Step, UnrelaxedTanhMovesOnlySlightly) {
    // the continuum profile is an equilibrium up to discretization error
    const double eps = 0.05;
    const std::size_t n = 401;
    const DiffuseProblem p = DiffuseProblem::planar(one, one, eps, -1.0, 1.0, n);
    PhaseState s;
    s.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.u[i] = std::tanh(p.grid().x(i) / eps);
    const auto u0 = s.u;
    DiffuseSolver(p).advance_fixed(s, 1e-4, 100);
    EXPECT_LE(sup_diff(s.u, u0), 1e-3);
}

TEST(Step, JacobianMatchesDifferences) {
    const auto a = CoefficientField::radial_bump(1.0, 0.3, 0.8);
    const auto b = CoefficientField::radial_bump(1.2, -0.2, 1.5);
    for (Stencil st : {Stencil::standard, Stencil::corrected}) {
        const DiffuseProblem p = DiffuseProblem::spherical(a, b, 0.2, 1.5, 31, st);
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        std::vector<double> u(p.size());
        for (double& x : u) x = U(rng);
        BandJacobian J;
        DiffuseSolver(p).jacobian(u, J);
        const double h = 1e-6;
        for (std::size_t j = 0; j < p.size(); ++j) {
            auto up = u, um = u;
            up[j] += h;
            um[j] -= h;
            const auto Fp = p.rhs(up), Fm = p.rhs(um);
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double fd = (Fp[i] - Fm[i]) / (2 * h);
                const std::size_t k = j + J.bw - i;
                const bool in_band = j + J.bw >= i && k < J.width();
                const double ad = in_band ? J.at(i, k) : 0.0;
                EXPECT_NEAR(ad, fd, 1e-5 * std::max(1.0, std::abs(fd))) << i << "," << j;
            }
        }
    }
}

TEST(Step, ErrorsAreReported) {
    const DiffuseProblem p = DiffuseProblem::spherical(one, one, 0.1, 1.5, 121);
    const DiffuseSolver solver(p);
    const PhaseState s = p.initial_state(1.0);
    EXPECT_THROW(solver.step(s, 1e-2, 1e-12), StepRejected);
    EXPECT_THROW(solver.step(s, 0.0), std::invalid_argument);
    EXPECT_THROW(solver.step(p.uniform_state(11.0), 1e-12), Blowup);
}

TEST(Energy, Examples) {
    const DiffuseProblem p = DiffuseProblem::spherical(one, one, 1.0, 2.0, 201);
    const EnergyReport e1 = p.energy(std::vector<double>(p.size(), 1.0));
    EXPECT_EQ(e1.F_eps, 0.0);
    const EnergyReport e0 = p.energy(std::vector<double>(p.size(), 0.0));
    EXPECT_NEAR(e0.potential, 0.5 * 4.0 / 3.0 * std::numbers::pi * 8.0, 1e-12);
    EXPECT_EQ(e0.residual, 0.0);
    EXPECT_EQ(e0.gradient, 0.0);
    const EnergyReport e = DiffuseProblem::spherical(one, one, 0.1, 2.0, 161).energy(
        DiffuseProblem::spherical(one, one, 0.1, 2.0, 161).initial_state(1.0).u);
    EXPECT_GE(e.gradient, 0.0);
    EXPECT_GE(e.potential, 0.0);
    EXPECT_GE(e.residual, 0.0);
    EXPECT_EQ(e.F_eps, e.gradient + e.potential + e.residual);
}

TEST(Energy, RhsIsMinusScaledGradient) {
    // eps^4 u_t1 = -(eps^3 / V) dE/du with E without the 4 pi factor
    const double eps = 0.2;
    const auto a = CoefficientField::radial_bump(1.0, 0.3, 0.8);
    const DiffuseProblem p = DiffuseProblem::planar(a, one, eps, -1.0, 1.0, 41);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> u(p.size());
    for (double& x : u) x = U(rng);
    const auto F = p.rhs(u);
    const double h = 1e-6;
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto up = u, um = u;
        up[i] += h;
        um[i] -= h;
        const double dE = (p.energy(up).F_eps - p.energy(um).F_eps) / (2 * h);
        const double expect = -std::pow(eps, 3) / p.volumes()[i] * dE / std::pow(eps, 4);
        EXPECT_NEAR(F[i], expect, 1e-5 * std::max(1.0, std::abs(expect))) << i;
    }
}

TEST(RunTo, ZeroDurationIsASingleRecord) {
    const DiffuseProblem p = DiffuseProblem::spherical(one, one, 0.1, 2.0, 161);
    PhaseState s = p.initial_state(1.0);
    const DiffuseTrajectory tr = DiffuseSolver(p).run_to(s, 0.0, {});
    ASSERT_EQ(tr.records.size(), 1u);
    EXPECT_EQ(tr.records[0].t1, 0.0);
    EXPECT_NEAR(tr.records[0].radius, 1.0, 1e-12);
    EXPECT_EQ(tr.accepted, 0u);
}

class ShrinkingSphere : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        const double eps = 0.05;
        problem_ = new DiffuseProblem(DiffuseProblem::spherical(one, one, eps, 2.0, 321));
        state_ = new PhaseState(problem_->initial_state(1.0));
        DtPolicy pol;
        pol.output_interval = 0.005;
        traj_ = new DiffuseTrajectory(DiffuseSolver(*problem_).run_to(*state_, 0.05, pol));
    }
    static void TearDownTestSuite() {
        delete traj_;
        delete state_;
        delete problem_;
    }
    static DiffuseProblem* problem_;
    static PhaseState* state_;
    static DiffuseTrajectory* traj_;
};
DiffuseProblem* ShrinkingSphere::problem_ = nullptr;
PhaseState* ShrinkingSphere::state_ = nullptr;
DiffuseTrajectory* ShrinkingSphere::traj_ = nullptr;

TEST_F(ShrinkingSphere, FollowsTheSharpLaw) {
    EXPECT_TRUE(problem_->resolves_interface());
    EXPECT_EQ(traj_->records.back().t1, 0.05);
    EXPECT_EQ(traj_->records.size(), 11u);
    const double eps = problem_->eps();
    EXPECT_NEAR(traj_->records.back().radius, std::sqrt(0.8), eps * eps);
    for (const auto& r : traj_->records) EXPECT_LE(std::abs(r.radius - unit_sphere_radius(1.0, r.t1)), eps);
}

TEST_F(ShrinkingSphere, EnergyDecreases) {
    EXPECT_LE(traj_->max_energy_increase, 1e-10);
    for (std::size_t i = 1; i < traj_->records.size(); ++i)
        EXPECT_LE(traj_->records[i].F_eps, traj_->records[i - 1].F_eps + 1e-10);
}

TEST_F(ShrinkingSphere, OuterRegionIsFlat) {
    const double R = problem_->front_radius(*state_);
    const double eps = problem_->eps();
    double worst = 0.0, overshoot = 0.0;
    for (std::size_t i = 0; i < problem_->size(); ++i) {
        const double r = problem_->grid().x(i);
        const double u = state_->u[i];
        overshoot = std::max(overshoot, std::abs(u));
        if (std::abs(r - R) > 10 * eps) worst = std::max(worst, std::abs(u - (r > R ? 1.0 : -1.0)));
    }
    EXPECT_LE(worst, 1e-3);
    EXPECT_LE(overshoot, 1.1);
}
