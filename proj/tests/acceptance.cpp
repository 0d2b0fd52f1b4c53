// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Diagnostics are indented under their criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "drift_oracle.hpp"
#include "sharpflow/harness.hpp"

using namespace sharpflow;
namespace hs = sharpflow::harness;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
    std::vector<std::string> notes;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

hs::ExperimentConfig config(const std::string& text, hs::Experiment e) {
    return hs::load_experiment(hs::parse_ini(text), e);
}

// 1: moment integrals at beta = 1 and the beta-scaling readings
Outcome moments_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto c = config("[verify-integrals]\nbetas = 1, 0.5, 2\nH = 2\nK = 0.5\n", hs::Experiment::verify_integrals);
    const hs::RunRecord r = hs::verify_integrals(c);
    double worst_ref = 0.0, worst_dz = 0.0;
    bool ok = true;
    for (const auto& a : r.assertions) {
        ok = ok && a.pass;
        if (a.name.rfind("reference", 0) == 0) worst_ref = std::max(worst_ref, a.value);
        else worst_dz = std::max(worst_dz, a.value);
    }
    Outcome o;
    std::vector<std::string> notes;
    for (double beta : {0.5, 2.0}) {
        const InnerProfile p = make_profile(1.0, beta);
        const MomentTable t = moments(p, {1.0, beta, 2.0, 0.5}, false);
        const auto s3 = z2Uz3_candidates(beta), s4 = z2U0UzUzz_candidates(beta), s5 = z2U02Uz2_candidates(1.0, beta);
        notes.push_back(fmt("beta=%g  z^2Uz^3: d/dz %.2e, argument %.2e | z^2UUzUzz: d/dz %.2e, argument %.2e | "
                            "z^2U^2Uz^2: d/dz %.2e, argument %.2e, printed %.2e",
                            beta, std::abs(t.m_z2Uz3.quadrature - s3.dz_reading),
                            std::abs(t.m_z2Uz3.quadrature - s3.argument_reading),
                            std::abs(t.m_z2U0UzUzz.quadrature - s4.dz_reading),
                            std::abs(t.m_z2U0UzUzz.quadrature - s4.argument_reading),
                            std::abs(t.m_z2U02Uz2.quadrature - s5.dz_reading),
                            std::abs(t.m_z2U02Uz2.quadrature - s5.argument_reading),
                            std::abs(t.m_z2U02Uz2.quadrature - *s5.printed)));
    }
    const double dt = seconds_since(t0);
    o.pass = ok && dt < 1.0;
    o.summary = fmt("max |quad - ref| at beta=1 %.2e, max |closed - quad| all beta (d/dz) %.2e, tol 1e-8, %.3f s",
                    worst_ref, worst_dz, dt);
    o.notes = notes;
    return o;
}

// 2: reduction identity
Outcome reduction() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto c = config("samples = 1000\nseed = 1\n", hs::Experiment::reduce_check);
    const hs::RunRecord r = hs::reduce_check(c);
    const double dt = seconds_since(t0);
    Outcome o;
    o.pass = r.assertions[0].pass && dt < 1.0;
    o.summary = fmt("max deviation %.2e over 1000 samples, tol 1e-12, %.3f s", r.assertions[0].value, dt);
    return o;
}

// 3: solvability and mu
Outcome solvability() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> A(0.2, 3.0), H(-6.0, 6.0);
    double worst_mu = 0.0, worst_orth = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double a = A(rng), h = H(rng);
        const double mu = solve_mu(a, h);
        worst_mu = std::max(worst_mu, std::abs(mu - (-a * a * h)));
        const InnerProfile p = make_profile(a, a);
        // L U1 = -(a^2 H + mu) U0_z, plus any L phi: both orthogonal to U0_z
        const double c = -(a * a * h + mu);
        const double s = 0.3 + 0.05 * i;
        const TestFunction phi{[s](double z) { return z * std::exp(-s * z * z) + std::exp(-z * z); },
                               [s](double z) {
                                   const double e = std::exp(-s * z * z);
                                   return (4 * s * s * z * z * z - 6 * s * z) * e +
                                          (4 * z * z - 2) * std::exp(-z * z);
                               }};
        const double orth = quad::symmetric(
                                [&](double z) { return (c * p.Uz(z) + apply_L(p, phi, z, a, a)) * p.Uz(z); },
                                p.window())
                                .value;
        worst_orth = std::max(worst_orth, std::abs(orth));
    }
    const double dt = seconds_since(t0);
    Outcome o;
    o.pass = worst_mu == 0.0 && worst_orth <= 1e-8 && dt < 1.0;
    o.summary = fmt("max |int (L U1) U0_z| %.2e (tol 1e-8), max |mu + a^2 H| %.1e over 20 cases, %.3f s", worst_orth,
                    worst_mu, dt);
    return o;
}

// 4: alpha-invariance of the balance velocity
Outcome alpha_invariance() {
    std::vector<std::pair<PointFields, FrontGeometry>> cases;
    cases.push_back({constant_point_fields(1, 1), sphere_front(1.0)});
    cases.push_back({constant_point_fields(0.7, 1.3), sphere_front(0.6)});
    const FrontGeometry torus = surface_geometry(AnalyticSurface::torus(2.0, 0.5), {0.3, 2.1, 0.3}).front;
    cases.push_back({sample_point_fields(CoefficientField::radial_bump(1, 0.3, 0.9),
                                         CoefficientField::affine(1.2, {0.1, 0.2, 0}), torus.p),
                     torus});
    const FrontGeometry s = sphere_front(0.9);
    cases.push_back({sample_point_fields(CoefficientField::radial_bump(1, -0.2, 1.2),
                                         CoefficientField::radial_bump(1.1, 0.3, 0.7), s.p),
                     s});
    double spread = 0.0;
    for (const auto& [f, g] : cases) {
        const DriftCoefficients d = drift_coefficients(f, g.H, g.grad_s_H, g.lap_s_H);
        double lo = INFINITY, hi = -INFINITY;
        for (double alpha : {0.0, 1.0, -3.0}) {
            const double v = velocity_from_balance(f, g, d, alpha);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        spread = std::max(spread, hi - lo);
    }
    Outcome o;
    o.pass = spread <= 1e-12;
    o.summary = fmt("max spread of V over alpha in {0,1,-3}: %.2e over %zu fronts, tol 1e-12", spread, cases.size());
    return o;
}

// 5: Delta d expansion order
Outcome lapd() {
    const auto c = config("eps = 0.1, 0.05, 0.025, 0.0125\nz = 1\n", hs::Experiment::lapd_check);
    const hs::RunRecord r = hs::lapd_check(c);
    Outcome o;
    o.pass = r.all_pass();
    o.summary = fmt("fitted order sphere %.3f, torus %.3f, required >= 1.9", r.assertions[0].value,
                    r.assertions[1].value);
    return o;
}

// 6: sharp sphere law
Outcome sharp_law() {
    const auto one = CoefficientField::constant(1);
    const SharpTrajectory tr = evolve_sharp_radial({1.0, 0.0}, one, one, 0.3, 1e-10);
    double err = 0.0, err_all = 0.0;
    for (const auto& r : tr.records) {
        const double e = std::abs(r.R - unit_sphere_radius(1.0, r.t1));
        err_all = std::max(err_all, e);
        if (r.R >= 0.2) err = std::max(err, e);
    }
    const double ext = tr.extinction_time ? std::abs(*tr.extinction_time - 0.25) : INFINITY;
    Outcome o;
    o.pass = err <= 1e-8 && ext <= 1e-6;
    o.summary = fmt("global error %.2e on R >= R0/5 (tol 1e-8), extinction error %.2e (tol 1e-6)", err, ext);
    o.notes.push_back(fmt("%zu accepted steps; error over the whole run including the collapse %.2e", tr.steps,
                          err_all));
    return o;
}

// 7 and 8 share the runs
struct ConvergenceRuns {
    std::vector<hs::DiffuseOutcome> out;
    double seconds = 0.0;
};

ConvergenceRuns convergence_runs() {
    const auto c = config("[converge]\neps = 0.08, 0.04, 0.02\nt1_end = 0.1\npoints_per_eps = 8\n"
                          "output_interval = 0.001\n",
                          hs::Experiment::converge);
    ConvergenceRuns r;
    r.out.resize(c.eps.size());
    const auto t0 = std::chrono::steady_clock::now();
    hs::parallel_for(c.eps.size(), hs::thread_cap(), [&](std::size_t i) { r.out[i] = hs::run_diffuse(c, c.eps[i]); });
    r.seconds = seconds_since(t0);
    return r;
}

Outcome convergence(const ConvergenceRuns& runs) {
    std::vector<double> eps, err;
    for (const auto& o : runs.out) {
        eps.push_back(o.eps);
        err.push_back(o.sharp_err);
    }
    const auto rows = hs::convergence_table(eps, err);
    Outcome o;
    o.pass = runs.seconds <= 600.0;
    for (std::size_t i = 1; i < rows.size(); ++i) o.pass = o.pass && rows[i].ratio >= 1.5;
    o.summary = fmt("errors %.3e, %.3e, %.3e; ratios %.2f, %.2f (>= 1.5); %.1f s", err[0], err[1], err[2],
                    rows[1].ratio, rows[2].ratio, runs.seconds);
    for (const auto& d : runs.out)
        o.notes.push_back(fmt("eps=%g h=%.3e nodes=%zu accepted=%zu rejected=%zu", d.eps, d.h, d.n_points,
                              d.traj.accepted, d.traj.rejected));
    return o;
}

Outcome energy(const ConvergenceRuns& runs) {
    double worst = -INFINITY;
    std::size_t steps = 0, increases = 0;
    for (const auto& d : runs.out) {
        worst = std::max(worst, d.traj.max_energy_increase);
        steps += d.traj.accepted;
        increases += d.traj.energy_increases;
    }
    Outcome o;
    o.pass = worst <= 1e-10;
    o.summary = fmt("largest per-step change %.2e over %zu accepted steps (slack 1e-10), %zu increases", worst, steps,
                    increases);
    return o;
}

// 9: printed drift coefficients against the expansion oracle
Outcome drift_oracle() {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> base(0.6, 1.6), amp(-0.4, 0.4), sig(0.5, 2.0), rad(0.3, 1.8);
    double printed = 0.0, rederived = 0.0;
    int failing = 0;
    for (int i = 0; i < 20; ++i) {
        const auto a = CoefficientField::radial_bump(base(rng), amp(rng), sig(rng));
        const auto b = CoefficientField::radial_bump(base(rng), amp(rng), sig(rng));
        const FrontGeometry g = sphere_front(rad(rng));
        const PointFields f = sample_point_fields(a, b, g.p);
        const DriftCoefficients ref = oracle::drift(f, g.H, g.grad_s_H, g.lap_s_H);
        const double dp = oracle::max_diff(drift_coefficients(f, g.H, g.grad_s_H, g.lap_s_H), ref);
        printed = std::max(printed, dp);
        rederived = std::max(rederived, oracle::max_diff(drift_coefficients_rederived(f, g.H, g.grad_s_H, g.lap_s_H), ref));
        if (dp > 1e-8) ++failing;
    }
    Outcome o;
    o.pass = printed <= 1e-8;
    o.summary = fmt("printed A-D vs oracle: max diff %.2e (tol 1e-8), %d of 20 configurations differ", printed, failing);
    o.notes.push_back(fmt("rederived A-D vs oracle: max diff %.2e", rederived));
    o.notes.push_back("printed A, C, D depart from the expansion whenever grad a != 0; B and the a-constant case agree");
    return o;
}

// 10: stationary profiles
Outcome stationary() {
    const auto a = CoefficientField::radial_bump(1.0, 0.3, 0.8);
    const auto b = CoefficientField::radial_bump(1.2, -0.2, 1.5);
    const auto one = CoefficientField::constant(1);
    bool wells = true;
    for (const DiffuseProblem& p :
         {DiffuseProblem::spherical(a, b, 0.05, 2.0, 321), DiffuseProblem::planar(a, b, 0.05, -1.0, 1.0, 321)}) {
        for (double c : {1.0, -1.0}) {
            PhaseState s = p.uniform_state(c);
            DiffuseSolver(p).advance_fixed(s, 1e-3, 100);
            for (double v : s.u) wells = wells && v == c;
        }
    }

    const double eps = 0.05;
    const std::size_t n = 401;
    const DiffuseProblem flat = DiffuseProblem::planar(one, one, eps, -1.0, 1.0, n);
    std::vector<double> tanh_u(n);
    for (std::size_t i = 0; i < n; ++i) tanh_u[i] = std::tanh(flat.grid().x(i) / eps);
    const std::vector<double> kink = relax_kink(flat, tanh_u, n / 2);
    const auto drift = [&](const std::vector<double>& u0, double dt) {
        PhaseState s{u0, flat.assemble_w(u0), 0.0};
        DiffuseSolver(flat).advance_fixed(s, dt, 100);
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(s.u[i] - u0[i]));
        return m;
    };
    const double kink_drift = std::max(drift(kink, 1e-6), drift(kink, 1e-4));
    const double raw_drift = drift(tanh_u, 1e-4);
    double profile_gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) profile_gap = std::max(profile_gap, std::abs(kink[i] - tanh_u[i]));

    std::vector<double> hs_, res_std, res_cor;
    for (std::size_t k : {4u, 8u, 16u, 32u}) {
        const std::size_t m = 20 * k + 1; // [-1, 1] with h = eps / k at eps = 0.1
        for (Stencil st : {Stencil::standard, Stencil::corrected}) {
            const DiffuseProblem p = DiffuseProblem::planar(one, one, 0.1, -1.0, 1.0, m, st);
            std::vector<double> u(m), w(m);
            for (std::size_t i = 0; i < m; ++i) u[i] = std::tanh(p.grid().x(i) / 0.1);
            p.natural_w<double>(u, w);
            double sup = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                if (std::abs(p.grid().x(i)) < 0.5) sup = std::max(sup, std::abs(w[i]));
            (st == Stencil::standard ? res_std : res_cor).push_back(sup);
        }
        hs_.push_back(0.1 / static_cast<double>(k));
    }
    const double slope_std = hs::loglog_slope(hs_, res_std), slope_cor = hs::loglog_slope(hs_, res_cor);

    Outcome o;
    o.pass = wells && kink_drift <= 1e-8 && slope_std >= 1.9 && slope_cor >= 1.9;
    o.summary = fmt("u = +-1 exact: %s; flat kink drift %.2e over 100 steps (tol 1e-8); residual slope standard "
                    "%.2f, corrected %.2f (>= 1.9)",
                    wells ? "yes" : "no", kink_drift, slope_std, slope_cor);
    o.notes.push_back(fmt("kink is the discrete equilibrium; it differs from tanh(x/eps) by %.2e at h = eps/8", profile_gap));
    o.notes.push_back(fmt("unrelaxed tanh(x/eps) drifts %.2e over 100 steps of 1e-4", raw_drift));
    return o;
}

} // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1  moment integrals", moments_suite},      {"2  reduction identity", reduction},
        {"3  solvability and mu", solvability},      {"4  alpha-invariance", alpha_invariance},
        {"5  Delta d expansion order", lapd},        {"6  sharp sphere law", sharp_law},
    };
    std::optional<ConvergenceRuns> runs;
    const auto get_runs = [&]() -> const ConvergenceRuns& {
        if (!runs) runs = convergence_runs();
        return *runs;
    };
    criteria.push_back({"7  diffuse-sharp convergence", [&] { return convergence(get_runs()); }});
    criteria.push_back({"8  energy dissipation", [&] { return energy(get_runs()); }});
    criteria.push_back({"9  drift-coefficient oracle", drift_oracle});
    criteria.push_back({"10 stationary profiles", stationary});

    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.summary = std::string("error: ") + e.what();
        }
        std::printf("%s  criterion %-30s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.summary.c_str());
        for (const auto& n : o.notes) std::printf("        %s\n", n.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
