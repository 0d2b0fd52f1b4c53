#pragma once

// Experiment runners, trajectory comparison and the CSV / JSON outputs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sharpflow/config.hpp"
#include "sharpflow/diffuse.hpp"
#include "sharpflow/geometry.hpp"
#include "sharpflow/motionlaw.hpp"
#include "sharpflow/profile.hpp"

namespace sharpflow::harness {

struct Assertion {
    std::string name;
    double value = 0.0;
    double tol = 0.0;
    bool pass = false;
};

/// Assertion that value <= tol (NaN fails).
inline Assertion at_most(std::string name, double value, double tol) { return {std::move(name), value, tol, value <= tol}; }
/// Assertion that value >= tol (NaN fails).
inline Assertion at_least(std::string name, double value, double tol) {
    return {std::move(name), value, tol, value >= tol};
}

/// CSV content: string cells, numbers pre-formatted by `num`.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::string num(double v) { return detail::fmt17(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }

struct RunRecord {
    std::string experiment;
    std::string timestamp;
    std::string config_hash;
    std::vector<Assertion> assertions;
    Table table;
    std::string error; ///< "Kind: message" when a module error aborted the run

    bool all_pass() const {
        if (!error.empty()) return false;
        return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
    }
};

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string to_csv(const Table& t) {
    std::string out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_escape(cells[i]);
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

inline nlohmann::ordered_json summary_json(const RunRecord& r) {
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    j["config_hash"] = r.config_hash;
    j["timestamp"] = r.timestamp;
    j["assertions"] = nlohmann::ordered_json::array();
    for (const auto& a : r.assertions)
        j["assertions"].push_back({{"name", a.name}, {"value", a.value}, {"tol", a.tol}, {"pass", a.pass}});
    if (!r.error.empty()) j["error"] = r.error;
    j["pass"] = r.all_pass();
    return j;
}

/// Writes <dir>/<experiment>.csv and <dir>/<experiment>.json.
inline void write_outputs(const RunRecord& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / (r.experiment + ".csv"));
        f << to_csv(r.table);
    }
    std::ofstream f(dir / (r.experiment + ".json"));
    f << summary_json(r).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// trajectories

/// A time series of front radii, times strictly increasing.
struct Series {
    std::vector<double> t;
    std::vector<double> R;
};

struct Comparison {
    double max_err = 0.0;
    double t_lo = 0.0, t_hi = 0.0;
    std::size_t points = 0;
};

namespace detail {
inline void check_series(const Series& s, const char* what) {
    if (s.t.empty() || s.t.size() != s.R.size()) throw RangeMismatch(std::string(what) + ": empty or ragged series");
    for (std::size_t i = 1; i < s.t.size(); ++i)
        if (!(s.t[i] > s.t[i - 1])) throw RangeMismatch(std::string(what) + ": time column not increasing");
}

inline double interpolate(const Series& s, double t) {
    const auto it = std::lower_bound(s.t.begin(), s.t.end(), t);
    const auto i = static_cast<std::size_t>(it - s.t.begin());
    if (i < s.t.size() && s.t[i] == t) return s.R[i];
    if (i == 0 || i == s.t.size()) throw RangeMismatch("time outside the series");
    const double w = (t - s.t[i - 1]) / (s.t[i] - s.t[i - 1]);
    return s.R[i - 1] + w * (s.R[i] - s.R[i - 1]);
}
} // namespace detail

/// Sup-norm radius discrepancy over the common time range, sampling at the
/// first series' times and interpolating the second linearly (exact where the
/// times coincide).
inline Comparison compare_trajectories(const Series& diffuse, const Series& sharp) {
    detail::check_series(diffuse, "diffuse");
    detail::check_series(sharp, "sharp");
    Comparison c;
    c.t_lo = std::max(diffuse.t.front(), sharp.t.front());
    c.t_hi = std::min(diffuse.t.back(), sharp.t.back());
    if (c.t_lo > c.t_hi) throw RangeMismatch("trajectories do not overlap in t1");
    for (std::size_t i = 0; i < diffuse.t.size(); ++i) {
        const double t = diffuse.t[i];
        if (t < c.t_lo || t > c.t_hi) continue;
        c.max_err = std::max(c.max_err, std::abs(diffuse.R[i] - detail::interpolate(sharp, t)));
        ++c.points;
    }
    if (c.points == 0) throw RangeMismatch("no sample times in the common range");
    return c;
}

struct ConvergenceRow {
    double eps = 0.0;
    double err = 0.0;
    double ratio = std::nan("");  ///< previous error / this error
    double order = std::nan("");  ///< log(ratio) / log(eps_prev / eps)
};

inline std::vector<ConvergenceRow> convergence_table(const std::vector<double>& eps, const std::vector<double>& err) {
    if (eps.size() != err.size()) throw std::invalid_argument("convergence_table: size mismatch");
    std::vector<ConvergenceRow> out;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        ConvergenceRow r{eps[i], err[i]};
        if (i > 0 && err[i] > 0.0 && err[i - 1] > 0.0) {
            r.ratio = err[i - 1] / err[i];
            r.order = std::log(r.ratio) / std::log(eps[i - 1] / eps[i]);
        }
        out.push_back(r);
    }
    return out;
}

/// Reads a time series from a CSV with a one-line header. The radius column
/// is "radius" or "R".
inline Series read_series_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw RangeMismatch(path + ": empty file");
    const auto head = detail::split(line, ",");
    long it = -1, ir = -1;
    for (std::size_t i = 0; i < head.size(); ++i) {
        const std::string h = detail::trim(head[i]);
        if (h == "t1") it = static_cast<long>(i);
        if (h == "radius" || h == "R") ir = static_cast<long>(i);
    }
    if (it < 0 || ir < 0) throw RangeMismatch(path + ": needs t1 and radius (or R) columns");
    Series s;
    while (std::getline(f, line)) {
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split(line, ",");
        const auto need = static_cast<std::size_t>(std::max(it, ir));
        if (cells.size() <= need) throw RangeMismatch(path + ": short row");
        const auto t = detail::to_double(cells[static_cast<std::size_t>(it)]);
        const auto R = detail::to_double(cells[static_cast<std::size_t>(ir)]);
        if (!t || !R) throw RangeMismatch(path + ": non-numeric cell");
        s.t.push_back(*t);
        s.R.push_back(*R);
    }
    return s;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// SHARPFLOW_THREADS if set to a positive integer, else the hardware count.
inline std::size_t thread_cap() {
    if (const char* v = std::getenv("SHARPFLOW_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(v, &end, 10);
        if (end != v && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs f(i) for i in [0, n) on at most `cap` threads. Results must be
/// written to per-index slots, so the outcome does not depend on scheduling.
template <class F> void parallel_for(std::size_t n, std::size_t cap, F&& f) {
    const std::size_t workers = std::min(n, std::max<std::size_t>(1, cap));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    f(i);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// experiments

namespace detail {
inline bool is_constant(const CoefficientField& f) { return f.kind() == FieldKind::constant; }

/// R(t1) for a centred sphere in constant fields: V = 2 a^2 / R.
inline double constant_field_radius(double a, double R0, double t1) {
    return std::sqrt(std::max(0.0, R0 * R0 - 4.0 * a * a * t1));
}

inline SharpTrajectory sharp_at(const ExperimentConfig& c, const std::vector<double>& times, double tol) {
    SharpOptions o;
    o.drift = c.drift;
    o.output_times = times;
    return evolve_sharp_radial({c.R0, times.front()}, c.a, c.b, times.back(), tol, o);
}
} // namespace detail

inline RunRecord verify_integrals(const ExperimentConfig& c) {
    RunRecord r;
    r.table.header = {"beta", "moment", "closed", "quadrature", "diff", "argument_reading", "printed"};
    for (double beta : c.betas) {
        const InnerProfile p = make_profile(1.0, beta);
        CorrectionInputs in;
        in.a = 1.0;
        in.b = beta;
        in.H = c.H;
        in.K = c.K;
        const MomentTable t = moments(p, in, false);
        const ScalingCandidates s3 = z2Uz3_candidates(beta), s4 = z2U0UzUzz_candidates(beta),
                                s5 = z2U02Uz2_candidates(1.0, beta);
        for (const MomentEntry* e : t.entries()) {
            const ScalingCandidates* sc = e == &t.m_z2Uz3      ? &s3
                                          : e == &t.m_z2U0UzUzz ? &s4
                                          : e == &t.m_z2U02Uz2  ? &s5
                                                                : nullptr;
            r.table.rows.push_back({num(beta), e->name, num(e->closed), num(e->quadrature), num(e->diff()),
                                    sc ? num(sc->argument_reading) : "", e->printed ? num(*e->printed) : ""});
            r.assertions.push_back(at_most("beta=" + num(beta) + " " + e->name, e->diff(), c.moment_tol));
        }
        if (beta == 1.0) {
            // the reference values at beta = 1, quadrature against the constants
            const std::array<std::pair<const MomentEntry*, double>, 7> ref = {{
                {&t.i2, 4.0 / 3.0},
                {&t.m_zUzUzz, -2.0 / 3.0},
                {&t.m_zU0Uz2, 1.0 / 3.0},
                {&t.m_U0Uz2, 0.0},
                {&t.m_z2Uz3, 4.0 * pi2 / 45.0 - 2.0 / 3.0},
                {&t.m_z2U0UzUzz, -2.0 * pi2 / 45.0},
                {&t.m_z2U02Uz2, pi2 / 45.0},
            }};
            for (const auto& [e, v] : ref)
                r.assertions.push_back(at_most("reference " + e->name, std::abs(e->quadrature - v), c.moment_tol));
        }
    }
    return r;
}

inline RunRecord reduce_check(const ExperimentConfig& c) {
    if (!detail::is_constant(c.a) || !detail::is_constant(c.b))
        throw ConfigError("reduce-check needs constant fields a and b");
    const PointFields f = sample_point_fields(c.a, c.b, {});
    const double a = f.a.value, a2 = a * a, a4 = a2 * a2;
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-4.0, 4.0);
    RunRecord r;
    r.table.header = {"sample", "H", "K", "lap_s_H", "V", "expected", "diff"};
    double worst = 0.0, alpha_spread = 0.0;
    for (std::size_t k = 0; k < c.samples; ++k) {
        FrontGeometry g;
        g.H = U(rng);
        g.K = U(rng);
        g.lap_s_H = U(rng);
        g.normal = {1.0, 0.0, 0.0};
        const DriftCoefficients d = drift_coefficients(c.drift, f, g.H, g.grad_s_H, g.lap_s_H);
        const double V = velocity(f, g, d);
        const double expected = a2 * g.H - 2.0 * a4 * g.lap_s_H + 4.0 * a4 * g.H * (g.K - g.H * g.H / 4.0);
        const double diff = std::abs(V - expected);
        worst = std::max(worst, diff);
        r.table.rows.push_back({num(k), num(g.H), num(g.K), num(g.lap_s_H), num(V), num(expected), num(diff)});
        if (k < 20) {
            double lo = INFINITY, hi = -INFINITY;
            for (double alpha : {0.0, 1.0, -3.0}) {
                const double v = velocity_from_balance(f, g, d, alpha);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            alpha_spread = std::max(alpha_spread, hi - lo);
        }
    }
    r.assertions.push_back(at_most("reduction identity max deviation", worst, c.reduce_tol));
    r.assertions.push_back(at_most("balance velocity spread over alpha in {0,1,-3}", alpha_spread, c.alpha_tol));
    return r;
}

inline RunRecord evolve_sharp(const ExperimentConfig& c) {
    if (!c.a.radially_symmetric() || !c.b.radially_symmetric())
        throw ConfigError("evolve-sharp needs radially symmetric fields");
    SharpOptions o;
    o.drift = c.drift;
    if (c.output_interval > 0.0)
        for (double t = 0.0; t <= c.t1_end * (1.0 + 1e-12); t += c.output_interval) o.output_times.push_back(t);
    const double tol = c.effective_tol();
    const SharpTrajectory tr = evolve_sharp_radial({c.R0, 0.0}, c.a, c.b, c.t1_end, tol, o);
    RunRecord r;
    r.table.header = {"t1", "R", "V"};
    for (const auto& s : tr.records) r.table.rows.push_back({num(s.t1), num(s.R), num(s.V)});
    if (detail::is_constant(c.a) && detail::is_constant(c.b)) {
        const double a = c.a.value({});
        double err = 0.0;
        // the closed form is ill-conditioned near collapse (dR/dt ~ 1/R)
        for (const auto& s : tr.records)
            if (s.R >= 0.2 * c.R0) err = std::max(err, std::abs(s.R - detail::constant_field_radius(a, c.R0, s.t1)));
        r.assertions.push_back(at_most("closed form global error (R >= R0/5)", err, c.closed_form_tol));
        if (tr.extinction_time) {
            const double exact = c.R0 * c.R0 / (4.0 * a * a);
            r.assertions.push_back(at_most("extinction time", std::abs(*tr.extinction_time - exact), c.extinction_tol));
        }
    }
    return r;
}

/// One diffuse run with its sharp comparison, shared by evolve-diffuse and
/// converge.
struct DiffuseOutcome {
    double eps = 0.0, h = 0.0;
    std::size_t n_points = 0;
    DiffuseTrajectory traj;
    PhaseState final_state;
    double sharp_err = std::nan("");
    double far_field = 0.0;
    double max_abs_u = 0.0;
};

inline DiffuseOutcome run_diffuse(const ExperimentConfig& c, double eps) {
    DiffuseOutcome o;
    o.eps = eps;
    o.n_points = c.node_count(eps);
    const DiffuseSolver S(DiffuseProblem::spherical(c.a, c.b, eps, c.grid_radius(eps), o.n_points, c.stencil));
    o.h = S.problem().grid().h();
    PhaseState s = S.problem().initial_state(c.R0);
    DtPolicy pol;
    pol.tol = c.effective_tol();
    pol.output_interval = c.output_interval;
    o.traj = S.run_to(s, c.t1_end, pol);
    o.final_state = s;

    const auto r = S.problem().grid().nodes();
    const double R = o.traj.records.back().radius;
    for (std::size_t i = 0; i < r.size(); ++i) {
        o.max_abs_u = std::max(o.max_abs_u, std::abs(s.u[i]));
        if (std::abs(r[i] - R) > 10.0 * eps) o.far_field = std::max(o.far_field, std::abs(std::abs(s.u[i]) - 1.0));
    }
    if (c.a.radially_symmetric() && c.b.radially_symmetric()) {
        Series d;
        for (const auto& rec : o.traj.records) {
            d.t.push_back(rec.t1);
            d.R.push_back(rec.radius);
        }
        if (d.t.size() >= 2) {
            const SharpTrajectory sh = detail::sharp_at(c, d.t, 1e-10);
            Series sp;
            for (const auto& rec : sh.records) {
                sp.t.push_back(rec.t1);
                sp.R.push_back(rec.R);
            }
            o.sharp_err = compare_trajectories(d, sp).max_err;
        }
    }
    return o;
}

inline RunRecord evolve_diffuse(const ExperimentConfig& c) {
    const double eps = c.eps.front();
    const DiffuseOutcome o = run_diffuse(c, eps);
    RunRecord r;
    r.table.header = {"t1", "radius", "F_eps", "dt1"};
    for (const auto& rec : o.traj.records) r.table.rows.push_back({num(rec.t1), num(rec.radius), num(rec.F_eps), num(rec.dt1)});
    r.assertions.push_back(at_most("resolution h / (eps/8)", o.h / (eps / 8.0), 1.0 + 1e-12));
    r.assertions.push_back(at_most("energy increase per accepted step", o.traj.max_energy_increase, c.energy_slack));
    r.assertions.push_back(at_most("max |u|", o.max_abs_u, 1.1));
    if (eps <= 0.05) r.assertions.push_back(at_most("far field | |u| - 1 |", o.far_field, 1e-3));
    if (!std::isnan(o.sharp_err)) r.assertions.push_back(at_most("sup radius error vs sharp law", o.sharp_err, eps));
    return r;
}

inline RunRecord converge(const ExperimentConfig& c) {
    if (!c.a.radially_symmetric() || !c.b.radially_symmetric())
        throw ConfigError("converge needs radially symmetric fields");
    std::vector<DiffuseOutcome> out(c.eps.size());
    parallel_for(c.eps.size(), thread_cap(), [&](std::size_t i) { out[i] = run_diffuse(c, c.eps[i]); });
    std::vector<double> errs;
    for (const auto& o : out) errs.push_back(o.sharp_err);
    const auto conv = convergence_table(c.eps, errs);
    RunRecord r;
    r.table.header = {"eps",      "n_points", "h",        "max_err",  "ratio",
                      "order",    "accepted", "rejected", "max_energy_increase"};
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& o = out[i];
        r.table.rows.push_back({num(o.eps), num(o.n_points), num(o.h), num(o.sharp_err), num(conv[i].ratio),
                                num(conv[i].order), num(o.traj.accepted), num(o.traj.rejected),
                                num(o.traj.max_energy_increase)});
        r.assertions.push_back(at_most("eps=" + num(o.eps) + " energy increase per accepted step",
                                       o.traj.max_energy_increase, c.energy_slack));
        if (i > 0) r.assertions.push_back(at_least("error ratio eps=" + num(c.eps[i - 1]) + " -> " + num(o.eps),
                                                   conv[i].ratio, c.min_ratio));
    }
    return r;
}

inline RunRecord lapd_check(const ExperimentConfig& c) {
    RunRecord r;
    r.table.header = {"surface", "eps", "exact", "expansion", "diff"};
    const Vec3 dir{std::cos(c.theta), 0.0, std::sin(c.theta)};
    const std::array<std::pair<std::string, AnalyticSurface>, 2> surfaces = {{
        {"sphere", AnalyticSurface::sphere(c.sphere_R)},
        {"torus", AnalyticSurface::torus(c.torus_R, c.torus_r)},
    }};
    for (const auto& [name, s] : surfaces) {
        // front point in the direction theta (meridian angle on the torus)
        const Vec3 p = s.kind == AnalyticSurface::Kind::sphere
                           ? dir * s.R
                           : Vec3{s.R + s.r * dir.x, 0.0, s.r * dir.z};
        const FrontGeometry g = surface_geometry(s, p).front;
        std::vector<double> diffs;
        for (double e : c.eps) {
            const Vec3 x = p + g.normal * (e * c.z);
            const double exact = exact_lap_d(s, x);
            const double expansion = lap_d_expansion(g, e, c.z);
            diffs.push_back(std::abs(exact - expansion));
            r.table.rows.push_back({name, num(e), num(exact), num(expansion), num(diffs.back())});
        }
        r.assertions.push_back(at_least(name + " fitted eps-order", loglog_slope(c.eps, diffs), c.min_slope));
    }
    return r;
}

/// Dispatches one experiment. Module errors propagate; the CLI records them.
inline RunRecord run(const ExperimentConfig& c) {
    RunRecord r;
    switch (c.experiment) {
    case Experiment::verify_integrals: r = verify_integrals(c); break;
    case Experiment::reduce_check: r = reduce_check(c); break;
    case Experiment::evolve_sharp: r = evolve_sharp(c); break;
    case Experiment::evolve_diffuse: r = evolve_diffuse(c); break;
    case Experiment::converge: r = converge(c); break;
    case Experiment::lapd_check: r = lapd_check(c); break;
    }
    r.experiment = std::string(name_of(c.experiment));
    r.config_hash = config_hash(c);
    r.timestamp = utc_timestamp();
    return r;
}

} // namespace sharpflow::harness
