#pragma once

// Experiment configuration: a flat INI-style file, one [section] per
// experiment, keys before the first section are shared defaults.
//
//   # comment
//   a = constant 1
//   [converge]
//   eps = 0.08, 0.04, 0.02

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sharpflow/diffuse.hpp"
#include "sharpflow/errors.hpp"
#include "sharpflow/fields.hpp"
#include "sharpflow/motionlaw.hpp"

namespace sharpflow::harness {

enum class Experiment { verify_integrals, reduce_check, evolve_sharp, evolve_diffuse, converge, lapd_check };

inline constexpr std::array<std::pair<Experiment, std::string_view>, 6> experiment_names = {{
    {Experiment::verify_integrals, "verify-integrals"},
    {Experiment::reduce_check, "reduce-check"},
    {Experiment::evolve_sharp, "evolve-sharp"},
    {Experiment::evolve_diffuse, "evolve-diffuse"},
    {Experiment::converge, "converge"},
    {Experiment::lapd_check, "lapd-check"},
}};

inline std::string_view name_of(Experiment e) {
    for (const auto& [k, n] : experiment_names)
        if (k == e) return n;
    return "?";
}

inline Experiment parse_experiment(std::string_view s) {
    for (const auto& [k, n] : experiment_names)
        if (n == s) return k;
    throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

using Section = std::map<std::string, std::string>;

struct IniFile {
    Section defaults;
    std::map<std::string, Section> sections;
};

namespace detail {
inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> to_double(std::string_view s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string> split(std::string_view s, std::string_view seps) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (seps.find(c) != std::string_view::npos) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace detail

inline IniFile parse_ini(std::string_view text) {
    IniFile ini;
    Section* cur = &ini.defaults;
    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            const std::string name = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            if (ini.sections.contains(name))
                throw ConfigError("line " + std::to_string(lineno) + ": duplicate section [" + name + "]");
            cur = &ini.sections[name];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (cur->contains(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        (*cur)[key] = detail::trim(std::string_view(line).substr(eq + 1));
    }
    return ini;
}

inline IniFile load_ini(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_ini(ss.str());
}

/// Field spec grammar: factor ('*' factor)*, each factor one of
///   constant c | bump base amp sigma [cx cy cz] | affine c0 g1 g2 g3
inline CoefficientField parse_field_spec(std::string_view spec) {
    std::vector<CoefficientField> factors;
    for (const auto& part : detail::split(spec, "*")) {
        const auto tok = detail::split(part, " \t,");
        if (tok.empty()) throw ConfigError("empty field factor in '" + std::string(spec) + "'");
        std::vector<double> v;
        for (std::size_t i = 1; i < tok.size(); ++i) {
            const auto d = detail::to_double(tok[i]);
            if (!d) throw ConfigError("bad number '" + tok[i] + "' in field spec '" + std::string(spec) + "'");
            v.push_back(*d);
        }
        const std::string& kind = tok[0];
        try {
            if (kind == "constant" && v.size() == 1) {
                factors.push_back(CoefficientField::constant(v[0]));
            } else if (kind == "bump" && (v.size() == 3 || v.size() == 6)) {
                const Vec3 c = v.size() == 6 ? Vec3{v[3], v[4], v[5]} : Vec3{};
                factors.push_back(CoefficientField::radial_bump(v[0], v[1], v[2], c));
            } else if (kind == "affine" && v.size() == 4) {
                factors.push_back(CoefficientField::affine(v[0], {v[1], v[2], v[3]}));
            } else {
                throw ConfigError("cannot parse field factor '" + detail::trim(part) + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (factors.empty()) throw ConfigError("empty field spec");
    return factors.size() == 1 ? factors[0] : CoefficientField::product(std::move(factors));
}

struct ExperimentConfig {
    Experiment experiment = Experiment::verify_integrals;
    Section values; ///< merged raw key/values (defaults then section)

    CoefficientField a = CoefficientField::constant(1.0);
    CoefficientField b = CoefficientField::constant(1.0);

    // geometry
    double R0 = 1.0;
    double r_max = 0.0;          ///< 0: R0 + far_field_widths * eps, at least 1.5 R0
    std::size_t n_points = 0;    ///< 0: from points_per_eps
    double points_per_eps = 8.0; ///< h = eps / points_per_eps
    double far_field_widths = 20.0;

    // solver
    std::vector<double> eps{0.05};
    double tol = 0.0; ///< 0: experiment default
    double t1_end = 0.1;
    double output_interval = 1e-3;
    DriftForm drift = DriftForm::printed;
    Stencil stencil = Stencil::corrected;

    // sampled checks
    std::uint64_t seed = 1;
    std::size_t samples = 1000;

    // profile / geometry probes
    std::vector<double> betas{1.0};
    double H = 2.0;
    double K = 0.5;
    double sphere_R = 1.0;
    double torus_R = 2.0;
    double torus_r = 0.5;
    double theta = 0.7;
    double z = 1.0;

    // assertion thresholds
    double moment_tol = 1e-8;
    double reduce_tol = 1e-12;
    double alpha_tol = 1e-12;
    double closed_form_tol = 1e-8;
    double extinction_tol = 1e-6;
    double min_ratio = 1.5;
    double min_slope = 1.9;
    double energy_slack = 1e-10;

    double effective_tol() const {
        if (tol > 0.0) return tol;
        switch (experiment) {
        case Experiment::evolve_sharp: return 1e-10;
        case Experiment::evolve_diffuse:
        case Experiment::converge: return 1e-7;
        default: return 1e-10;
        }
    }

    double domain_radius(double e) const {
        return r_max > 0.0 ? r_max : std::max(R0 + far_field_widths * e, 1.5 * R0);
    }

    /// Node count with h <= eps / points_per_eps; r_max is rounded up to a
    /// whole number of cells when it is derived.
    std::size_t node_count(double e) const {
        if (n_points > 0) return n_points;
        const double h = e / points_per_eps;
        return static_cast<std::size_t>(std::ceil(domain_radius(e) / h - 1e-9)) + 1;
    }
    double grid_radius(double e) const {
        if (r_max > 0.0 || n_points > 0) return domain_radius(e);
        return (e / points_per_eps) * static_cast<double>(node_count(e) - 1);
    }
};

namespace detail {
inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> k = {
        "a", "b", "a_floor", "b_floor", "R0", "r_max", "n_points", "points_per_eps", "far_field_widths", "eps", "tol",
        "t1_end", "output_interval", "drift", "stencil", "seed", "samples", "betas", "H", "K", "sphere_R", "torus_R",
        "torus_r", "theta", "z", "moment_tol", "reduce_tol", "alpha_tol", "closed_form_tol", "extinction_tol",
        "min_ratio", "min_slope", "energy_slack"};
    return k;
}

inline std::vector<double> number_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& t : split(v, " \t,")) {
        const auto d = to_double(t);
        if (!d) throw ConfigError(key + ": bad number '" + t + "'");
        out.push_back(*d);
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

inline double number(const std::string& key, const std::string& v) {
    const auto d = to_double(v);
    if (!d) throw ConfigError(key + ": bad number '" + v + "'");
    return *d;
}

inline double positive(const std::string& key, const std::string& v) {
    const double d = number(key, v);
    if (!(d > 0.0)) throw ConfigError(key + " must be positive");
    return d;
}

inline std::size_t count(const std::string& key, const std::string& v) {
    const double d = number(key, v);
    if (!(d >= 0.0) || d != std::floor(d) || d > 1e15) throw ConfigError(key + " must be a non-negative integer");
    return static_cast<std::size_t>(d);
}
} // namespace detail

/// Builds the typed config for one experiment from the shared defaults and the
/// experiment's own section (which may be absent).
inline ExperimentConfig load_experiment(const IniFile& ini, Experiment which) {
    using namespace detail;
    ExperimentConfig c;
    c.experiment = which;
    c.values = ini.defaults;
    if (const auto it = ini.sections.find(std::string(name_of(which))); it != ini.sections.end())
        for (const auto& [k, v] : it->second) c.values[k] = v;
    for (const auto& [k, v] : c.values)
        if (!known_keys().contains(k)) throw ConfigError("unknown key '" + k + "'");

    const auto get = [&](const char* k) -> const std::string* {
        const auto it = c.values.find(k);
        return it == c.values.end() ? nullptr : &it->second;
    };
    if (auto v = get("a")) c.a = parse_field_spec(*v);
    if (auto v = get("b")) c.b = parse_field_spec(*v);
    if (auto v = get("a_floor")) c.a.with_floor(positive("a_floor", *v));
    if (auto v = get("b_floor")) c.b.with_floor(positive("b_floor", *v));
    if (auto v = get("R0")) c.R0 = positive("R0", *v);
    if (auto v = get("r_max")) c.r_max = positive("r_max", *v);
    if (auto v = get("n_points")) {
        c.n_points = count("n_points", *v);
        if (c.n_points < 3) throw ConfigError("n_points must be at least 3");
    }
    if (auto v = get("points_per_eps")) c.points_per_eps = positive("points_per_eps", *v);
    if (auto v = get("far_field_widths")) c.far_field_widths = positive("far_field_widths", *v);
    if (auto v = get("eps")) c.eps = number_list("eps", *v);
    if (auto v = get("tol")) c.tol = positive("tol", *v);
    if (auto v = get("t1_end")) {
        c.t1_end = number("t1_end", *v);
        if (c.t1_end < 0.0) throw ConfigError("t1_end must be non-negative");
    }
    if (auto v = get("output_interval")) {
        c.output_interval = number("output_interval", *v);
        if (c.output_interval < 0.0) throw ConfigError("output_interval must be non-negative");
    }
    if (auto v = get("drift")) {
        if (*v == "printed") c.drift = DriftForm::printed;
        else if (*v == "rederived") c.drift = DriftForm::rederived;
        else throw ConfigError("drift must be 'printed' or 'rederived'");
    }
    if (auto v = get("stencil")) {
        if (*v == "corrected") c.stencil = Stencil::corrected;
        else if (*v == "standard") c.stencil = Stencil::standard;
        else throw ConfigError("stencil must be 'corrected' or 'standard'");
    }
    if (auto v = get("seed")) c.seed = count("seed", *v);
    if (auto v = get("samples")) c.samples = count("samples", *v);
    if (auto v = get("betas")) c.betas = number_list("betas", *v);
    if (auto v = get("H")) c.H = number("H", *v);
    if (auto v = get("K")) c.K = number("K", *v);
    if (auto v = get("sphere_R")) c.sphere_R = positive("sphere_R", *v);
    if (auto v = get("torus_R")) c.torus_R = positive("torus_R", *v);
    if (auto v = get("torus_r")) c.torus_r = positive("torus_r", *v);
    if (auto v = get("theta")) c.theta = number("theta", *v);
    if (auto v = get("z")) c.z = number("z", *v);
    for (auto [key, dst] : {std::pair{"moment_tol", &c.moment_tol}, {"reduce_tol", &c.reduce_tol},
                            {"alpha_tol", &c.alpha_tol}, {"closed_form_tol", &c.closed_form_tol},
                            {"extinction_tol", &c.extinction_tol}, {"min_ratio", &c.min_ratio},
                            {"min_slope", &c.min_slope}, {"energy_slack", &c.energy_slack}})
        if (auto v = get(key)) *dst = positive(key, *v);

    for (double e : c.eps)
        if (!(e > 0.0)) throw ConfigError("eps values must be positive");
    for (double bt : c.betas)
        if (!(bt > 0.0)) throw ConfigError("betas must be positive");
    if (which == Experiment::converge) {
        if (c.eps.size() < 2) throw ConfigError("converge needs at least two eps values");
        for (std::size_t i = 1; i < c.eps.size(); ++i)
            if (!(c.eps[i] < c.eps[i - 1])) throw ConfigError("eps list must be strictly decreasing for converge");
    }
    if (which == Experiment::lapd_check && c.eps.size() < 2) throw ConfigError("lapd-check needs at least two eps");
    if (!(c.torus_r < c.torus_R)) throw ConfigError("torus_r must be smaller than torus_R");
    return c;
}

/// Every typed setting, one per line, numbers at 17 digits and fields in
/// their describe() form. Defaults are spelled out, so leaving a key out and
/// setting it to its default render the same.
inline std::string canonical(const ExperimentConfig& c) {
    using detail::fmt17;
    std::ostringstream os;
    const auto list = [](const std::vector<double>& v) {
        std::string s;
        for (double x : v) s += (s.empty() ? "" : ",") + fmt17(x);
        return s;
    };
    os << "experiment=" << name_of(c.experiment) << '\n'
       << "a=" << c.a.describe() << '\n'
       << "a_floor=" << fmt17(c.a.floor()) << '\n'
       << "b=" << c.b.describe() << '\n'
       << "b_floor=" << fmt17(c.b.floor()) << '\n'
       << "R0=" << fmt17(c.R0) << '\n'
       << "r_max=" << fmt17(c.r_max) << '\n'
       << "n_points=" << c.n_points << '\n'
       << "points_per_eps=" << fmt17(c.points_per_eps) << '\n'
       << "far_field_widths=" << fmt17(c.far_field_widths) << '\n'
       << "eps=" << list(c.eps) << '\n'
       << "tol=" << fmt17(c.effective_tol()) << '\n'
       << "t1_end=" << fmt17(c.t1_end) << '\n'
       << "output_interval=" << fmt17(c.output_interval) << '\n'
       << "drift=" << (c.drift == DriftForm::printed ? "printed" : "rederived") << '\n'
       << "stencil=" << (c.stencil == Stencil::corrected ? "corrected" : "standard") << '\n'
       << "seed=" << c.seed << '\n'
       << "samples=" << c.samples << '\n'
       << "betas=" << list(c.betas) << '\n'
       << "H=" << fmt17(c.H) << '\n'
       << "K=" << fmt17(c.K) << '\n'
       << "sphere_R=" << fmt17(c.sphere_R) << '\n'
       << "torus_R=" << fmt17(c.torus_R) << '\n'
       << "torus_r=" << fmt17(c.torus_r) << '\n'
       << "theta=" << fmt17(c.theta) << '\n'
       << "z=" << fmt17(c.z) << '\n'
       << "thresholds=" << list({c.moment_tol, c.reduce_tol, c.alpha_tol, c.closed_form_tol, c.extinction_tol,
                                 c.min_ratio, c.min_slope, c.energy_slack})
       << '\n';
    return os.str();
}

/// 64-bit FNV-1a of canonical(c), as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canonical(c)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace sharpflow::harness
