#include "lvstab/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "lvstab/dynamics.hpp"
#include "lvstab/errors.hpp"
#include "lvstab/io.hpp"
#include "lvstab/linstab.hpp"

namespace lvstab::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::string> kCommands{"theta", "steady", "spectrum", "verify", "evolve", "sweep"};

double parse_number(const std::string& token, const std::string& context) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != token.size() || !std::isfinite(value)) {
        throw InvalidArgument(fmt::format("{}: '{}' is not a number", context, token));
    }
    return value;
}

// "pi", "2pi", "2*pi", "pi/2", "1.5" and friends.
double parse_endpoint(std::string token) {
    if (token.empty()) throw InvalidArgument("domain: empty endpoint");
    double divisor = 1.0;
    if (const auto slash = token.find('/'); slash != std::string::npos) {
        divisor = parse_number(token.substr(slash + 1), "domain");
        token = token.substr(0, slash);
        if (divisor == 0.0) throw InvalidArgument("domain: division by zero");
    }
    const auto pos = token.find("pi");
    if (pos == std::string::npos) return parse_number(token, "domain") / divisor;
    if (pos + 2 != token.size()) throw InvalidArgument(fmt::format("domain: bad endpoint '{}'", token));
    std::string factor = token.substr(0, pos);
    if (!factor.empty() && factor.back() == '*') factor.pop_back();
    const double f = factor.empty() ? 1.0 : factor == "-" ? -1.0 : parse_number(factor, "domain");
    return f * std::numbers::pi / divisor;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return parts;
}

// Rounds to 12 significant digits so 0.1 + 2 * 0.1 prints as 0.3.
double snap(double x) { return std::stod(fmt::format("{:.12g}", x)); }

std::vector<int> to_ints(const std::vector<double>& values, const std::string& what) {
    std::vector<int> out;
    for (double v : values) {
        if (v != std::floor(v) || std::abs(v) > 1e9) throw InvalidArgument(fmt::format("{}: {} is not an integer", what, v));
        out.push_back(static_cast<int>(v));
    }
    return out;
}

// ---------------------------------------------------------------- config JSON

json config_to_json(const RunConfig& c) {
    json j;
    j["domain"] = c.domain;
    j["n"] = c.n;
    j["ny"] = c.ny;
    j["a"] = c.a;
    j["a0"] = c.a0;
    j["a1"] = c.a1;
    j["b"] = c.b;
    j["c"] = c.c;
    j["tol"] = c.tol;
    j["k"] = c.k;
    j["weight"] = c.weight;
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["amplitude"] = c.amplitude;
    j["perturbation"] = c.perturbation;
    j["store_every"] = c.store_every;
    j["snapshots"] = c.snapshots;
    j["seed"] = c.seed;
    j["format"] = c.format;
    j["workers"] = c.workers;
    j["timings"] = c.timings;
    json sweep = json::object();
    if (c.sweep.a) sweep["a"] = *c.sweep.a;
    if (c.sweep.b) sweep["b"] = *c.sweep.b;
    if (c.sweep.c) sweep["c"] = *c.sweep.c;
    if (c.sweep.n) sweep["n"] = *c.sweep.n;
    j["sweep"] = sweep;
    return j;
}

template <class T>
void read_key(const json& j, const char* key, T& target) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument(fmt::format("config: key '{}' has the wrong type", key));
    }
}

// The growth rate may be given as a number or a descriptor string.
void read_growth(const json& j, std::string& target) {
    if (!j.contains("a")) return;
    const json& a = j.at("a");
    if (a.is_number()) {
        target = fmt::format("{:.17g}", a.get<double>());
    } else if (a.is_string()) {
        target = a.get<std::string>();
    } else {
        throw InvalidArgument("config: key 'a' must be a number or a string");
    }
}

template <class T>
void read_axis(const json& sweep, const char* key, std::optional<std::vector<T>>& target) {
    if (!sweep.contains(key)) return;
    const json& axis = sweep.at(key);
    try {
        if (axis.is_string()) {
            const std::vector<double> values = parse_list(axis.get<std::string>());
            if constexpr (std::is_same_v<T, int>) {
                target = to_ints(values, fmt::format("sweep.{}", key));
            } else {
                target = values;
            }
        } else {
            target = axis.get<std::vector<T>>();
        }
    } catch (const json::exception&) {
        throw InvalidArgument(fmt::format("config: sweep axis '{}' must be a list or a range string", key));
    }
}

// -------------------------------------------------------------- output helpers

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<bool> integer;  ///< per column
};

std::string cell(double x, bool integer) {
    return integer ? fmt::format("{}", static_cast<long long>(x)) : format_real(x);
}

void write_table(const fs::path& stem, const Table& t, const std::string& format) {
    if (format == "json") {
        json j = json::object();
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            json col = json::array();
            for (const auto& row : t.rows) {
                if (t.integer[c]) {
                    col.push_back(static_cast<long long>(row[c]));
                } else {
                    col.push_back(row[c]);
                }
            }
            j[t.columns[c]] = std::move(col);
        }
        std::ofstream(fs::path(stem).concat(".json")) << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(fs::path(stem).concat(".csv"));
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell(row[c], t.integer[c]);
        out << '\n';
    }
}

Table field_table(const Field& f) {
    const Grid& g = f.grid();
    Table t;
    t.columns = {"index", "coord1"};
    if (g.dimension() == 2) t.columns.push_back("coord2");
    t.columns.push_back("value");
    t.integer.assign(t.columns.size(), false);
    t.integer[0] = true;
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::vector<double> row{static_cast<double>(i), g.coordinate(i, 0)};
        if (g.dimension() == 2) row.push_back(g.coordinate(i, 1));
        row.push_back(f.values()[static_cast<Eigen::Index>(i)]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_field(const fs::path& stem, const Field& f, const std::string& format) {
    if (format == "csv") {
        write_field_csv(fs::path(stem).concat(".csv"), f);
    } else {
        write_table(stem, field_table(f), format);
    }
}

void write_json(const fs::path& path, const json& j) { std::ofstream(path) << j.dump(2) << '\n'; }

json grid_json(const Grid& g) {
    json j;
    j["dimension"] = g.dimension();
    j["nodes"] = g.size();
    j["resolution"] = g.dimension() == 1 ? json::array({g.resolution(0)})
                                         : json::array({g.resolution(0), g.resolution(1)});
    j["spacing"] = g.dimension() == 1 ? json::array({g.spacing(0)}) : json::array({g.spacing(0), g.spacing(1)});
    return j;
}

// NaN and infinities become null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string family_name(ModeFamily f) { return f == ModeFamily::s_weight ? "a-s*theta" : "a-2*theta"; }

json report_json(const StabilityReport& r) {
    json j;
    j["verdict"] = to_string(r.verdict);
    j["cause"] = r.cause;
    j["s"] = number(r.s_value);
    j["z1"] = number(r.z1);
    j["z2"] = number(r.z2);
    j["degenerate"] = r.degenerate;
    j["degenerate_band"] = r.degenerate_band;
    j["mu1"] = number(r.mu1);
    j["max_rel_mismatch"] = number(r.max_rel_mismatch);
    j["mismatch_threshold"] = number(r.mismatch_threshold);
    j["max_imag"] = number(r.max_imag);
    j["duplicated_claim_mismatch"] = number(r.duplicated_claim_mismatch);
    j["theta_residual"] = number(r.theta_residual);
    j["lambda1_of_a"] = number(r.lambda1_of_a);
    json re = json::array();
    json im = json::array();
    for (const auto& z : r.coupled_eigs) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    j["coupled_re"] = re;
    j["coupled_im"] = im;
    j["predicted"] = r.predicted_eigs;
    json fam = json::array();
    for (auto f : r.predicted_family) fam.push_back(family_name(f));
    j["predicted_family"] = fam;
    j["rel_errors"] = r.rel_errors;
    j["ratio_errors"] = r.ratio_errors;
    return j;
}

class Subcritical : public Error {
public:
    Subcritical(double threshold, double lambda1)
        : Error(fmt::format("subcritical: a ≤ λ₁ ≈ {:.6g} (lambda_1(a) = {:.6g} >= 0, only the zero "
                            "solution exists)",
                            threshold, lambda1)) {}
};

[[noreturn]] void rethrow_subcritical(const Grid& grid, const SubcriticalError& e) {
    throw Subcritical(principal_laplacian_eigenvalue(grid), e.lambda1());
}

LogisticSolution logistic(const RunConfig& cfg, const Grid& grid, const Field& a) {
    try {
        return solve_logistic(grid, a, cfg.tol);
    } catch (const SubcriticalError& e) {
        rethrow_subcritical(grid, e);
    }
}

struct Context {
    const RunConfig& cfg;
    fs::path dir;
    std::ostream& out;
};

// ------------------------------------------------------------------ commands

int cmd_theta(const Context& ctx) {
    const Grid grid = make_grid(ctx.cfg);
    const Field a = make_growth(ctx.cfg, grid);
    const LogisticSolution sol = logistic(ctx.cfg, grid, a);
    write_field(ctx.dir / "theta", sol.theta, ctx.cfg.format);
    json s;
    s["residual_norm"] = sol.residual_norm;
    s["newton_iterations"] = sol.newton_iterations;
    s["lambda1_of_a"] = sol.lambda1_of_a;
    s["theta_max"] = sol.theta.max();
    s["theta_min"] = sol.theta.min();
    s["grid"] = grid_json(grid);
    write_json(ctx.dir / "summary.json", s);
    ctx.out << fmt::format("theta: max {:.10g}, residual {:.3e}, {} Newton iterations\n", sol.theta.max(),
                           sol.residual_norm, sol.newton_iterations);
    return 0;
}

int cmd_steady(const Context& ctx) {
    const Grid grid = make_grid(ctx.cfg);
    const ModelParams params{make_growth(ctx.cfg, grid), ctx.cfg.b, ctx.cfg.c};
    const LogisticSolution sol = logistic(ctx.cfg, grid, params.a);
    const SteadyState st = synchronized_state(params, sol);
    const SystemResidual res = system_residual(st.u, st.v, params);
    write_field(ctx.dir / "u", st.u, ctx.cfg.format);
    write_field(ctx.dir / "v", st.v, ctx.cfg.format);
    write_field(ctx.dir / "theta", st.theta, ctx.cfg.format);
    json s;
    s["alpha"] = st.alpha;
    s["beta"] = st.beta;
    s["ratio_u_over_v"] = st.alpha / st.beta;
    s["residual_u"] = res.r_u;
    s["residual_v"] = res.r_v;
    s["theta_residual"] = sol.residual_norm;
    s["newton_iterations"] = sol.newton_iterations;
    s["lambda1_of_a"] = sol.lambda1_of_a;
    s["grid"] = grid_json(grid);
    write_json(ctx.dir / "summary.json", s);
    ctx.out << fmt::format("steady: alpha {:.10g}, beta {:.10g}, residuals {:.3e} / {:.3e}\n", st.alpha, st.beta,
                           res.r_u, res.r_v);
    return 0;
}

int cmd_spectrum(const Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const Grid grid = make_grid(cfg);
    const Field a = make_growth(cfg, grid);
    double multiplier = 0.0;
    if (cfg.weight == "a-theta") multiplier = 1.0;
    if (cfg.weight == "a-2theta") multiplier = 2.0;
    if (cfg.weight == "a-s-theta") multiplier = s_parameter(cfg.b, cfg.c);
    Field weight = a;
    if (multiplier != 0.0) {
        const LogisticSolution sol = logistic(cfg, grid, a);
        weight = Field(grid, (a.values().array() - multiplier * sol.theta.values().array()).matrix());
    }
    const Spectrum spec = eigenpairs(assemble_operator(grid, weight), cfg.k, cfg.tol);
    Table t{{"index", "lambda", "residual"}, {}, {true, false, false}};
    for (std::size_t i = 0; i < spec.pairs.size(); ++i) {
        t.rows.push_back({static_cast<double>(i + 1), spec.pairs[i].lambda, spec.pairs[i].residual});
    }
    write_table(ctx.dir / "spectrum", t, cfg.format);
    for (std::size_t i = 0; i < spec.pairs.size(); ++i) {
        write_field(ctx.dir / fmt::format("phi_{}", i + 1), spec.pairs[i].phi, cfg.format);
    }
    json s;
    s["weight"] = cfg.weight;
    s["weight_multiplier"] = multiplier;
    s["eigenvalues"] = spec.eigenvalues();
    s["grid"] = grid_json(grid);
    write_json(ctx.dir / "summary.json", s);
    ctx.out << fmt::format("spectrum: lambda_1 = {:.12g} ({} eigenpairs, weight {})\n", spec.pairs[0].lambda,
                           spec.pairs.size(), cfg.weight);
    return 0;
}

int cmd_verify(const Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const Grid grid = make_grid(cfg);
    const ModelParams params{make_growth(cfg, grid), cfg.b, cfg.c};
    const StabilityReport r = verify_theorem(params, grid, VerifyOptions{cfg.k, cfg.tol, cfg.tol});

    json j = report_json(r);
    j["params"] = {{"b", cfg.b}, {"c", cfg.c}, {"a", cfg.a}, {"k", cfg.k}};
    j["grid"] = grid_json(grid);
    write_json(ctx.dir / "report.json", j);
    Table t{{"i", "coupled_re", "coupled_im", "predicted", "rel_err"}, {}, {true, false, false, false, false}};
    for (std::size_t i = 0; i < r.coupled_eigs.size(); ++i) {
        t.rows.push_back({static_cast<double>(i + 1), r.coupled_eigs[i].real(), r.coupled_eigs[i].imag(),
                          r.predicted_eigs[i], r.rel_errors[i]});
    }
    write_table(ctx.dir / "eigenvalues", t, cfg.format);

    if (r.cause.rfind("no positive steady state", 0) == 0 && r.lambda1_of_a >= 0.0) {
        throw Subcritical(principal_laplacian_eigenvalue(grid), r.lambda1_of_a);
    }
    ctx.out << fmt::format("verify: verdict {}, mu_1 = {:.12g}, s = {:.12g}, mismatch {:.3e}{}\n",
                           to_string(r.verdict), r.mu1, r.s_value, r.max_rel_mismatch,
                           r.degenerate ? " (degenerate locus)" : r.degenerate_band ? " (near degenerate locus)" : "");
    if (!r.cause.empty()) ctx.out << "verify: " << r.cause << '\n';
    return 0;
}

int cmd_evolve(const Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const Grid grid = make_grid(cfg);
    const ModelParams params{make_growth(cfg, grid), cfg.b, cfg.c};
    const LogisticSolution sol = logistic(cfg, grid, params.a);
    const SteadyState st = synchronized_state(params, sol);

    Field u0 = st.u;
    Field v0 = st.v;
    if (cfg.perturbation == "random") {
        u0 = random_perturbation(st.u, cfg.amplitude, cfg.seed);
        v0 = random_perturbation(st.v, cfg.amplitude, cfg.seed + 1);
    } else if (cfg.perturbation == "principal") {
        // (b, c) phi_1(a - s theta) is an exact eigenvector of the linearization
        const Field w(grid, (params.a.values().array() - s_parameter(cfg.b, cfg.c) * sol.theta.values().array()).matrix());
        const Field phi = principal_eigenpair(assemble_operator(grid, w)).phi;
        const double scale = cfg.amplitude / (phi.max() * std::max(cfg.b, cfg.c));
        u0 = Field(grid, st.u.values() + scale * cfg.b * phi.values());
        v0 = Field(grid, st.v.values() + scale * cfg.c * phi.values());
    }

    const Trajectory traj = evolve(u0, v0, params, cfg.dt, cfg.t_end, cfg.store_every);
    const auto dist = distances(traj, st);
    Table t{{"t", "norm_u_dist", "norm_v_dist", "total_dist"}, {}, {false, false, false, false}};
    for (const auto& d : dist) t.rows.push_back({d.t, d.u_dist, d.v_dist, d.total});
    write_table(ctx.dir / "distances", t, cfg.format);

    for (std::size_t i = 0; i < cfg.snapshots.size(); ++i) {
        const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), cfg.snapshots[i] - 1e-12);
        const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - traj.times.begin(),
                                                                           static_cast<std::ptrdiff_t>(traj.times.size()) - 1));
        write_field(ctx.dir / fmt::format("snapshot_{}_u", i + 1), traj.u[idx], cfg.format);
        write_field(ctx.dir / fmt::format("snapshot_{}_v", i + 1), traj.v[idx], cfg.format);
    }

    const StabilityReport r = verify_theorem(params, grid, VerifyOptions{2, cfg.tol, cfg.tol});
    json s;
    s["method"] = traj.method;
    s["dt"] = traj.dt;
    s["steps_stored"] = traj.times.size();
    s["t_final"] = traj.times.back();
    s["initial_distance"] = dist.front().total;
    s["final_distance"] = dist.back().total;
    s["mu1"] = number(r.mu1);
    try {
        const DecayFit fit = decay_rate(traj, st);
        s["fit"] = {{"rate", fit.rate},       {"r_squared", fit.r_squared}, {"t_start", fit.t_start},
                    {"t_end", fit.t_end},     {"samples", fit.samples},     {"monotone", fit.monotone},
                    {"rate_rel_error", number(std::abs(-fit.rate - r.mu1) / std::abs(r.mu1))}};
        ctx.out << fmt::format("evolve: final distance {:.3e}, decay rate {:.10g} (mu_1 = {:.10g}), r^2 {:.6f}\n",
                               dist.back().total, fit.rate, r.mu1, fit.r_squared);
    } catch (const InvalidArgument& e) {
        s["fit"] = nullptr;
        s["fit_error"] = e.what();
        ctx.out << fmt::format("evolve: final distance {:.3e}; no decay fit ({})\n", dist.back().total, e.what());
    }
    write_json(ctx.dir / "decay.json", s);
    return 0;
}

struct Job {
    std::size_t index;
    std::array<std::size_t, 4> key;
    double a, b, c;
    int n;
};

json run_job(const RunConfig& cfg, const Job& job, double& seconds) {
    const auto start = std::chrono::steady_clock::now();
    RunConfig jc = cfg;
    jc.n = job.n;
    if (jc.ny == 0 || cfg.sweep.n) jc.ny = job.n;
    json rec;
    rec["job"] = job.index;
    rec["key"] = fmt::format("{}.{}.{}.{}", job.key[0], job.key[1], job.key[2], job.key[3]);
    rec["a"] = cfg.sweep.a ? json(job.a) : json(cfg.a);
    rec["b"] = job.b;
    rec["c"] = job.c;
    rec["n"] = job.n;
    const ModeRatios ratios = mode_ratios(job.b, job.c);
    rec["degenerate"] = ratios.degenerate;
    rec["degenerate_band"] = ratios.degenerate_band;
    try {
        const Grid grid = make_grid(jc);
        const Field a = cfg.sweep.a ? Field::constant(grid, job.a) : make_growth(jc, grid);
        const StabilityReport r = verify_theorem(ModelParams{a, job.b, job.c}, grid, VerifyOptions{cfg.k, cfg.tol, cfg.tol});
        rec["s"] = number(r.s_value);
        rec["mu1"] = number(r.mu1);
        rec["max_rel_mismatch"] = number(r.max_rel_mismatch);
        rec["mismatch_threshold"] = number(r.mismatch_threshold);
        rec["max_imag"] = number(r.max_imag);
        rec["verdict"] = to_string(r.verdict);
        rec["cause"] = r.cause;
    } catch (const std::exception& e) {
        rec["s"] = number(s_parameter(job.b, job.c));
        rec["mu1"] = nullptr;
        rec["max_rel_mismatch"] = nullptr;
        rec["mismatch_threshold"] = nullptr;
        rec["max_imag"] = nullptr;
        rec["verdict"] = to_string(Verdict::inconclusive);
        rec["cause"] = e.what();
    }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

int cmd_sweep(const Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const std::vector<double> as = cfg.sweep.a.value_or(std::vector<double>{std::numeric_limits<double>::quiet_NaN()});
    const std::vector<double> bs = cfg.sweep.b.value_or(std::vector<double>{cfg.b});
    const std::vector<double> cs = cfg.sweep.c.value_or(std::vector<double>{cfg.c});
    const std::vector<int> ns = cfg.sweep.n.value_or(std::vector<int>{cfg.n});

    std::vector<Job> jobs;
    for (std::size_t ia = 0; ia < as.size(); ++ia)
        for (std::size_t ib = 0; ib < bs.size(); ++ib)
            for (std::size_t ic = 0; ic < cs.size(); ++ic)
                for (std::size_t in = 0; in < ns.size(); ++in)
                    jobs.push_back(Job{jobs.size(), {ia, ib, ic, in}, as[ia], bs[ib], cs[ic], ns[in]});
    ctx.out << fmt::format("sweep: {} jobs ({} a x {} b x {} c x {} n)\n", jobs.size(), as.size(), bs.size(),
                           cs.size(), ns.size());

    std::vector<json> records(jobs.size());
    std::vector<double> seconds(jobs.size(), 0.0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) records[i] = run_job(cfg, jobs[i], seconds[i]);
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_workers =
        std::min<std::size_t>(jobs.size(), cfg.workers == 0 ? hw : static_cast<std::size_t>(cfg.workers));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // records[] is indexed by job, which is the lexicographic key order
    std::ofstream lines(ctx.dir / "results.jsonl");
    for (const auto& rec : records) lines << rec.dump() << '\n';

    json summary;
    summary["jobs"] = jobs.size();
    std::size_t stable = 0;
    double min_mu1 = std::numeric_limits<double>::infinity();
    json min_job = nullptr;
    json non_stable = json::array();
    json band = json::array();
    for (const auto& rec : records) {
        if (rec["verdict"] == "stable") {
            ++stable;
        } else {
            non_stable.push_back({{"job", rec["job"]}, {"verdict", rec["verdict"]}, {"cause", rec["cause"]}});
        }
        if (rec["degenerate_band"].get<bool>()) band.push_back(rec["job"]);
        if (rec["mu1"].is_number() && rec["mu1"].get<double>() < min_mu1) {
            min_mu1 = rec["mu1"].get<double>();
            min_job = rec["job"];
        }
    }
    summary["stable"] = stable;
    summary["min_mu1"] = number(min_mu1);
    summary["min_mu1_job"] = min_job;
    summary["non_stable"] = non_stable;
    summary["degenerate_band_jobs"] = band;
    write_json(ctx.dir / "summary.json", summary);

    if (cfg.timings) {
        json t = json::array();
        for (std::size_t i = 0; i < jobs.size(); ++i) t.push_back({{"job", i}, {"wall_seconds", seconds[i]}});
        write_json(ctx.dir / "timings.json", t);
    }
    ctx.out << fmt::format("sweep: {}/{} stable, min mu_1 = {:.10g}\n", stable, jobs.size(), min_mu1);
    return 0;
}

// --------------------------------------------------------------- arguments

using Override = std::function<void(RunConfig&, const RunConfig&)>;

template <class T>
void bind_flag(CLI::App& app, std::vector<Override>& overrides, RunConfig& flags, const std::string& name,
          T RunConfig::*member, const std::string& help) {
    CLI::Option* opt = app.add_option(name, flags.*member, help);
    overrides.push_back([opt, member](RunConfig& dst, const RunConfig& src) {
        if (opt->count() > 0) dst.*member = src.*member;
    });
}

}  // namespace

Domain parse_domain(const std::string& spec, int n, int ny) {
    const auto parts = split(spec, ':');
    if (parts[0] == "interval") {
        if (parts.size() != 3) throw InvalidArgument(fmt::format("domain '{}': expected interval:x0:x1", spec));
        return Domain::interval(parse_endpoint(parts[1]), parse_endpoint(parts[2]), n);
    }
    if (parts[0] == "rectangle") {
        if (parts.size() != 5) {
            throw InvalidArgument(fmt::format("domain '{}': expected rectangle:x0:x1:y0:y1", spec));
        }
        return Domain::rectangle(parse_endpoint(parts[1]), parse_endpoint(parts[2]), parse_endpoint(parts[3]),
                                 parse_endpoint(parts[4]), n, ny > 0 ? ny : n);
    }
    throw InvalidArgument(fmt::format("domain '{}': kind must be interval or rectangle", spec));
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> values;
    if (text.empty()) return values;
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw InvalidArgument(fmt::format("range '{}': expected start:stop:step", text));
        const double start = parse_number(parts[0], "range");
        const double stop = parse_number(parts[1], "range");
        const double step = parse_number(parts[2], "range");
        if (!(step > 0.0)) throw InvalidArgument(fmt::format("range '{}': step must be positive", text));
        const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (long i = 0; i < count; ++i) values.push_back(snap(start + static_cast<double>(i) * step));
        return values;
    }
    for (const auto& token : split(text, ',')) values.push_back(parse_number(token, "list"));
    return values;
}

Grid make_grid(const RunConfig& config) { return build_grid(parse_domain(config.domain, config.n, config.ny)); }

Field make_growth(const RunConfig& config, const Grid& grid) {
    const std::string& spec = config.a;
    if (spec.rfind("file:", 0) == 0) return read_field_csv(spec.substr(5), grid);
    if (spec == "sin" || spec == "profile:sin") {
        const Domain& d = grid.domain();
        const double a0 = config.a0;
        const double a1 = config.a1;
        return Field::sample(grid, [&](double x, double y) {
            double shape = std::sin(std::numbers::pi * (x - d.lower[0]) / d.extent[0]);
            if (d.dimension() == 2) shape *= std::sin(std::numbers::pi * (y - d.lower[1]) / d.extent[1]);
            return a0 + a1 * shape;
        });
    }
    if (spec == "const" || spec == "profile:const") return Field::constant(grid, config.a0);
    if (spec.rfind("const:", 0) == 0) return Field::constant(grid, parse_number(spec.substr(6), "a"));
    return Field::constant(grid, parse_number(spec, "a"));
}

void validate(const RunConfig& cfg, const std::string& command) {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
        throw InvalidArgument(fmt::format("unknown command '{}'", command));
    }
    if (cfg.n < 3) throw InvalidArgument(fmt::format("n = {}: resolution must be at least 3", cfg.n));
    if (cfg.ny != 0 && cfg.ny < 3) throw InvalidArgument(fmt::format("ny = {}: resolution must be at least 3", cfg.ny));
    (void)make_grid(cfg);

    const std::string& a = cfg.a;
    if (a.rfind("file:", 0) == 0) {
        if (!fs::is_regular_file(a.substr(5))) throw InvalidArgument(fmt::format("a: file '{}' not found", a.substr(5)));
    } else if (a != "sin" && a != "profile:sin" && a != "const" && a != "profile:const") {
        parse_number(a.rfind("const:", 0) == 0 ? a.substr(6) : a, "a");
    }
    if (!std::isfinite(cfg.a0) || !std::isfinite(cfg.a1)) throw InvalidArgument("a0 and a1 must be finite");

    const bool needs_bc = command != "theta" && !(command == "spectrum" && cfg.weight != "a-s-theta");
    if (needs_bc && command != "sweep") validate_predation(cfg.b, cfg.c);
    if (!(cfg.tol > 0.0) || !(cfg.tol < 1.0)) throw InvalidArgument(fmt::format("tol = {}: must be in (0, 1)", cfg.tol));
    if (cfg.k < 1) throw InvalidArgument(fmt::format("k = {}: must be at least 1", cfg.k));
    const std::vector<std::string> weights{"a", "a-theta", "a-s-theta", "a-2theta"};
    if (std::find(weights.begin(), weights.end(), cfg.weight) == weights.end()) {
        throw InvalidArgument(fmt::format("weight '{}': expected a, a-theta, a-s-theta or a-2theta", cfg.weight));
    }
    if (command == "spectrum" && static_cast<std::size_t>(cfg.k) > make_grid(cfg).size()) {
        throw InvalidArgument(fmt::format("k = {} exceeds the number of grid nodes", cfg.k));
    }
    if (command == "verify" && static_cast<std::size_t>(cfg.k) > make_grid(cfg).size()) {
        throw InvalidArgument(fmt::format("k = {} exceeds the number of grid nodes", cfg.k));
    }
    if (!(cfg.dt > 0.0)) throw InvalidArgument(fmt::format("dt = {}: must be positive", cfg.dt));
    if (!(cfg.t_end > 0.0)) throw InvalidArgument(fmt::format("t_end = {}: must be positive", cfg.t_end));
    if (!(cfg.amplitude >= 0.0) || !std::isfinite(cfg.amplitude)) {
        throw InvalidArgument(fmt::format("amplitude = {}: must be nonnegative", cfg.amplitude));
    }
    if (cfg.perturbation != "random" && cfg.perturbation != "principal" && cfg.perturbation != "none") {
        throw InvalidArgument(fmt::format("perturbation '{}': expected random, principal or none", cfg.perturbation));
    }
    if (cfg.store_every < 1) throw InvalidArgument("store_every must be at least 1");
    for (double t : cfg.snapshots) {
        if (!(t >= 0.0)) throw InvalidArgument(fmt::format("snapshot time {} must be nonnegative", t));
    }
    if (cfg.format != "csv" && cfg.format != "json") {
        throw InvalidArgument(fmt::format("format '{}': expected csv or json", cfg.format));
    }
    if (cfg.workers < 0) throw InvalidArgument("workers must be nonnegative (0 = one per core)");

    if (command == "sweep") {
        const SweepAxes& s = cfg.sweep;
        const auto empty = [](const auto& axis) { return axis && axis->empty(); };
        if (empty(s.a) || empty(s.b) || empty(s.c) || empty(s.n)) throw InvalidArgument("empty sweep");
        for (double b : s.b.value_or(std::vector<double>{cfg.b}))
            for (double c : s.c.value_or(std::vector<double>{cfg.c})) validate_predation(b, c);
        for (double v : s.a.value_or(std::vector<double>{})) {
            if (!std::isfinite(v)) throw InvalidArgument("sweep: a values must be finite");
        }
        for (int n : s.n.value_or(std::vector<int>{cfg.n})) {
            RunConfig probe = cfg;
            probe.n = n;
            if (s.n) probe.ny = n;
            if (n < 3) throw InvalidArgument(fmt::format("sweep: n = {} is below 3", n));
            if (static_cast<std::size_t>(cfg.k) > make_grid(probe).size()) {
                throw InvalidArgument(fmt::format("sweep: k = {} exceeds the grid size for n = {}", cfg.k, n));
            }
        }
    }
}

void load_config_file(RunConfig& config, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument(fmt::format("config file '{}' not found", path.string()));
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(fmt::format("config file '{}': {}", path.string(), e.what()));
    }
    if (!j.is_object()) throw InvalidArgument("config file must hold a JSON object");
    static const std::vector<std::string> known{"domain", "n",           "ny",        "a",         "a0",      "a1",
                                                "b",      "c",           "tol",       "k",         "weight",  "dt",
                                                "t_end",  "amplitude",   "perturbation", "store_every", "snapshots",
                                                "seed",   "format",      "workers",   "timings",   "sweep"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw InvalidArgument(fmt::format("config: unknown key '{}'", key));
        }
    }
    read_key(j, "domain", config.domain);
    read_key(j, "n", config.n);
    read_key(j, "ny", config.ny);
    read_growth(j, config.a);
    read_key(j, "a0", config.a0);
    read_key(j, "a1", config.a1);
    read_key(j, "b", config.b);
    read_key(j, "c", config.c);
    read_key(j, "tol", config.tol);
    read_key(j, "k", config.k);
    read_key(j, "weight", config.weight);
    read_key(j, "dt", config.dt);
    read_key(j, "t_end", config.t_end);
    read_key(j, "amplitude", config.amplitude);
    read_key(j, "perturbation", config.perturbation);
    read_key(j, "store_every", config.store_every);
    read_key(j, "snapshots", config.snapshots);
    read_key(j, "seed", config.seed);
    read_key(j, "format", config.format);
    read_key(j, "workers", config.workers);
    read_key(j, "timings", config.timings);
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        if (!s.is_object()) throw InvalidArgument("config: 'sweep' must be an object");
        for (const auto& [key, value] : s.items()) {
            if (key != "a" && key != "b" && key != "c" && key != "n") {
                throw InvalidArgument(fmt::format("config: unknown sweep axis '{}'", key));
            }
        }
        read_axis(s, "a", config.sweep.a);
        read_axis(s, "b", config.sweep.b);
        read_axis(s, "c", config.sweep.c);
        read_axis(s, "n", config.sweep.n);
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synchronized steady states of the diffusive predator-prey system and their stability"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    RunConfig flags;
    std::vector<Override> overrides;
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values");
    bind_flag(app, overrides, flags, "--out", &RunConfig::out, "Output directory");
    bind_flag(app, overrides, flags, "--format", &RunConfig::format, "Table format: csv or json");
    bind_flag(app, overrides, flags, "--seed", &RunConfig::seed, "Seed for every random choice");
    bind_flag(app, overrides, flags, "--workers", &RunConfig::workers, "Sweep worker threads (0 = one per core)");
    bind_flag(app, overrides, flags, "--domain", &RunConfig::domain, "interval:x0:x1 or rectangle:x0:x1:y0:y1");
    bind_flag(app, overrides, flags, "--n", &RunConfig::n, "Interior nodes per axis");
    bind_flag(app, overrides, flags, "--ny", &RunConfig::ny, "Interior nodes along y (rectangle)");
    bind_flag(app, overrides, flags, "--a", &RunConfig::a, "Growth rate: number, const, sin, profile:sin or file:<csv>");
    bind_flag(app, overrides, flags, "--a0", &RunConfig::a0, "Profile offset");
    bind_flag(app, overrides, flags, "--a1", &RunConfig::a1, "Profile amplitude");
    bind_flag(app, overrides, flags, "--b", &RunConfig::b, "Predation rate on the prey, in (0, 1)");
    bind_flag(app, overrides, flags, "--c", &RunConfig::c, "Conversion rate for the predator, > 0");
    bind_flag(app, overrides, flags, "--tol", &RunConfig::tol, "Solver tolerance");
    bind_flag(app, overrides, flags, "--k", &RunConfig::k, "Number of eigenvalues");
    bind_flag(app, overrides, flags, "--weight", &RunConfig::weight, "spectrum weight: a, a-theta, a-s-theta, a-2theta");
    bind_flag(app, overrides, flags, "--dt", &RunConfig::dt, "Time step");
    bind_flag(app, overrides, flags, "--t-end", &RunConfig::t_end, "Final time");
    bind_flag(app, overrides, flags, "--amplitude", &RunConfig::amplitude, "Perturbation amplitude");
    bind_flag(app, overrides, flags, "--perturbation", &RunConfig::perturbation, "random, principal or none");
    bind_flag(app, overrides, flags, "--store-every", &RunConfig::store_every, "Store every n-th step");
    bind_flag(app, overrides, flags, "--snapshots", &RunConfig::snapshots, "Times for full-state snapshots");
    app.get_option("--snapshots")->delimiter(',');
    CLI::Option* timings = app.add_flag("--timings", flags.timings, "Write per-job wall times (sweep)");
    overrides.push_back([timings](RunConfig& dst, const RunConfig& src) {
        if (timings->count() > 0) dst.timings = src.timings;
    });
    std::array<std::string, 4> axis_text;
    std::array<CLI::Option*, 4> axis_opts{};
    const std::array<const char*, 4> axis_names{"--sweep-a", "--sweep-b", "--sweep-c", "--sweep-n"};
    for (std::size_t i = 0; i < 4; ++i) {
        axis_opts[i] = app.add_option(axis_names[i], axis_text[i], "Sweep axis: v1,v2,... or start:stop:step");
    }

    app.add_subcommand("theta", "Solve the logistic problem for theta");
    app.add_subcommand("steady", "Synchronized steady state (u, v)");
    app.add_subcommand("spectrum", "Smallest eigenpairs of -(Lap + weight)");
    app.add_subcommand("verify", "Linearized stability of the synchronized state");
    app.add_subcommand("evolve", "Time integration from a perturbed steady state");
    app.add_subcommand("sweep", "verify over a Cartesian parameter grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    try {
        if (!config_path.empty()) load_config_file(cfg, config_path);
        for (const auto& apply : overrides) apply(cfg, flags);
        if (axis_opts[0]->count()) cfg.sweep.a = parse_list(axis_text[0]);
        if (axis_opts[1]->count()) cfg.sweep.b = parse_list(axis_text[1]);
        if (axis_opts[2]->count()) cfg.sweep.c = parse_list(axis_text[2]);
        if (axis_opts[3]->count()) cfg.sweep.n = to_ints(parse_list(axis_text[3]), "sweep-n");
        validate(cfg, command);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        const fs::path dir(cfg.out);
        fs::create_directories(dir);
        json echo = config_to_json(cfg);
        echo["command"] = command;
        write_json(dir / "config.json", echo);

        const Context ctx{cfg, dir, out};
        if (command == "theta") return cmd_theta(ctx);
        if (command == "steady") return cmd_steady(ctx);
        if (command == "spectrum") return cmd_spectrum(ctx);
        if (command == "verify") return cmd_verify(ctx);
        if (command == "evolve") return cmd_evolve(ctx);
        return cmd_sweep(ctx);
    } catch (const Subcritical& e) {
        err << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace lvstab::cli
