#include "pam/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pam/coalescing.hpp"
#include "pam/lyapunov.hpp"
#include "pam/polaron.hpp"

namespace pam {

namespace {

using nlohmann::json;

double parse_double(const std::string& s, const std::string& what) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError(what + ": bad number '" + s + "'");
    return v;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError(what + ": bad integer '" + s + "'");
    return v;
}

std::uint64_t parse_uint(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError(what + ": bad unsigned integer '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const std::string& piece : split(s, ','))
        out.push_back(parse_double(piece, what));
    return out;
}

}  // namespace

std::string ExperimentConfig::require(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
        throw ConfigError(experiment + ": missing required key '" + key + "'");
    return it->second;
}

std::string ExperimentConfig::get_or(const std::string& key,
                                     const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double ExperimentConfig::get_double(const std::string& key) const {
    return parse_double(require(key), key);
}
double ExperimentConfig::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}
std::int64_t ExperimentConfig::get_int(const std::string& key) const {
    return parse_int(require(key), key);
}
std::int64_t ExperimentConfig::get_int_or(const std::string& key,
                                          std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}
std::uint64_t ExperimentConfig::get_uint(const std::string& key) const {
    return parse_uint(require(key), key);
}
std::uint64_t ExperimentConfig::get_uint_or(const std::string& key,
                                            std::uint64_t fallback) const {
    return has(key) ? get_uint(key) : fallback;
}

std::uint64_t ExperimentConfig::master_seed() const { return get_uint("seed"); }
int ExperimentConfig::workers() const {
    std::int64_t w = get_int_or("workers", 1);
    if (w < 1) throw ConfigError("workers must be >= 1");
    return static_cast<int>(w);
}

std::string ExperimentConfig::canonical() const {
    std::string out = "experiment=" + experiment + "\n";
    for (const auto& [k, v] : values) out += k + "=" + v + "\n";
    return out;
}

std::uint64_t ExperimentConfig::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : canonical()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& experiment,
                                             const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path);
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hashpos = line.find('#');
        if (hashpos != std::string::npos) line.erase(hashpos);
        // trim
        auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
        while (!line.empty() && issp(line.front())) line.erase(line.begin());
        while (!line.empty() && issp(line.back())) line.pop_back();
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key=value");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        while (!key.empty() && issp(key.back())) key.pop_back();
        while (!value.empty() && issp(value.front())) value.erase(value.begin());
        if (key.empty()) throw ConfigError(path + ": empty key");
        cfg.set(key, value);
    }
    return cfg;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
    if (ec != std::errc()) throw IoError("number formatting failed");
    return std::string(buf, p);
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += table.columns[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw IoError("row width does not match the header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!std::isfinite(row[i]))
                throw IoError("non-finite value in results (column " +
                              table.columns[i] + ")");
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const Table& table, const std::string& path) {
    std::string body = to_csv(table);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << body;
}

Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.columns = split(line, ',');
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        for (const std::string& cell : split(line, ','))
            row.push_back(parse_double(cell, path));
        if (row.size() != table.columns.size())
            throw IoError(path + ": ragged row");
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_json_table(const Table& table, const std::string& path) {
    json j;
    j["columns"] = table.columns;
    j["rows"] = json::array();
    for (const auto& row : table.rows) {
        for (double v : row)
            if (!std::isfinite(v)) throw IoError("non-finite value in results");
        j["rows"].push_back(row);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    json j;
    j["experiment"] = manifest.experiment;
    j["config_hash"] = manifest.config_hash;
    j["master_seed"] = manifest.master_seed;
    j["workers"] = manifest.workers;
    j["wall_seconds"] = manifest.wall_seconds;
    j["outputs"] = manifest.outputs;
    j["warning_counts"] = manifest.warning_counts;
    j["warnings"] = manifest.warnings;
    j["seed_schedule"] = "child_seed(master, replica_index), splitmix64 mix";
    if (!manifest.payload_json.empty())
        j["report"] = json::parse(manifest.payload_json);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

namespace {

struct ExperimentResult {
    Table table;
    json report;
    std::map<std::string, std::uint64_t> warning_counts = {
        {"WindowViolation", 0}, {"HeavyTail", 0}, {"ZeroHits", 0}};
    std::vector<std::string> warnings;
};

void enforce_sandwich(double lambda, double sigma, double rho, double gamma) {
    if (lambda < rho * gamma - 3 * sigma || lambda > gamma + 3 * sigma)
        throw PredicateHardFailure("Lyapunov estimate escapes the sandwich [rho gamma, gamma]");
}

std::vector<WalkerSeed> parse_points(const std::string& text, int d) {
    std::vector<WalkerSeed> out;
    for (const std::string& chunk : split(text, ';')) {
        std::vector<std::string> halves = split(chunk, '@');
        if (halves.size() != 2)
            throw ConfigError("points: expected coord@time, got '" + chunk + "'");
        std::vector<std::string> coords = split(halves[0], ',');
        if (static_cast<int>(coords.size()) != d)
            throw ConfigError("points: expected " + std::to_string(d) + " coordinates");
        Site s{};
        for (int i = 0; i < d; ++i)
            s[i] = static_cast<std::int32_t>(parse_int(coords[static_cast<std::size_t>(i)],
                                                       "points"));
        out.push_back({s, parse_double(halves[1], "points")});
    }
    return out;
}

json interval_json(double mean, double se) {
    return json{{"mean", mean},
                {"std_error", se},
                {"ci_low", mean - 1.96 * se},
                {"ci_high", mean + 1.96 * se}};
}

ExperimentResult run_greens(const ExperimentConfig& cfg) {
    int d = static_cast<int>(cfg.get_int("dim"));
    double tol = cfg.get_double_or("tol", 1e-8);
    bool want_star = cfg.get_int_or("gstar", d >= 5 ? 1 : 0) != 0;
    GreenConstants gc = green_constants(make_simple_random_walk(d), tol, want_star);
    ExperimentResult res;
    res.table.columns = {"d", "g", "g_star", "error"};
    res.table.rows.push_back({static_cast<double>(d), gc.g,
                              gc.has_g_star ? gc.g_star : 0.0, gc.quadrature_error});
    res.report = {{"g", gc.g},
                  {"has_g_star", gc.has_g_star},
                  {"error", gc.quadrature_error}};
    if (gc.has_g_star) res.report["g_star"] = gc.g_star;
    return res;
}

ExperimentResult run_voter_occupation(const ExperimentConfig& cfg) {
    int d = static_cast<int>(cfg.get_int("dim"));
    int L = static_cast<int>(cfg.get_int("L"));
    VoterConfig vc(Torus(L, d), make_simple_random_walk(d), cfg.get_double("rho"));
    TailEstimate est =
        occupation_tail(vc, cfg.get_double("alpha"), cfg.get_double("t"),
                        cfg.get_uint("replicas"), cfg.master_seed(), cfg.workers(), true);
    ExperimentResult res;
    res.table.columns = {"replica", "T_t"};
    for (std::size_t i = 0; i < est.samples.size(); ++i)
        res.table.rows.push_back({static_cast<double>(i), est.samples[i]});
    res.report = {{"p_hat", est.p_hat},     {"ci_low", est.ci.low},
                  {"ci_high", est.ci.high}, {"rate", est.rate},
                  {"b_t", est.b_t},         {"hits", est.hits},
                  {"replicas", est.replicas}, {"zero_hits", est.zero_hits}};
    if (est.zero_hits) {
        res.warning_counts["ZeroHits"] = 1;
        res.warnings.push_back("no tail hits; rate is a one-sided bound");
    }
    return res;
}

ExperimentResult run_voter_persistence(const ExperimentConfig& cfg) {
    int d = static_cast<int>(cfg.get_int("dim"));
    int L = static_cast<int>(cfg.get_int("L"));
    int side = static_cast<int>(cfg.get_int_or("side", 1));
    if (side < 1 || side > L) throw ConfigError("side must lie in [1, L]");
    VoterConfig vc(Torus(L, d), make_simple_random_walk(d), cfg.get_double("rho"));
    Site lo{}, hi{};
    for (int i = 0; i < d; ++i) hi[i] = side - 1;
    PersistenceEstimate est =
        persistence_probability(vc, make_box(d, lo, hi), cfg.get_double("t"),
                                cfg.get_uint("replicas"), cfg.master_seed(), cfg.workers());
    ExperimentResult res;
    res.table.columns = {"p_hat", "ci_low", "ci_high", "rate", "hits", "replicas"};
    res.table.rows.push_back({est.p_hat, est.ci.low, est.ci.high, est.rate,
                              static_cast<double>(est.hits),
                              static_cast<double>(est.replicas)});
    res.report = {{"p_hat", est.p_hat},     {"ci_low", est.ci.low},
                  {"ci_high", est.ci.high}, {"rate", est.rate},
                  {"zero_hits", est.zero_hits}};
    if (est.zero_hits) {
        res.warning_counts["ZeroHits"] = 1;
        res.warnings.push_back("no persistence hits; rate is a one-sided bound");
    }
    return res;
}

ExperimentResult run_duality_check(const ExperimentConfig& cfg) {
    int d = static_cast<int>(cfg.get_int("dim"));
    int L = static_cast<int>(cfg.get_int_or("L", 0));
    std::vector<WalkerSeed> points = parse_points(cfg.require("points"), d);
    std::optional<Torus> torus;
    if (L > 0) torus = Torus(L, d);
    DualityEstimate est = correlation_dual(
        make_simple_random_walk(d), points, cfg.get_double("rho"), cfg.get_double("T"),
        cfg.get_double("t"), cfg.get_uint("replicas"), cfg.master_seed(), cfg.workers(),
        torus);
    ExperimentResult res;
    res.table.columns = {"estimate",    "std_error",    "ci_low",        "ci_high",
                         "bracket_low", "bracket_high", "mean_alive_end"};
    res.table.rows.push_back({est.probability.mean, est.probability.std_error,
                              est.probability.ci_low, est.probability.ci_high,
                              est.bracket_low, est.bracket_high, est.mean_alive_end});
    res.report = {{"estimate", est.probability.mean},
                  {"ci_low", est.probability.ci_low},
                  {"ci_high", est.probability.ci_high},
                  {"bracket_low", est.bracket_low},
                  {"bracket_high", est.bracket_high},
                  {"points", points.size()}};
    return res;
}

ExperimentResult run_moment(const ExperimentConfig& cfg) {
    std::string mode = cfg.get_or("mode", "direct");
    int d = static_cast<int>(cfg.get_int("dim"));
    int L = static_cast<int>(cfg.get_int_or("L", 0));
    int p = static_cast<int>(cfg.get_int_or("p", 1));
    double kappa = cfg.get_double_or("kappa", 0);
    double gamma = cfg.get_double("gamma");
    double rho = cfg.get_double("rho");
    double t = cfg.get_double("t");
    double T = cfg.get_double_or("T", 8);
    Kernel kernel = make_simple_random_walk(d);
    AndersonEstimate est;
    ImpliedLyapunov lyap;
    if (mode == "direct") {
        if (L < 4) throw ConfigError("direct mode needs a torus side L >= 4");
        VoterConfig vc(Torus(L, d), kernel, rho);
        if (T > 0) {
            vc.init = InitLaw::Warmed;
            vc.warm_time = T;
        }
        est = direct_moment(p, kappa, gamma, t, vc, cfg.get_uint("replicas"),
                            cfg.master_seed(), cfg.workers());
        lyap = implied_lyapunov_direct(est, p, t);
    } else if (mode == "dual") {
        std::optional<Torus> torus;
        if (L > 0) torus = Torus(L, d);
        est = dual_moment(kernel, p, kappa, gamma, rho, t, T, cfg.get_uint("replicas"),
                          cfg.master_seed(), cfg.workers(), torus);
        lyap = implied_lyapunov_dual(est, p, t, rho, gamma);
    } else {
        throw ConfigError("mode must be direct or dual");
    }
    enforce_sandwich(lyap.lambda, lyap.sigma, rho, gamma);
    ExperimentResult res;
    res.table.columns = {"p",    "kappa",     "gamma",  "rho",     "t",     "mean",
                         "std_error", "ci_low", "ci_high", "lambda", "sigma"};
    res.table.rows.push_back({static_cast<double>(p), kappa, gamma, rho, t,
                              est.moment.mean, est.moment.std_error, est.moment.ci_low,
                              est.moment.ci_high, lyap.lambda, lyap.sigma});
    res.report = {{"moment", interval_json(est.moment.mean, est.moment.std_error)},
                  {"log_mean", est.moment.log_mean},
                  {"max_share", est.moment.max_share},
                  {"lambda", lyap.lambda},
                  {"sigma", lyap.sigma},
                  {"window_violations", est.window_violations},
                  {"heavy_tail", est.heavy_tail}};
    res.warning_counts["WindowViolation"] = est.window_violations;
    if (est.window_violations > 0)
        res.warnings.push_back("walks left the safe torus window");
    if (est.heavy_tail) {
        res.warning_counts["HeavyTail"] = 1;
        res.warnings.push_back("top replica weight exceeds 20% of the total");
    }
    return res;
}

LyapunovParams scan_params(const ExperimentConfig& cfg, int d) {
    LyapunovParams params = default_lyapunov_params(d);
    int L = static_cast<int>(cfg.get_int_or("L", 0));
    std::string mode = cfg.get_or("mode", L > 0 ? "direct" : "dual");
    if (mode == "direct")
        params.mode = EstimatorMode::Direct;
    else if (mode == "dual")
        params.mode = EstimatorMode::Dual;
    else
        throw ConfigError("mode must be direct or dual");
    params.torus_side = L;
    params.p = static_cast<int>(cfg.get_int_or("p", 1));
    params.kappa = cfg.get_double_or("kappa", 0);
    params.gamma = cfg.get_double("gamma");
    params.rho = cfg.get_double("rho");
    params.horizon_T = cfg.get_double_or("T", 8);
    params.replicas = cfg.get_uint("replicas");
    params.seed = cfg.master_seed();
    params.workers = cfg.workers();
    return params;
}

ExperimentResult run_lyapunov_scan(const ExperimentConfig& cfg) {
    int d = static_cast<int>(cfg.get_int("dim"));
    LyapunovParams params = scan_params(cfg, d);
    std::vector<double> grid = parse_double_list(cfg.get_or("t_grid", "1,2,4"), "t_grid");
    LyapunovCurve curve = estimate_lyapunov(params, grid);
    ExperimentResult res;
    res.table.columns = {"d", "kappa", "p", "t", "lambda_hat", "ci_low", "ci_high"};
    for (std::size_t i = 0; i < grid.size(); ++i)
        res.table.rows.push_back({static_cast<double>(d), params.kappa,
                                  static_cast<double>(params.p), grid[i],
                                  curve.lambda_t[i],
                                  curve.lambda_t[i] - 1.96 * curve.sigma_t[i],
                                  curve.lambda_t[i] + 1.96 * curve.sigma_t[i]});
    res.report = {{"lambda_hat", curve.lambda_hat},
                  {"sigma_hat", curve.sigma_hat},
                  {"fit_residual", curve.fit_residual},
                  {"sandwich_ok", true}};
    if (params.p == 1) {
        ClumpingReport cl =
            clumping_check(curve.lambda_hat, curve.sigma_hat, params.rho, params.gamma,
                           cfg.get_double_or("t_probe", 0.1));
        res.report["clumping"] = {{"gap", cl.gap},
                                  {"bound", cl.bound},
                                  {"margin", cl.margin},
                                  {"passes", cl.passes}};
        if (!cl.passes)
            res.warnings.push_back("clumping lower bound not met within 3 sigma");
    }
    return res;
}

ExperimentResult run_dichotomy(const ExperimentConfig& cfg) {
    std::vector<int> dims;
    for (const std::string& s : split(cfg.get_or("dims", "2,5"), ','))
        dims.push_back(static_cast<int>(parse_int(s, "dims")));
    std::vector<double> kappas = parse_double_list(cfg.get_or("kappas", "0,1,4,16"), "kappas");
    ScanConfig sc;
    sc.p = static_cast<int>(cfg.get_int_or("p", 1));
    sc.gamma = cfg.get_double("gamma");
    sc.rho = cfg.get_double("rho");
    sc.t = cfg.get_double_or("t", 4);
    sc.horizon_T = cfg.get_double_or("T", 16);
    sc.torus_side_low_d = static_cast<int>(cfg.get_int_or("L", 16));
    sc.replicas = cfg.get_uint("replicas");
    sc.seed = cfg.master_seed();
    sc.workers = cfg.workers();
    DichotomyReport rep = dichotomy_scan(dims, kappas, sc);
    ExperimentResult res;
    res.table.columns = {"d", "kappa", "lambda", "sigma"};
    for (const DichotomyRow& row : rep.rows)
        res.table.rows.push_back(
            {static_cast<double>(row.d), row.kappa, row.lambda, row.sigma});
    res.report = {{"warnings", rep.warnings}};
    res.warnings = rep.warnings;
    return res;
}

ExperimentResult run_polaron(const ExperimentConfig& cfg) {
    PolaronSolution sol =
        solve_P5(static_cast<int>(cfg.get_int_or("n", 256)), cfg.get_double_or("R", 20),
                 static_cast<int>(cfg.get_int_or("iters", 400)));
    ExperimentResult res;
    res.table.columns = {"r", "f"};
    for (int i = 0; i < sol.profile.n(); ++i)
        res.table.rows.push_back(
            {sol.profile.r(i), sol.profile.values[static_cast<std::size_t>(i)]});
    res.report = {{"p5_lower_bound", sol.p5_lower_bound},
                  {"refinement_delta", sol.refinement_delta},
                  {"coulomb", sol.coulomb},
                  {"dirichlet", sol.dirichlet},
                  {"iterations", sol.iterations},
                  {"profile_csv_path", "polaron.csv"}};
    return res;
}

ExperimentResult run_conjecture(const ExperimentConfig& cfg) {
    int d = static_cast<int>(cfg.get_int_or("dim", 5));
    double rho = cfg.get_double("rho");
    double gamma = cfg.get_double("gamma");
    int p = static_cast<int>(cfg.get_int_or("p", 1));
    GreenConstants gc =
        green_constants(make_simple_random_walk(d), cfg.get_double_or("tol", 1e-6), true);
    double p5 = 0;
    if (cfg.has("p5"))
        p5 = cfg.get_double("p5");
    else if (d == 5)
        p5 = solve_P5(static_cast<int>(cfg.get_int_or("n", 128)),
                      cfg.get_double_or("R", 16),
                      static_cast<int>(cfg.get_int_or("iters", 200)))
                 .p5_lower_bound;
    ConjectureValue v = conjecture_rhs(ConjectureInputs(d, p, rho, gamma, gc, p5));
    ExperimentResult res;
    res.table.columns = {"d", "p", "rho", "gamma", "green_term", "polaron_term", "total"};
    res.table.rows.push_back({static_cast<double>(d), static_cast<double>(p), rho, gamma,
                              v.green_term, v.polaron_term, v.total});
    res.report = {{"green_term", v.green_term},
                  {"polaron_term", v.polaron_term},
                  {"total", v.total},
                  {"polaron_is_lower_bound", v.polaron_is_lower_bound},
                  {"g", gc.g},
                  {"g_star", gc.g_star},
                  {"p5_lower_bound", p5}};
    return res;
}

ExperimentResult run_block_check(const ExperimentConfig& cfg) {
    int d = static_cast<int>(cfg.get_int_or("dim", 5));
    BlockConfig bc;
    bc.rho = cfg.get_double("rho");
    bc.k_param = cfg.get_double_or("K", 6);
    bc.r = cfg.get_double_or("r", 2);
    if (!(bc.r > 1)) throw ConfigError("r must exceed 1");
    bc.r_prime = bc.r / (bc.r - 1);
    bc.epsilon = cfg.get_double_or("epsilon", 0.25);
    bc.c_epsilon = cfg.get_double_or("c_eps", 1.0);
    for (const std::string& chunk : split(cfg.get_or("sets", "0,0.5;64,64.5"), ';'))
        bc.sets.push_back(parse_double_list(chunk, "sets"));
    std::size_t total = 0;
    for (const auto& s : bc.sets) total += s.size();
    bc.psi_sites.assign(total, Site{});
    BlockReport rep =
        block_inequality_check(make_simple_random_walk(d), bc, cfg.get_double_or("horizon", 96),
                               cfg.get_uint("replicas"), cfg.master_seed(), cfg.workers());
    ExperimentResult res;
    res.table.columns = {"lhs", "lhs_se", "rhs", "rhs_se", "holds"};
    res.table.rows.push_back({rep.lhs, rep.lhs_se, rep.rhs, rep.rhs_se,
                              rep.holds_within_3sigma ? 1.0 : 0.0});
    res.report = {{"lhs", rep.lhs},
                  {"lhs_se", rep.lhs_se},
                  {"rhs", rep.rhs},
                  {"rhs_se", rep.rhs_se},
                  {"holds_within_3sigma", rep.holds_within_3sigma}};
    if (!rep.holds_within_3sigma)
        res.warnings.push_back("decoupling inequality not satisfied within 3 sigma");
    return res;
}

struct ExperimentDef {
    std::string name;
    std::vector<std::string> keys;
    std::function<ExperimentResult(const ExperimentConfig&)> run;
    bool stochastic = true;
};

const std::vector<ExperimentDef>& registry() {
    static const std::vector<ExperimentDef> defs = {
        {"greens", {"dim", "tol", "gstar"}, run_greens, false},
        {"voter-occupation", {"dim", "L", "rho", "t", "alpha", "replicas"},
         run_voter_occupation, true},
        {"voter-persistence", {"dim", "L", "rho", "t", "side", "replicas"},
         run_voter_persistence, true},
        {"duality-check", {"dim", "L", "rho", "t", "T", "points", "replicas"},
         run_duality_check, true},
        {"moment",
         {"mode", "p", "kappa", "gamma", "rho", "t", "T", "dim", "L", "replicas"},
         run_moment, true},
        {"lyapunov-scan",
         {"mode", "dim", "L", "p", "kappa", "gamma", "rho", "t_grid", "T", "t_probe",
          "replicas"},
         run_lyapunov_scan, true},
        {"dichotomy",
         {"dims", "kappas", "p", "gamma", "rho", "t", "T", "L", "replicas"},
         run_dichotomy, true},
        {"polaron", {"n", "R", "iters"}, run_polaron, false},
        {"conjecture", {"dim", "rho", "gamma", "p", "tol", "p5", "n", "R", "iters"},
         run_conjecture, false},
        {"block-check",
         {"dim", "rho", "K", "r", "epsilon", "c_eps", "sets", "horizon", "replicas"},
         run_block_check, true},
    };
    return defs;
}

const ExperimentDef& find_experiment(const std::string& name) {
    for (const ExperimentDef& def : registry())
        if (def.name == name) return def;
    throw ConfigError("unknown experiment '" + name + "'");
}

}  // namespace

std::vector<std::string> experiment_names() {
    std::vector<std::string> names;
    for (const ExperimentDef& def : registry()) names.push_back(def.name);
    return names;
}

RunManifest run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    const ExperimentDef& def = find_experiment(cfg.experiment);
    for (const auto& [key, value] : cfg.values) {
        (void)value;
        bool known = key == "seed" || key == "workers" || key == "format" || key == "verify";
        for (const std::string& k : def.keys) known = known || k == key;
        if (!known)
            throw ConfigError(cfg.experiment + ": unknown key '" + key + "'");
    }
    if (def.stochastic && !cfg.has("seed"))
        throw ConfigError(cfg.experiment + ": a master seed is required");
    std::string format = cfg.get_or("format", "both");
    if (format != "csv" && format != "json" && format != "both")
        throw ConfigError("format must be csv, json or both");

    auto start = std::chrono::steady_clock::now();
    ExperimentResult res = def.run(cfg);
    if (cfg.get_int_or("verify", 0) != 0) {
        ExperimentResult again = def.run(cfg);
        if (to_csv(res.table) != to_csv(again.table))
            throw ReproducibilityError(cfg.experiment + ": dry-run checksum mismatch");
    }
    auto stop = std::chrono::steady_clock::now();

    std::filesystem::create_directories(out_dir);
    std::string base = out_dir + "/" + cfg.experiment;

    RunManifest manifest;
    manifest.experiment = cfg.experiment;
    manifest.config_hash = cfg.hash();
    manifest.master_seed = def.stochastic ? cfg.master_seed() : 0;
    manifest.workers = cfg.workers();
    manifest.wall_seconds = std::chrono::duration<double>(stop - start).count();
    manifest.warning_counts = res.warning_counts;
    manifest.warnings = res.warnings;
    manifest.payload_json = res.report.dump();
    if (format == "csv" || format == "both") {
        write_csv(res.table, base + ".csv");
        manifest.outputs.push_back(base + ".csv");
    }
    if (format == "json" || format == "both") {
        write_json_table(res.table, base + ".json");
        manifest.outputs.push_back(base + ".json");
    }
    write_manifest(manifest, base + "_manifest.json");
    return manifest;
}

int cli_main(int argc, char** argv) {
    CLI::App app{"simulation toolkit for the parabolic Anderson equation with a voter catalyst"};
    app.require_subcommand(1);

    struct SubState {
        const ExperimentDef* def = nullptr;
        CLI::App* sub = nullptr;
        std::map<std::string, std::string> opts;
        std::string seed, workers, format, verify, out_dir = ".", config_path;
    };
    std::vector<SubState> states(registry().size());
    std::size_t idx = 0;
    for (const ExperimentDef& def : registry()) {
        SubState& st = states[idx++];
        st.def = &def;
        st.sub = app.add_subcommand(def.name);
        for (const std::string& key : def.keys)
            st.sub->add_option("--" + key, st.opts[key]);
        st.sub->add_option("--seed", st.seed);
        st.sub->add_option("--workers", st.workers);
        st.sub->add_option("--format", st.format);
        st.sub->add_option("--verify", st.verify);
        st.sub->add_option("--out-dir", st.out_dir);
        st.sub->add_option("--config", st.config_path);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    for (const SubState& st : states) {
        if (!st.sub->parsed()) continue;
        try {
            ExperimentConfig cfg;
            if (!st.config_path.empty())
                cfg = ExperimentConfig::from_file(st.def->name, st.config_path);
            cfg.experiment = st.def->name;
            for (const auto& [key, value] : st.opts)
                if (st.sub->count("--" + key)) cfg.set(key, value);
            if (st.sub->count("--seed")) cfg.set("seed", st.seed);
            if (st.sub->count("--workers")) cfg.set("workers", st.workers);
            if (st.sub->count("--format")) cfg.set("format", st.format);
            if (st.sub->count("--verify")) cfg.set("verify", st.verify);
            RunManifest manifest = run_experiment(cfg, st.out_dir);
            std::cout << st.def->name << ": ok";
            for (const std::string& out : manifest.outputs) std::cout << ' ' << out;
            std::cout << '\n';
            for (const std::string& w : manifest.warnings)
                std::cerr << "warning: " << w << '\n';
            return 0;
        } catch (const PredicateHardFailure& e) {
            std::cerr << "predicate failure: " << e.what() << '\n';
            return 3;
        } catch (const ReproducibilityError& e) {
            std::cerr << "reproducibility failure: " << e.what() << '\n';
            return 4;
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "internal error: " << e.what() << '\n';
            return 1;
        }
    }
    return 2;
}

}  // namespace pam
