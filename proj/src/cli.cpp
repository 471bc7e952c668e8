#include "qps/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qps/multiscale.hpp"
#include "qps/operator.hpp"
#include "qps/potential.hpp"
#include "qps/transfer.hpp"

namespace qps {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

enum class Kind { Number, Integer, Bool, Text, List, Omega };

struct Field {
    std::string key, def;
    Kind kind;
};

const std::vector<Field>& fields() {
    static const std::vector<Field> f{
        // model
        {"potential", "cos", Kind::Text},
        {"coeffs", "", Kind::List},
        {"lambda", "10000", Kind::Number},
        {"omega", "golden", Kind::Omega},
        // lyapunov
        {"E_grid", "", Kind::List},
        {"E_min", "", Kind::List},
        {"E_max", "", Kind::List},
        {"E_points", "50", Kind::Integer},
        {"n", "10000", Kind::Integer},
        {"x_samples", "100", Kind::Integer},
        // verify
        {"suite", "", Kind::Text},
        {"trials", "200", Kind::Integer},
        {"plant_violation", "false", Kind::Bool},
        // scale parameters
        {"N1", "4", Kind::Integer},
        {"tau", "0.3", Kind::Number},
        {"vartheta", "0.5", Kind::Number},
        {"beta", "1.5", Kind::Number},
        {"gamma", "0.5", Kind::Number},
        {"nu", "0.5", Kind::Number},
        {"A_exp", "0.5", Kind::Number},
        {"sigma", "0.5", Kind::Number},
        {"cap", "200", Kind::Integer},
        {"scales", "2", Kind::Integer},
        // multiscale driver
        {"x_grid", "64", Kind::Integer},
        {"omega_grid", "64", Kind::Integer},
        {"omega_lo", "0.58", Kind::Number},
        {"omega_hi", "0.66", Kind::Number},
        {"eps_flat", "0.8", Kind::Number},
        {"domain_samples", "1000", Kind::Integer},
        {"h2_window", "0.5", Kind::Number},
        {"cell_constant", "2", Kind::Number},
        // variation
        {"T", "10", Kind::Integer},
        {"delta", "1e-6", Kind::Number},
        {"variation_params", "random", Kind::Text},
        {"eps", "1e-8", Kind::Number},
        {"samples", "10000", Kind::Integer},
        {"block_half", "40", Kind::Integer},
        {"x", "0.3", Kind::Number},
        {"morse_constant", "10", Kind::Number},
        {"bound_constant", "64", Kind::Number},
        // run
        {"seed", "1", Kind::Integer},
        {"strict", "false", Kind::Bool},
    };
    return f;
}

const Field* find_field(const std::string& key) {
    for (const auto& f : fields())
        if (f.key == key) return &f;
    return nullptr;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_long(const std::string& s, long& out) {
    if (s.empty()) return false;
    try {
        std::size_t pos = 0;
        out = std::stol(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

void validate(const Field& f, const std::string& v) {
    double d;
    long l;
    switch (f.kind) {
        case Kind::Number:
            if (!parse_double(v, d)) throw ConfigError("config: '" + f.key + "' expects a number, got '" + v + "'");
            break;
        case Kind::Integer:
            if (!parse_long(v, l)) throw ConfigError("config: '" + f.key + "' expects an integer, got '" + v + "'");
            break;
        case Kind::Bool:
            if (v != "true" && v != "false") throw ConfigError("config: '" + f.key + "' expects true or false");
            break;
        case Kind::Omega:
            if (v != "golden" && !parse_double(v, d))
                throw ConfigError("config: 'omega' expects a number or 'golden'");
            break;
        case Kind::List:
            if (!v.empty())
                for (const auto& item : split_list(v))
                    if (!parse_double(item, d))
                        throw ConfigError("config: '" + f.key + "' expects a comma-separated list of numbers");
            break;
        case Kind::Text:
            break;
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// Fixed-format number for CSV cells.
std::string cell(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json jnum(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

Json envelope(const std::string& command, const Config& cfg) {
    Json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = cfg.to_json();
    return j;
}

std::string csv_preamble(const std::string& command, const Config& cfg) {
    std::string s = "# " + std::string(kVersion) + " " + command + "\n";
    std::istringstream in(cfg.to_text());
    std::string line;
    while (std::getline(in, line)) s += "# " + line + "\n";
    return s;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << content;
}

PotentialSpec potential_from(const Config& cfg) {
    try {
        return preset_by_name(cfg.raw("potential"), cfg.list("coeffs"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ScaleParams scale_params_from(const Config& cfg) {
    ScaleParams p;
    p.N1 = static_cast<int>(cfg.integer("N1"));
    p.tau = cfg.num("tau");
    p.vartheta = cfg.num("vartheta");
    p.beta = cfg.num("beta");
    p.gamma = cfg.num("gamma");
    p.nu = cfg.num("nu");
    p.A_exp = cfg.num("A_exp");
    p.sigma = cfg.num("sigma");
    p.cap = static_cast<int>(cfg.integer("cap"));
    p.scales = static_cast<int>(cfg.integer("scales"));
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return p;
}

// ---------------------------------------------------------------------------

int cmd_lyapunov(const Config& cfg, const std::filesystem::path& out) {
    PotentialSpec v = potential_from(cfg);
    double lambda = cfg.num("lambda"), omega = cfg.omega();
    long n = cfg.integer("n");
    long xs = cfg.integer("x_samples");
    if (n < 100) throw ConfigError("config: lyapunov needs n >= 100");
    if (xs < 10) throw ConfigError("config: lyapunov needs x_samples >= 10");
    std::vector<double> grid = cfg.list("E_grid");
    if (grid.empty()) {
        long pts = cfg.integer("E_points");
        if (pts < 1) throw ConfigError("config: E_points must be >= 1");
        auto lo_v = cfg.list("E_min"), hi_v = cfg.list("E_max");
        double lo = lo_v.empty() ? lambda * v.meta.v_min - 2.0 : lo_v[0];
        double hi = hi_v.empty() ? lambda * v.meta.v_max + 2.0 : hi_v[0];
        for (long k = 0; k < pts; ++k) grid.push_back(pts == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (pts - 1));
    }
    std::vector<LyapunovEstimate> est(grid.size());
    std::uint64_t seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    for (std::size_t k = 0; k < grid.size(); ++k)
        est[k] = lyapunov_estimate(omega, grid[k], lambda, v, n, static_cast<int>(xs), seed);
    std::string csv = csv_preamble("lyapunov", cfg) + "E,L,std_error\n";
    double min_L = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        csv += cell(grid[k]) + "," + cell(est[k].value) + "," + cell(est[k].std_error) + "\n";
        min_L = std::min(min_L, est[k].value);
    }
    std::filesystem::create_directories(out);
    write_file(out / "lyapunov.csv", csv);
    double quarter = lambda > 0 ? 0.25 * std::log(lambda) : 0.0;
    std::cout << "lyapunov: " << grid.size() << " energies, min L = " << fmt(min_L)
              << ", quarter log lambda = " << fmt(quarter) << (min_L >= quarter ? " (above)" : " (below)") << "\n";
    return 0;
}

int cmd_verify(const Config& cfg, const std::string& suite, const std::filesystem::path& out) {
    SuiteOptions o;
    o.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    o.lambda = cfg.num("lambda");
    o.trials = static_cast<int>(cfg.integer("trials"));
    o.plant_violation = cfg.flag("plant_violation");
    if (o.trials < 1) throw ConfigError("config: trials must be >= 1");
    Json report;
    try {
        report = run_suite(suite, o);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    Json doc = envelope("verify", cfg);
    doc["report"] = report;
    std::filesystem::create_directories(out);
    write_file(out / ("verify_" + report["suite"].get<std::string>() + ".json"), doc.dump(2) + "\n");
    bool pass = report["pass"].get<bool>();
    long gates = 0;
    for (const auto& c : report["checks"])
        if (c["gate"].get<bool>()) ++gates;
    std::cout << "verify " << report["suite"].get<std::string>() << ": " << (pass ? "pass" : "FAIL") << " ("
              << report["checks"].size() << " checks, " << gates << " hypothesis gates)\n";
    for (const auto& c : report["checks"])
        if (!c["pass"].get<bool>()) std::cout << "  failed: " << c["name"].get<std::string>() << "\n";
    return (!pass && cfg.flag("strict")) ? 1 : 0;
}

Json audit_json(const AuditResult& a) {
    Json j;
    j["name"] = a.name;
    j["checked"] = a.checked;
    j["violations"] = a.violations;
    j["margin"] = jnum(a.margin);
    j["pass"] = a.pass;
    if (!a.note.empty()) j["note"] = a.note;
    return j;
}

Json set1_json(const SimpleSet1D& s) {
    Json a = Json::array();
    for (const auto& [lo, hi] : s.intervals()) a.push_back(Json::array({lo, hi}));
    return a;
}

int cmd_multiscale(const Config& cfg, const std::filesystem::path& out) {
    PotentialSpec v = potential_from(cfg);
    MultiscaleConfig mc;
    mc.params = scale_params_from(cfg);
    mc.lambda = cfg.num("lambda");
    mc.eps_flat = cfg.num("eps_flat");
    mc.omega_lo = cfg.num("omega_lo");
    mc.omega_hi = cfg.num("omega_hi");
    mc.x_grid = static_cast<int>(cfg.integer("x_grid"));
    mc.omega_grid = static_cast<int>(cfg.integer("omega_grid"));
    mc.domain_samples = cfg.integer("domain_samples");
    mc.h2_window = cfg.num("h2_window");
    mc.cell_constant = cfg.num("cell_constant");
    mc.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    mc.strict = false;  // audits are collected in full; strictness is applied to the exit code
    if (mc.x_grid < 1 || mc.omega_grid < 1) throw ConfigError("config: grids must be >= 1");
    if (!(mc.omega_lo < mc.omega_hi)) throw ConfigError("config: need omega_lo < omega_hi");
    if (!(mc.lambda > 0)) throw ConfigError("config: lambda must be positive");
    MultiscaleResult r;
    try {
        r = multiscale_run(mc, v);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    Json doc = envelope("multiscale", cfg);
    Json rep;
    rep["schedule"] = r.schedule;
    rep["warnings"] = r.warnings;
    Json flat;
    flat["eps"] = r.flat.eps;
    flat["delta"] = r.flat.delta;
    flat["h_delta"] = r.flat.h_delta;
    flat["C0"] = r.flat.C0;
    flat["A_set"] = set1_json(r.flat.A_set);
    flat["mes_V_of_A"] = r.flat.V_of_A.measure();
    flat["J"] = Json::array({r.flat.J_lo, r.flat.J_hi});
    flat["R_count"] = r.flat.R.size();
    flat["R_bound"] = r.flat.R_bound;
    flat["E0"] = set1_json(r.flat.E0);
    flat["excluded_measure"] = r.flat.excluded_measure;
    flat["excluded_bound"] = r.flat.excluded_bound;
    flat["L_total"] = r.flat.L_total;
    flat["pass"] = r.flat.image_ok && r.flat.R_ok && r.flat.excluded_ok;
    rep["flat_slope"] = flat;
    Json dom;
    dom["tiles"] = r.domain.tiles.size();
    dom["tiles_checked"] = r.domain.tiles_checked;
    dom["complexity"] = r.domain.complexity;
    dom["complexity_bound"] = r.domain.complexity_bound;
    dom["measure"] = r.domain.D1.measure();
    dom["difference_set_violations"] = r.domain.btilde_violations;
    dom["max_frequency_fraction"] = r.domain.max_B_fraction;
    dom["frequency_fraction_bound"] = r.domain.B_bound;
    dom["samples"] = r.domain.samples;
    dom["sample_violations"] = r.domain.sample_violations;
    dom["pass"] = r.domain.pass;
    rep["domain"] = dom;
    rep["cells"] = Json::array({r.cells_x, r.cells_omega});
    Json states = Json::array();
    std::string csv = csv_preamble("multiscale", cfg) + "s,N,x,omega,E,dE_dx,dE_domega,d2E_dx2,half_gap,residual\n";
    for (const auto& st : r.states) {
        Json s;
        s["s"] = st.s;
        s["N"] = st.N;
        s["grid_points"] = st.grid_points;
        s["grid_in_domain"] = st.grid_in_domain;
        s["grid_surviving"] = st.grid_surviving;
        s["excluded"] = st.excluded;
        s["mes_D"] = st.mes_D;
        s["mes_eliminated"] = st.mes_eliminated;
        s["mes_Omega"] = st.mes_Omega;
        s["mes_E"] = st.mes_E;
        s["compl_D"] = st.compl_D;
        s["Omega"] = set1_json(st.Omega);
        s["rho_min"] = jnum(st.branch.rho);
        Json au = Json::array();
        for (const auto& a : st.audits) au.push_back(audit_json(a));
        s["audits"] = au;
        s["audit_pass"] = st.audit_pass;
        s["first_failure"] = st.first_failure;
        states.push_back(s);
        for (const auto& b : st.branch.samples)
            csv += std::to_string(st.s) + "," + std::to_string(st.N) + "," + cell(b.x) + "," + cell(b.omega) + "," +
                   cell(b.E) + "," + cell(b.dE_dx) + "," + cell(b.dE_domega) + "," + cell(b.d2E_dx2) + "," +
                   cell(b.half_gap) + "," + cell(b.residual) + "\n";
    }
    rep["states"] = states;
    rep["all_pass"] = r.all_pass;
    rep["first_failure"] = r.first_failure;
    doc["report"] = rep;
    std::filesystem::create_directories(out);
    write_file(out / "multiscale.json", doc.dump(2) + "\n");
    write_file(out / "multiscale_branches.csv", csv);

    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& st : r.states) {
        std::cout << "scale " << st.s << " (N=" << st.N << "): " << st.grid_surviving << "/" << st.grid_in_domain
                  << " grid points survive, audits " << (st.audit_pass ? "pass" : "FAIL") << "\n";
        for (const auto& a : st.audits)
            if (!a.pass)
                std::cout << "  failed: " << a.name << " (" << a.violations << "/" << a.checked << ")\n";
    }
    if (!r.all_pass && cfg.flag("strict")) {
        std::cerr << "strict: audit failure " << r.first_failure << "\n";
        return 1;
    }
    return 0;
}

int cmd_variation(const Config& cfg, const std::filesystem::path& out) {
    long T = cfg.integer("T");
    double delta = cfg.num("delta");
    if (T < 1) throw ConfigError("config: T must be >= 1");
    if (!(delta > 0) || delta > std::pow(static_cast<double>(T), -5.0))
        throw ConfigError("config: variation needs 0 < delta <= T^-5");
    const std::string mode = cfg.raw("variation_params");
    if (mode != "random" && mode != "zero") throw ConfigError("config: variation_params must be random or zero");
    std::uint64_t seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    VariationSpec w = mode == "zero" ? VariationSpec::zero(static_cast<int>(T), delta)
                                     : VariationSpec::random(static_cast<int>(T), delta, seed);
    VariationBoundReport b = verify_variation_derivative_bounds(w, 4096, cfg.num("bound_constant"));

    Json doc = envelope("variation", cfg);
    Json rep;
    Json bj;
    bj["T"] = b.T;
    bj["delta"] = b.delta;
    bj["max_abs_R"] = b.max_abs_R;
    bj["max_abs_v"] = b.max_abs_v;
    bj["max_over_orders"] = b.max_over_orders;
    bj["ratio_to_inv_T"] = b.ratio_to_inv_T;
    bj["threshold"] = b.threshold;
    bj["pass"] = b.pass;
    rep["derivative_bounds"] = bj;

    PotentialSpec v = potential_from(cfg);
    double lambda = cfg.num("lambda"), omega = cfg.omega(), x = cfg.num("x"), eps = cfg.num("eps");
    long half = cfg.integer("block_half");
    if (half < 1) throw ConfigError("config: block_half must be >= 1");
    long samples = mode == "zero" ? 0 : cfg.integer("samples");
    IndexInterval iv(-half, half);
    HamiltonianBlock h(iv, x, omega, lambda, v);
    EigDerivative base = eig_derivative_near(h, lambda * v(x));
    MorseTemplate tmpl;
    tmpl.T = static_cast<int>(T);
    tmpl.delta = delta;
    tmpl.eta = w.eta;
    MorseReport m = morse_sample(v, lambda, iv, x, omega, base.E, base.half_gap, tmpl, eps, samples, seed,
                                 cfg.num("morse_constant"));
    Json mj;
    mj["lambda_size"] = m.lambda_size;
    mj["E_ref"] = base.E;
    mj["rho"] = base.half_gap;
    mj["samples"] = m.samples;
    mj["discarded"] = m.discarded;
    mj["hits"] = m.hits;
    mj["estimate"] = m.estimate;
    mj["sigma"] = m.sigma;
    mj["bound"] = m.bound;
    mj["constant"] = m.constant;
    mj["min_abs_derivatives"] = jnum(samples > 0 ? m.min_dE : 0.0);
    mj["pass"] = m.pass;
    rep["morse"] = mj;
    rep["pass"] = b.pass && m.pass;
    doc["report"] = rep;
    std::filesystem::create_directories(out);
    write_file(out / "variation.json", doc.dump(2) + "\n");
    std::cout << "variation: derivative bound " << (b.pass ? "pass" : "FAIL") << " (max " << fmt(b.max_over_orders)
              << " vs " << fmt(b.threshold) << "), morse estimate " << fmt(m.estimate) << " vs "
              << fmt(m.constant * m.bound) << " " << (m.pass ? "pass" : "FAIL") << "\n";
    return (!(b.pass && m.pass) && cfg.flag("strict")) ? 1 : 0;
}

}  // namespace

// ---------------------------------------------------------------------------

Config::Config() {
    for (const auto& f : fields()) values_[f.key] = f.def;
}

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
    const Field* f = find_field(key);
    if (!f) throw ConfigError("config: unknown key '" + key + "'");
    validate(*f, value);
    values_[key] = value;
}

const std::string& Config::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: unknown key '" + key + "'");
    return it->second;
}

double Config::num(const std::string& key) const {
    double d;
    if (!parse_double(raw(key), d)) throw ConfigError("config: '" + key + "' is not a number");
    return d;
}

long Config::integer(const std::string& key) const {
    long l;
    if (!parse_long(raw(key), l)) throw ConfigError("config: '" + key + "' is not an integer");
    return l;
}

bool Config::flag(const std::string& key) const { return raw(key) == "true"; }

std::vector<double> Config::list(const std::string& key) const {
    std::vector<double> out;
    const std::string& s = raw(key);
    if (s.empty()) return out;
    for (const auto& item : split_list(s)) {
        double d;
        if (!parse_double(item, d)) throw ConfigError("config: bad list entry in '" + key + "'");
        out.push_back(d);
    }
    return out;
}

double Config::omega() const {
    if (raw("omega") == "golden") return kGolden;
    return num("omega");
}

Json Config::to_json() const {
    Json j;
    for (const auto& f : fields()) j[f.key] = values_.at(f.key);
    return j;
}

std::string Config::to_text() const {
    std::string s;
    for (const auto& f : fields()) s += f.key + " = " + values_.at(f.key) + "\n";
    return s;
}

const std::vector<std::pair<std::string, std::string>>& Config::schema() {
    static const std::vector<std::pair<std::string, std::string>> s = [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& f : fields()) out.push_back({f.key, f.def});
        return out;
    }();
    return s;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Numerical experiments for quasi-periodic Schroedinger operators", "qps"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::string config_path, out_dir = "qps_out", suite;
    long seed = -1;
    bool strict = false;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--seed", seed, "override the configured seed");
        sub->add_flag("--strict", strict, "exit 1 on any validated-property failure");
        sub->add_option("--out", out_dir, "output directory");
    };
    auto* lyap = app.add_subcommand("lyapunov", "Lyapunov exponent sweep over an energy grid (CSV)");
    auto* verify = app.add_subcommand("verify", "run a property suite (JSON)");
    verify->add_option("suite", suite, "A|B|C|D|E|F|separation|variation");
    auto* multi = app.add_subcommand("multiscale", "scale-by-scale driver with audits (JSON + CSV)");
    auto* var = app.add_subcommand("variation", "variation construction and Morse sampling (JSON)");
    for (auto* s : {lyap, verify, multi, var}) common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Config cfg = config_path.empty() ? Config() : Config::load(config_path);
        if (seed >= 0) cfg.set("seed", std::to_string(seed));
        if (strict) cfg.set("strict", "true");
        std::filesystem::path out(out_dir);
        if (*lyap) return cmd_lyapunov(cfg, out);
        if (*verify) {
            if (suite.empty()) suite = cfg.raw("suite");
            if (suite.empty()) throw ConfigError("verify: no suite given");
            return cmd_verify(cfg, suite, out);
        }
        if (*multi) return cmd_multiscale(cfg, out);
        if (*var) return cmd_variation(cfg, out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace qps
