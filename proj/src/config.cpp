#include "spde/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spde {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct KeyTable {
    std::map<std::string, std::function<void(Scenario&, const std::string&)>> set;
};

double num(const std::string& v) { return std::stod(v); }
int inum(const std::string& v) { return std::stoi(v); }

std::map<std::string, KeyTable> build_tables() {
    std::map<std::string, KeyTable> t;
    auto& root = t[""].set;
    root["name"] = [](Scenario& s, const std::string& v) { s.name = v; };
    auto& op = t["operator"].set;
    op["family"] = [](Scenario& s, const std::string& v) { s.op_family = v; };
    op["param"] = [](Scenario& s, const std::string& v) { s.op_param = num(v); };
    op["a0"] = [](Scenario& s, const std::string& v) { s.a0 = num(v); };
    op["mu"] = [](Scenario& s, const std::string& v) { s.mu = num(v); };
    op["kappa"] = [](Scenario& s, const std::string& v) { s.kappa = num(v); };
    op["w"] = [](Scenario& s, const std::string& v) { s.w = v; };
    auto& noise = t["noise"].set;
    noise["gamma"] = [](Scenario& s, const std::string& v) { s.gamma = num(v); };
    noise["N"] = [](Scenario& s, const std::string& v) { s.N = inum(v); };
    noise["regime"] = [](Scenario& s, const std::string& v) { s.regime = v; };
    noise["q"] = [](Scenario& s, const std::string& v) { s.q = num(v); };
    noise["beta"] = [](Scenario& s, const std::string& v) { s.beta = num(v); };
    auto& nl = t["nonlinearity"].set;
    nl["f"] = [](Scenario& s, const std::string& v) { s.f_id = v; };
    nl["f_scale"] = [](Scenario& s, const std::string& v) { s.f_scale = num(v); };
    nl["g"] = [](Scenario& s, const std::string& v) { s.g_id = v; };
    nl["g_scale"] = [](Scenario& s, const std::string& v) { s.g_scale = num(v); };
    nl["g_offset"] = [](Scenario& s, const std::string& v) { s.g_offset = num(v); };
    nl["lipschitz"] = [](Scenario& s, const std::string& v) { s.lipschitz = v; };
    nl["theta_F"] = [](Scenario& s, const std::string& v) { s.theta_F = num(v); };
    nl["theta_B"] = [](Scenario& s, const std::string& v) { s.theta_B = num(v); };
    nl["a"] = [](Scenario& s, const std::string& v) { s.a = num(v); };
    auto& init = t["initial"].set;
    init["u0"] = [](Scenario& s, const std::string& v) { s.u0_id = v; };
    init["u0_scale"] = [](Scenario& s, const std::string& v) { s.u0_scale = num(v); };
    auto& grids = t["grids"].set;
    grids["n_cells"] = [](Scenario& s, const std::string& v) { s.n_cells = inum(v); };
    grids["m_steps"] = [](Scenario& s, const std::string& v) { s.m_steps = inum(v); };
    grids["substeps"] = [](Scenario& s, const std::string& v) { s.substeps = inum(v); };
    grids["T"] = [](Scenario& s, const std::string& v) { s.T = num(v); };
    auto& run = t["run"].set;
    run["M"] = [](Scenario& s, const std::string& v) { s.M = inum(v); };
    run["r"] = [](Scenario& s, const std::string& v) { s.r = num(v); };
    run["p_weight"] = [](Scenario& s, const std::string& v) { s.p_weight = v; };
    run["seed"] = [](Scenario& s, const std::string& v) { s.seed = std::stoull(v); };
    run["tol"] = [](Scenario& s, const std::string& v) { s.tol = num(v); };
    run["max_iter"] = [](Scenario& s, const std::string& v) { s.max_iter = inum(v); };
    run["workers"] = [](Scenario& s, const std::string& v) { s.workers = inum(v); };
    auto& checks = t["checks"].set;
    checks["ids"] = [](Scenario& s, const std::string& v) {
        s.check_ids.clear();
        std::istringstream ss(v);
        std::string id;
        while (std::getline(ss, id, ',')) {
            id = trim(id);
            if (!id.empty()) s.check_ids.push_back(id);
        }
    };
    checks["holder_lo"] = [](Scenario& s, const std::string& v) { s.holder_lo = num(v); };
    checks["holder_hi"] = [](Scenario& s, const std::string& v) { s.holder_hi = num(v); };
    checks["write_paths"] = [](Scenario& s, const std::string& v) { s.write_paths = v == "true"; };
    return t;
}

} // namespace

Scenario parse_scenario(const std::string& text) {
    static const auto tables = build_tables();
    Scenario sc;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            if (!tables.count(section))
                throw std::runtime_error("config line " + std::to_string(lineno) +
                                         ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& table = tables.at(section).set;
        const auto it = table.find(key);
        if (it == table.end())
            throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown key '" +
                                     key + "' in section [" + section + "]");
        it->second(sc, value);
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str());
}

ScenarioRun Scenario::build() const {
    // Hypothesis validation; messages cite the tags they enforce.
    if (!(mu > 0.5 && mu <= 1.0))
        throw std::domain_error("scenario: mu = " + std::to_string(mu) +
                                " outside (1/2,1] violates the coefficient hypothesis (AT2)");
    if (!(a + theta_F < 1.0)) throw std::domain_error("scenario: a + theta_F >= 1 violates (H2)");
    if (!(a + theta_B < 0.5)) throw std::domain_error("scenario: a + theta_B >= 1/2 violates (H3)");
    if (regime == "linf") {
        if (!(gamma > 1.0))
            throw std::domain_error(
                "scenario: gamma <= 1 diverges for the cosine family, violates (condCov)/(condcoven)");
    } else if (regime == "lq") {
        if (!(beta > 0.0 && beta < 0.5) || !(q > 1.0 / (1.0 - 2.0 * beta)))
            throw std::domain_error("scenario: (q,beta) violates (condCovb): need q > 1/(1-2 beta)");
    } else {
        throw std::domain_error("scenario: unknown covariance regime '" + regime + "'");
    }

    ScenarioRun run;
    run.id = name;
    run.n_cells = n_cells;
    run.m_steps = m_steps;
    run.substeps = substeps;
    run.checks = check_ids;
    run.holder_lo = holder_lo;
    run.holder_hi = holder_hi;

    OperatorFamily fam;
    if (op_family == "constant")
        fam = OperatorFamily::constant_laplacian(op_param, a0);
    else if (op_family == "linear_t")
        fam = OperatorFamily::linear_in_time(op_param, a0);
    else if (op_family == "perturbed_cosine")
        fam = OperatorFamily::perturbed_cosine(op_param, a0);
    else if (op_family == "zero")
        fam = OperatorFamily::zero();
    else
        throw std::domain_error("scenario: unknown operator family '" + op_family + "'");
    fam.mu = mu;
    fam.kappa = op_family == "zero" ? 0.0 : kappa;

    const SpaceGrid grid = SpaceGrid::make(n_cells);
    if (w == "auto") {
        fam.w = choose_shift(fam, grid, {0.0, 0.5 * T, T});
    } else {
        fam.w = std::stod(w);
    }

    ProblemSpec ps;
    ps.fam = fam;
    ps.noise = make_model(gamma, N, grid);
    ps.theta_F = theta_F;
    ps.theta_B = theta_B;
    ps.a = a;
    ps.T = T;
    ps.lipschitz_global = lipschitz == "global";

    const double fs = f_scale;
    if (f_id == "zero") {
        ps.f = [](double, double, double) { return 0.0; };
        ps.L_f = 0.0;
    } else if (f_id == "linear") {
        ps.f = [fs](double, double, double u) { return fs * u; };
        ps.L_f = std::abs(fs);
    } else if (f_id == "tanh") {
        ps.f = [fs](double, double, double u) { return fs * std::tanh(u); };
        ps.L_f = std::abs(fs);
    } else if (f_id == "square") {
        ps.f = [fs](double, double, double u) { return fs * u * u; };
        ps.lipschitz_global = false;
    } else if (f_id == "cube") {
        ps.f = [fs](double, double, double u) { return fs * u * u * u; };
        ps.lipschitz_global = false;
    } else {
        throw std::domain_error("scenario: unknown f id '" + f_id + "'");
    }
    const double gs = g_scale, go = g_offset;
    if (g_id == "zero") {
        ps.g = [](double, double, double) { return 0.0; };
        ps.L_g = 0.0;
    } else if (g_id == "constant") {
        ps.g = [gs](double, double, double) { return gs; };
        ps.L_g = 0.0;
        ps.C_g = std::abs(gs);
    } else if (g_id == "linear") {
        ps.g = [gs](double, double, double u) { return gs * u; };
        ps.L_g = std::abs(gs);
    } else if (g_id == "affine") {
        ps.g = [gs, go](double, double, double u) { return go + gs * u; };
        ps.L_g = std::abs(gs);
        ps.C_g = std::abs(go);
    } else {
        throw std::domain_error("scenario: unknown g id '" + g_id + "'");
    }

    const double us = u0_scale;
    if (u0_id == "constant")
        ps.u0 = Field::constant(grid, us);
    else if (u0_id == "cospi")
        ps.u0 = Field::of(grid, [us](double s) { return us * std::cos(M_PI * s); });
    else if (u0_id == "mix")
        ps.u0 = Field::of(grid, [us](double s) { return us * (1.0 + 0.5 * std::cos(M_PI * s)); });
    else if (u0_id == "step")
        ps.u0 = Field::of(grid, [us](double s) { return s < 0.5 ? us : 0.0; });
    else
        throw std::domain_error("scenario: unknown u0 id '" + u0_id + "'");

    run.ps = std::move(ps);

    PicardConfig cfg;
    cfg.r = r;
    cfg.ensemble = M;
    cfg.seed = seed;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.workers = workers;
    if (p_weight == "auto") {
        cfg.auto_weight = true;
        cfg.p_weight = 0.0;
    } else {
        cfg.auto_weight = false;
        cfg.p_weight = std::stod(p_weight);
    }
    run.cfg = cfg;
    return run;
}

} // namespace spde
