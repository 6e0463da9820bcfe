#include "mfhjb/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mfhjb/errors.hpp"

namespace mfhjb {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw config_error(origin + ":" + std::to_string(line) + ": " + what);
}

double to_double(const std::string& v, const std::string& origin, int line) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail(origin, line, "expected a number, got '" + v + "'");
    }
}

long long to_int(const std::string& v, const std::string& origin, int line) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail(origin, line, "expected an integer, got '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& v, const std::string& origin, int line) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail(origin, line, "expected an unsigned integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& origin, int line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(origin, line, "expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> to_double_list(const std::string& v, const std::string& origin, int line) {
    std::vector<double> out;
    for (const std::string& s : split_list(v)) out.push_back(to_double(s, origin, line));
    return out;
}

std::vector<int> to_int_list(const std::string& v, const std::string& origin, int line) {
    std::vector<int> out;
    for (const std::string& s : split_list(v))
        out.push_back(static_cast<int>(to_int(s, origin, line)));
    return out;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::string section;
    std::stringstream ss(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"problem", "solver", "metrics", "lift",
                                          "verify",  "output", "run"};
            if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
                    return section == k;
                }) == std::end(known))
                fail(origin, lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(origin, lineno, "expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty()) fail(origin, lineno, "key '" + key + "' before any [section]");

        const auto is = [&](const char* s, const char* k) { return section == s && key == k; };
        if (is("problem", "name")) cfg.problem = val;
        else if (is("problem", "N")) cfg.N = static_cast<int>(to_int(val, origin, lineno));
        else if (is("problem", "M")) cfg.M = static_cast<int>(to_int(val, origin, lineno));
        else if (is("problem", "T")) cfg.T = to_double(val, origin, lineno);
        else if (is("problem", "a0")) cfg.a0 = to_double(val, origin, lineno);
        else if (is("problem", "has_z")) cfg.has_z = to_bool(val, origin, lineno);
        else if (is("problem", "c_g")) cfg.params.c_g = to_double(val, origin, lineno);
        else if (is("problem", "actions")) cfg.params.actions = static_cast<int>(to_int(val, origin, lineno));
        else if (is("problem", "game_actions")) cfg.params.game_actions = static_cast<int>(to_int(val, origin, lineno));
        else if (is("problem", "colehopf_amp")) cfg.params.colehopf_amp = to_double(val, origin, lineno);
        else if (is("solver", "dt")) cfg.dt = to_double(val, origin, lineno);
        else if (is("solver", "cfl_safety")) cfg.cfl_safety = to_double(val, origin, lineno);
        else if (is("solver", "theta")) cfg.theta = to_double(val, origin, lineno);
        else if (is("solver", "p_clip")) cfg.p_clip = to_double(val, origin, lineno);
        else if (is("solver", "diffusion")) cfg.diffusion = val;
        else if (is("solver", "snapshot_times")) cfg.snapshot_times = to_double_list(val, origin, lineno);
        else if (is("metrics", "sobolev_k")) cfg.sobolev_k = static_cast<int>(to_int(val, origin, lineno));
        else if (is("metrics", "sobolev_xi")) cfg.sobolev_xi = static_cast<int>(to_int(val, origin, lineno));
        else if (is("metrics", "cneg_modes")) cfg.cneg_modes = static_cast<int>(to_int(val, origin, lineno));
        else if (is("lift", "method")) cfg.lift_method = val;
        else if (is("lift", "samples")) cfg.lift_samples = static_cast<int>(to_int(val, origin, lineno));
        else if (is("lift", "convergence_N")) cfg.convergence_Ns = to_int_list(val, origin, lineno);
        else if (is("lift", "lip_pairs")) cfg.lip_pairs = static_cast<int>(to_int(val, origin, lineno));
        else if (is("lift", "lip_atoms")) cfg.lip_atoms = static_cast<int>(to_int(val, origin, lineno));
        else if (is("verify", "paths")) cfg.paths = static_cast<int>(to_int(val, origin, lineno));
        else if (is("verify", "dt_sim")) cfg.dt_sim = to_double(val, origin, lineno);
        else if (is("verify", "t0")) cfg.t0 = to_double(val, origin, lineno);
        else if (is("verify", "x0")) cfg.x0 = to_double_list(val, origin, lineno);
        else if (is("output", "dir")) cfg.out_dir = val;
        else if (is("output", "write_grids")) cfg.write_grids = to_bool(val, origin, lineno);
        else if (is("run", "seed")) cfg.seed = to_u64(val, origin, lineno);
        else if (is("run", "budget_bytes")) cfg.budget_bytes = to_u64(val, origin, lineno);
        else if (is("run", "threads")) cfg.threads = static_cast<int>(to_int(val, origin, lineno));
        else fail(origin, lineno, "unknown key '" + key + "' in section [" + section + "]");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

void ExperimentConfig::validate() const {
    const auto known = problem_names();
    if (std::find(known.begin(), known.end(), problem) == known.end())
        throw config_error("unknown problem name: " + problem);
    if (N < 1) throw config_error("N must be at least 1");
    if (M < 4 || M % 2 != 0) throw config_error("M must be even and at least 4");
    if (diffusion != "resolvent" && diffusion != "semigroup")
        throw config_error("diffusion must be 'resolvent' or 'semigroup'");
    if (lift_method != "exact" && lift_method != "monte-carlo")
        throw config_error("lift method must be 'exact' or 'monte-carlo'");
    if (lift_samples < 1) throw config_error("lift samples must be positive");
    if (sobolev_k < 1) throw config_error("sobolev_k must be positive");
    if (sobolev_xi < 1) throw config_error("sobolev_xi must be positive");
    if (cneg_modes < 1) throw config_error("cneg_modes must be positive");
    if (convergence_Ns.empty()) throw config_error("convergence_N list is empty");
    for (std::size_t i = 1; i < convergence_Ns.size(); ++i)
        if (convergence_Ns[i] <= convergence_Ns[i - 1])
            throw config_error("convergence_N must be strictly increasing");
    if (paths < 1) throw config_error("paths must be positive");
    if (dt_sim <= 0.0) throw config_error("dt_sim must be positive");
    if (lip_pairs < 1) throw config_error("lip_pairs must be positive");
    if (lip_atoms < 1) throw config_error("lip_atoms must be positive");
    if (cfl_safety <= 0.0 || cfl_safety > 1.0)
        throw config_error("cfl_safety must lie in (0, 1]");
    if (threads < 0) throw config_error("threads must be nonnegative");
}

std::string config_echo(const ExperimentConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "[problem]\n"
        << "name=" << c.problem << "\nN=" << c.N << "\nM=" << c.M << "\nT=" << c.T
        << "\na0=" << c.a0 << "\nhas_z=" << (c.has_z ? "true" : "false")
        << "\nc_g=" << c.params.c_g << "\nactions=" << c.params.actions
        << "\ngame_actions=" << c.params.game_actions
        << "\ncolehopf_amp=" << c.params.colehopf_amp << "\n";
    out << "[solver]\ndt=" << c.dt << "\ncfl_safety=" << c.cfl_safety << "\ntheta=" << c.theta
        << "\np_clip=" << c.p_clip << "\ndiffusion=" << c.diffusion << "\nsnapshot_times=";
    for (std::size_t i = 0; i < c.snapshot_times.size(); ++i)
        out << (i ? "," : "") << c.snapshot_times[i];
    out << "\n[metrics]\nsobolev_k=" << c.sobolev_k << "\nsobolev_xi=" << c.sobolev_xi
        << "\ncneg_modes=" << c.cneg_modes << "\n";
    out << "[lift]\nmethod=" << c.lift_method << "\nsamples=" << c.lift_samples
        << "\nconvergence_N=";
    for (std::size_t i = 0; i < c.convergence_Ns.size(); ++i)
        out << (i ? "," : "") << c.convergence_Ns[i];
    out << "\nlip_pairs=" << c.lip_pairs << "\nlip_atoms=" << c.lip_atoms << "\n";
    out << "[verify]\npaths=" << c.paths << "\ndt_sim=" << c.dt_sim << "\nt0=" << c.t0 << "\nx0=";
    for (std::size_t i = 0; i < c.x0.size(); ++i) out << (i ? "," : "") << c.x0[i];
    out << "\n[output]\ndir=" << c.out_dir
        << "\nwrite_grids=" << (c.write_grids ? "true" : "false") << "\n";
    out << "[run]\nseed=" << c.seed << "\nbudget_bytes=" << c.budget_bytes
        << "\nthreads=" << c.threads << "\n";
    return out.str();
}

SolverConfig build_solver_config(const ExperimentConfig& cfg, const ProblemDef& problem) {
    SolverConfig sc;
    sc.grid = GridSpec{problem.d, cfg.N, cfg.M, cfg.has_z};
    sc.T = cfg.T >= 0.0 ? cfg.T : problem.default_T;
    sc.a0 = cfg.a0 >= 0.0 ? cfg.a0 : problem.default_a0;
    sc.dt = cfg.dt;
    sc.cfl_safety = cfg.cfl_safety;
    sc.theta = cfg.theta;
    sc.p_clip = cfg.p_clip;
    sc.r_star = problem.r_star(sc.T);
    sc.diffusion = cfg.diffusion == "semigroup" ? StepKind::Semigroup : StepKind::Resolvent;
    sc.snapshot_times = cfg.snapshot_times;
    if (sc.snapshot_times.empty()) sc.snapshot_times = {0.0, 0.5 * sc.T, sc.T};
    sc.budget_bytes = cfg.budget_bytes;
    sc.seed = cfg.seed;
    return sc;
}

} // namespace mfhjb
