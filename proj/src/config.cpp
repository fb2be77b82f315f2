#include "rsmc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "rsmc/errors.hpp"

namespace rsmc {

namespace {

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail_line(int line, const std::string& what) {
    std::ostringstream os;
    os << "config line " << line << ": " << what;
    throw ConfigError(os.str());
}

double parse_number(const Entry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail_line(e.line, "key \"" + key + "\" needs a number, got \"" + e.value + "\"");
    }
}

std::uint64_t parse_u64(const Entry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail_line(e.line, "key \"" + key + "\" needs a nonnegative integer, got \"" +
                              e.value + "\"");
    }
}

bool parse_bool(const Entry& e, const std::string& key) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    fail_line(e.line, "key \"" + key + "\" needs true/false, got \"" + e.value + "\"");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::vector<Monomial> parse_monomials(const Entry& e) {
    std::vector<Monomial> out;
    for (const std::string& part : split(e.value, ';')) {
        if (part.empty()) continue;
        const auto fields = split(part, ':');
        if (fields.size() != 3) {
            fail_line(e.line, "monomial \"" + part + "\" must be coeff:v_power:dv_power");
        }
        try {
            Monomial m;
            m.coeff = std::stod(fields[0]);
            m.v_power = std::stoi(fields[1]);
            m.dv_power = std::stoi(fields[2]);
            if (m.v_power < 0 || m.dv_power < 0) throw std::invalid_argument("negative");
            out.push_back(m);
        } catch (const std::exception&) {
            fail_line(e.line, "bad monomial \"" + part + "\"");
        }
    }
    return out;
}

const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"problem",
         {"name", "b", "g", "g_prime", "g_second", "t_start", "t_end", "monomials",
          "eval_t", "eval_x", "working_lo", "working_hi"}},
        {"estimator", {"method", "perturb_sigma0", "half_v_variant", "depth_cap", "event_probs"}},
        {"lifetimes", {"kappa", "eta"}},
        {"sigma", {"sigma0", "n"}},
        {"mc",
         {"n_samples", "levels", "repeats", "master_seed", "confidence_level", "threads",
          "unsafe_variance"}},
    };
    return keys;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

EventDistribution ParsedConfig::effective_events(bool need_correction) const {
    if (!has_events) {
        return need_correction ? EventDistribution::uniform_with_correction(problem)
                               : EventDistribution::uniform_monomials(problem);
    }
    if (need_correction || events.q_correction == 0.0) return events;
    // correction kind does not exist for the pure-branching baseline
    EventDistribution ev = events;
    const double mass = 1.0 - ev.q_correction;
    ev.q_correction = 0.0;
    for (double& q : ev.q_monomials) q /= mass;
    return ev;
}

ParsedConfig parse_config(const std::string& text) {
    std::map<std::string, Section> doc;
    std::map<std::string, int> section_lines;
    {
        std::istringstream in(text);
        std::string raw;
        std::string section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            std::string s = trim(raw);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            if (s.front() == '[') {
                if (s.back() != ']') fail_line(line, "malformed section header");
                section = trim(s.substr(1, s.size() - 2));
                if (known_keys().find(section) == known_keys().end()) {
                    fail_line(line, "unknown section [" + section + "]");
                }
                section_lines[section] = line;
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) fail_line(line, "expected key = value");
            if (section.empty()) fail_line(line, "key outside any section");
            const std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            const auto& allowed = known_keys().at(section);
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                fail_line(line, "unknown key \"" + key + "\" in section [" + section + "]");
            }
            if (doc[section].count(key)) fail_line(line, "duplicate key \"" + key + "\"");
            doc[section][key] = Entry{value, line, false};
        }
    }

    auto lookup = [&](const std::string& section, const std::string& key) -> Entry* {
        auto sit = doc.find(section);
        if (sit == doc.end()) return nullptr;
        auto kit = sit->second.find(key);
        if (kit == sit->second.end()) return nullptr;
        return &kit->second;
    };

    ParsedConfig cfg;

    // [mc] first: the unsafe flag gates later validation.
    if (Entry* e = lookup("mc", "unsafe_variance")) cfg.mc.unsafe_variance = parse_bool(*e, "unsafe_variance");
    if (Entry* e = lookup("mc", "n_samples")) cfg.mc.n_samples = parse_u64(*e, "n_samples");
    if (Entry* e = lookup("mc", "repeats")) {
        cfg.mc.n_repeats = static_cast<int>(parse_u64(*e, "repeats"));
        if (cfg.mc.n_repeats < 1) fail_line(e->line, "repeats must be >= 1");
    }
    if (Entry* e = lookup("mc", "master_seed")) cfg.mc.master_seed = parse_u64(*e, "master_seed");
    if (Entry* e = lookup("mc", "confidence_level")) {
        cfg.mc.confidence_level = parse_number(*e, "confidence_level");
        if (!(cfg.mc.confidence_level > 0.0 && cfg.mc.confidence_level < 1.0)) {
            fail_line(e->line, "confidence_level must be in (0,1)");
        }
    }
    if (Entry* e = lookup("mc", "threads")) cfg.mc.threads = static_cast<int>(parse_u64(*e, "threads"));
    if (Entry* e = lookup("mc", "levels")) {
        for (const std::string& part : split(e->value, ',')) {
            if (part.empty()) continue;
            try {
                cfg.mc.sample_levels.push_back(std::stoull(part));
            } catch (const std::exception&) {
                fail_line(e->line, "bad level \"" + part + "\"");
            }
        }
        if (cfg.mc.sample_levels.empty()) fail_line(e->line, "levels must be nonempty");
    }
    if (cfg.mc.n_samples < 1) {
        throw ConfigError("[mc] n_samples must be >= 1");
    }

    // [problem]
    bool have_problem_section = doc.count("problem") > 0;
    if (Entry* e = lookup("problem", "name")) {
        if (!is_builtin_problem(e->value)) {
            fail_line(e->line, "unknown built-in problem \"" + e->value + "\"");
        }
        cfg.problem = make_builtin_problem(e->value);
        for (const char* k : {"b", "g", "g_prime", "g_second", "t_start", "t_end", "monomials"}) {
            if (lookup("problem", k)) {
                fail_line(lookup("problem", k)->line,
                          std::string("key \"") + k + "\" conflicts with a built-in problem");
            }
        }
    } else if (have_problem_section) {
        Entry* eb = lookup("problem", "b");
        Entry* eg = lookup("problem", "g");
        if (!eb || !eg) {
            throw ConfigError("[problem] needs either name = <built-in> or both b and g");
        }
        double t_start = 0.0;
        double t_end = 1.0;
        if (Entry* e = lookup("problem", "t_start")) t_start = parse_number(*e, "t_start");
        if (Entry* e = lookup("problem", "t_end")) t_end = parse_number(*e, "t_end");
        std::vector<Monomial> monomials;
        if (Entry* e = lookup("problem", "monomials")) monomials = parse_monomials(*e);
        std::string g1 = lookup("problem", "g_prime") ? lookup("problem", "g_prime")->value : "";
        std::string g2 = lookup("problem", "g_second") ? lookup("problem", "g_second")->value : "";
        cfg.problem = make_expression_problem(eb->value, eg->value, g1, g2, t_start, t_end,
                                              monomials);
        if (Entry* elo = lookup("problem", "working_lo")) {
            Entry* ehi = lookup("problem", "working_hi");
            if (!ehi) throw ConfigError("[problem] working_lo needs working_hi");
            cfg.problem.working_interval = {{parse_number(*elo, "working_lo"),
                                             parse_number(*ehi, "working_hi")}};
        }
    } else {
        throw ConfigError("config needs a [problem] section");
    }
    cfg.eval_t = cfg.problem.default_eval_t;
    cfg.eval_x = cfg.problem.default_eval_x;
    if (Entry* e = lookup("problem", "eval_t")) cfg.eval_t = parse_number(*e, "eval_t");
    if (Entry* e = lookup("problem", "eval_x")) cfg.eval_x = parse_number(*e, "eval_x");
    if (!(cfg.eval_t >= cfg.problem.t_start && cfg.eval_t < cfg.problem.t_end)) {
        throw ConfigError("[problem] eval_t must lie in [t_start, t_end)");
    }
    cfg.problem.default_eval_t = cfg.eval_t;
    cfg.problem.default_eval_x = cfg.eval_x;

    // [lifetimes]
    if (Entry* e = lookup("lifetimes", "kappa")) cfg.lifetimes.kappa = parse_number(*e, "kappa");
    if (Entry* e = lookup("lifetimes", "eta")) cfg.lifetimes.eta = parse_number(*e, "eta");
    validate_lifetimes(cfg.lifetimes, cfg.mc.unsafe_variance);

    // [sigma]: defaults follow the problem's baked-in schedule when present.
    cfg.schedule.sigma0 = cfg.problem.name == "custom" ? 1.0 : cfg.problem.schedule_sigma0;
    if (Entry* e = lookup("sigma", "sigma0")) cfg.schedule.sigma0 = parse_number(*e, "sigma0");
    if (Entry* e = lookup("sigma", "n")) cfg.schedule.n = parse_number(*e, "n");
    validate_schedule(cfg.schedule, cfg.mc.unsafe_variance);

    // [estimator]
    cfg.perturb_sigma0 = cfg.problem.baseline_sigma0;
    if (Entry* e = lookup("estimator", "method")) {
        static const std::vector<std::string> methods = {"unbiased", "perturbed", "branching",
                                                         "unbiased-nonlinear"};
        if (std::find(methods.begin(), methods.end(), e->value) == methods.end()) {
            fail_line(e->line, "unknown method \"" + e->value +
                                   "\" (unbiased|perturbed|branching|unbiased-nonlinear)");
        }
        cfg.mc.estimator = e->value;
    }
    if (Entry* e = lookup("estimator", "perturb_sigma0")) {
        cfg.perturb_sigma0 = parse_number(*e, "perturb_sigma0");
        if (!(cfg.perturb_sigma0 >= 0.0)) fail_line(e->line, "perturb_sigma0 must be >= 0");
    }
    if (Entry* e = lookup("estimator", "half_v_variant")) {
        cfg.options.v_scale = parse_bool(*e, "half_v_variant") ? 0.5 : 1.0;
    }
    if (Entry* e = lookup("estimator", "depth_cap")) {
        cfg.options.depth_cap = static_cast<int>(parse_u64(*e, "depth_cap"));
        if (cfg.options.depth_cap < 1) fail_line(e->line, "depth_cap must be >= 1");
    }
    cfg.options.unsafe_variance = cfg.mc.unsafe_variance;
    if (Entry* e = lookup("estimator", "event_probs")) {
        const auto parts = split(e->value, ',');
        if (parts.size() != cfg.problem.nonlinearity.size() + 1) {
            std::ostringstream os;
            os << "event_probs needs " << cfg.problem.nonlinearity.size() + 1
               << " entries (correction first, then one per monomial)";
            fail_line(e->line, os.str());
        }
        EventDistribution ev;
        try {
            ev.q_correction = std::stod(parts[0]);
            for (std::size_t i = 1; i < parts.size(); ++i) {
                ev.q_monomials.push_back(std::stod(parts[i]));
            }
        } catch (const std::exception&) {
            fail_line(e->line, "bad event_probs entry");
        }
        double total = ev.q_correction;
        for (double q : ev.q_monomials) total += q;
        if (std::fabs(total - 1.0) > 1e-12) fail_line(e->line, "event_probs must sum to 1");
        cfg.events = ev;
        cfg.has_events = true;
    }

    if (cfg.mc.sample_levels.empty()) cfg.mc.sample_levels = {cfg.mc.n_samples};
    return cfg;
}

SampleFn make_sampler(const ParsedConfig& config, const std::string& method) {
    // the closure owns a full copy of the configuration
    const ParsedConfig cfg = config;
    const double t = cfg.eval_t;
    const double x = cfg.eval_x;
    if (method == "unbiased") {
        return [cfg, t, x](RngStream& rng) {
            return sample_unbiased_transport(cfg.problem, t, x, cfg.schedule, cfg.lifetimes,
                                             cfg.options, rng);
        };
    }
    if (method == "perturbed") {
        const double s0 = cfg.perturb_sigma0;
        return [cfg, t, x, s0](RngStream& rng) {
            return sample_perturbed_linear(cfg.problem, t, x, s0, rng);
        };
    }
    if (method == "branching") {
        const double s0 = cfg.perturb_sigma0;
        const EventDistribution ev = cfg.effective_events(false);
        return [cfg, t, x, s0, ev](RngStream& rng) {
            return sample_branching_semilinear(cfg.problem, t, x, s0, ev, cfg.lifetimes,
                                               cfg.options, rng);
        };
    }
    if (method == "unbiased-nonlinear") {
        const EventDistribution ev = cfg.effective_events(true);
        return [cfg, t, x, ev](RngStream& rng) {
            return sample_unbiased_nonlinear(cfg.problem, t, x, ev, cfg.schedule,
                                             cfg.lifetimes, cfg.options, rng);
        };
    }
    if (method == "derivative1" || method == "derivative2") {
        const int order = method == "derivative1" ? 1 : 2;
        return [cfg, t, x, order](RngStream& rng) {
            return sample_derivative_estimate(cfg.problem, t, x, order, cfg.schedule,
                                              cfg.lifetimes, cfg.options, rng);
        };
    }
    throw ConfigError("unknown estimator method \"" + method + "\"");
}

void attach_references(const ParsedConfig& cfg, StudyReport& report) {
    const ProblemSpec& p = cfg.problem;
    if (p.has_analytic) {
        report.true_value = p.analytic(cfg.eval_t, cfg.eval_x);
        report.has_true_value = true;
    } else if (p.is_linear()) {
        report.true_value = characteristics_solution(p, cfg.eval_t, cfg.eval_x);
        report.has_true_value = true;
    }
    if (p.is_linear() && p.cosine_terminal) {
        report.biased_reference =
            perturbed_closed_form(p, cfg.perturb_sigma0, cfg.eval_t, cfg.eval_x);
        report.has_biased_reference = true;
    }
}

ParsedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file \"" + path + "\"");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

std::string emit_config(const ParsedConfig& cfg) {
    std::ostringstream os;
    os << "[problem]\n";
    if (cfg.problem.name != "custom") {
        os << "name = " << cfg.problem.name << "\n";
    } else {
        os << "b = " << cfg.problem.drift_expr << "\n";
        os << "g = " << cfg.problem.terminal_expr << "\n";
        os << "t_start = " << format_double(cfg.problem.t_start) << "\n";
        os << "t_end = " << format_double(cfg.problem.t_end) << "\n";
        if (!cfg.problem.nonlinearity.empty()) {
            os << "monomials = ";
            for (std::size_t i = 0; i < cfg.problem.nonlinearity.size(); ++i) {
                const Monomial& m = cfg.problem.nonlinearity[i];
                if (i) os << ";";
                os << format_double(m.coeff) << ":" << m.v_power << ":" << m.dv_power;
            }
            os << "\n";
        }
        if (cfg.problem.working_interval) {
            os << "working_lo = " << format_double(cfg.problem.working_interval->first) << "\n";
            os << "working_hi = " << format_double(cfg.problem.working_interval->second) << "\n";
        }
    }
    os << "eval_t = " << format_double(cfg.eval_t) << "\n";
    os << "eval_x = " << format_double(cfg.eval_x) << "\n";
    os << "\n[estimator]\n";
    os << "method = " << cfg.mc.estimator << "\n";
    os << "perturb_sigma0 = " << format_double(cfg.perturb_sigma0) << "\n";
    os << "half_v_variant = " << (cfg.options.v_scale == 0.5 ? "true" : "false") << "\n";
    os << "depth_cap = " << cfg.options.depth_cap << "\n";
    if (cfg.has_events) {
        os << "event_probs = " << format_double(cfg.events.q_correction);
        for (double q : cfg.events.q_monomials) os << "," << format_double(q);
        os << "\n";
    }
    os << "\n[lifetimes]\n";
    os << "kappa = " << format_double(cfg.lifetimes.kappa) << "\n";
    os << "eta = " << format_double(cfg.lifetimes.eta) << "\n";
    os << "\n[sigma]\n";
    os << "sigma0 = " << format_double(cfg.schedule.sigma0) << "\n";
    os << "n = " << format_double(cfg.schedule.n) << "\n";
    os << "\n[mc]\n";
    os << "n_samples = " << cfg.mc.n_samples << "\n";
    os << "levels = ";
    for (std::size_t i = 0; i < cfg.mc.sample_levels.size(); ++i) {
        if (i) os << ",";
        os << cfg.mc.sample_levels[i];
    }
    os << "\n";
    os << "repeats = " << cfg.mc.n_repeats << "\n";
    os << "master_seed = " << cfg.mc.master_seed << "\n";
    os << "confidence_level = " << format_double(cfg.mc.confidence_level) << "\n";
    os << "threads = " << cfg.mc.threads << "\n";
    os << "unsafe_variance = " << (cfg.mc.unsafe_variance ? "true" : "false") << "\n";
    return os.str();
}

}  // namespace rsmc
