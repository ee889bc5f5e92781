#include "sbzeno/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace sbzeno {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::string fmt(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

std::string fmt(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) throw ConfigError("expected a number, got '" + s + "'");
    return v;
}

std::size_t parse_size(const std::string& s) {
    unsigned long long v = 0;
    const char* end = s.data() + s.size();
    auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) throw ConfigError("expected a non-negative integer, got '" + s + "'");
    return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError("expected true or false, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty entry in list '" + s + "'");
        out.push_back(item);
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> v;
    for (const auto& x : split_list(s)) v.push_back(parse_double(x));
    return v;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> v;
    for (const auto& x : split_list(s)) v.push_back(parse_size(x));
    return v;
}

struct Entry {
    std::string name; // section.key
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
};

template <class T>
Entry num(const std::string& name, T& field) {
    if constexpr (std::is_same_v<T, double>)
        return {name, [&field] { return fmt(field); }, [&field](const std::string& v) { field = parse_double(v); }};
    else if constexpr (std::is_same_v<T, bool>)
        return {name, [&field] { return fmt(field); }, [&field](const std::string& v) { field = parse_bool(v); }};
    else
        return {name, [&field] { return fmt(field); }, [&field](const std::string& v) { field = parse_size(v); }};
}

std::vector<Entry> registry(RunConfig& c) {
    std::vector<Entry> e;
    e.push_back(num("model.s", c.sd.s));
    e.push_back(num("model.alpha", c.sd.alpha));
    e.push_back(num("model.omega_c", c.sd.omega_c));
    e.push_back(num("model.delta", c.delta));
    e.push_back(num("bath.modes", c.modes));

    e.push_back(num("chain.length", c.chain_length));
    e.push_back(num("chain.horizon", c.chain_horizon));
    e.push_back(num("chain.min_length", c.min_chain_length));
    e.push_back(num("chain.displacement_tol", c.displacement_tol));
    e.push_back(num("chain.max_length", c.max_chain_length));
    e.push_back(num("chain.double", c.chain_double));

    e.push_back(num("mps.bond_dim", c.mps.bond_dim));
    e.push_back(num("mps.local_dim", c.mps.local_dim));
    e.push_back(num("mps.obb_dim", c.mps.obb_dim));
    e.push_back({"mps.obb_override", [&c] { return fmt(c.mps.obb_override); },
                 [&c](const std::string& v) { c.mps.obb_override = parse_sizes(v); }});
    e.push_back(num("mps.max_local_dim", c.mps.max_local_dim));
    e.push_back(num("mps.svd_cutoff", c.mps.svd_cutoff));
    e.push_back(num("mps.truncation_target", c.mps.truncation_target));

    e.push_back(num("tdvp.dt", c.tdvp.dt));
    e.push_back({"tdvp.krylov_dim", [&c] { return std::to_string(c.tdvp.krylov_dim); },
                 [&c](const std::string& v) { c.tdvp.krylov_dim = static_cast<int>(parse_size(v)); }});
    e.push_back(num("tdvp.krylov_tol", c.tdvp.krylov_tol));
    e.push_back(num("tdvp.symmetric", c.tdvp.symmetric));

    e.push_back({"state.initial", [&c] { return to_string(c.initial); },
                 [&c](const std::string& v) {
                     try {
                         c.initial = initial_kind_from_string(v);
                     } catch (const DomainError& err) {
                         throw ConfigError(err.what());
                     }
                 }});

    e.push_back(num("evolve.time", c.evolve_time));
    e.push_back(num("evolve.record_every", c.record_every));
    e.push_back(num("evolve.occupations", c.occupations));
    e.push_back(num("evolve.star_occupations", c.star_occupations));
    e.push_back({"evolve.checkpoint", [&c] { return c.checkpoint; },
                 [&c](const std::string& v) { c.checkpoint = v; }});

    e.push_back({"protocol.scheme", [&c] { return to_string(c.scheme); },
                 [&c](const std::string& v) {
                     try {
                         c.scheme = scheme_from_string(v);
                     } catch (const DomainError& err) {
                         throw ConfigError(err.what());
                     }
                 }});
    e.push_back(num("protocol.tau", c.tau));
    e.push_back({"protocol.tau_grid", [&c] { return fmt(c.tau_grid); },
                 [&c](const std::string& v) { c.tau_grid = parse_doubles(v); }});
    e.push_back({"protocol.delta_tau_grid", [&c] { return fmt(c.delta_tau_grid); },
                 [&c](const std::string& v) { c.delta_tau_grid = parse_doubles(v); }});
    e.push_back(num("protocol.measurements", c.measurements));
    e.push_back(num("protocol.horizon_cap", c.horizon_cap));
    e.push_back(num("protocol.rel_band", c.rel_band));
    e.push_back(num("protocol.traces", c.traces));
    e.push_back(num("protocol.trace_every", c.trace_every));

    e.push_back(num("verify.chain_length", c.verify_chain_length));
    e.push_back(num("verify.fock", c.verify_dense.fock));
    e.push_back(num("verify.photon_cap", c.verify_dense.photon_cap));
    e.push_back(num("verify.max_dim", c.verify_dense.max_dim));
    e.push_back(num("verify.bond_dim", c.verify_bond_dim));
    e.push_back(num("verify.time", c.verify_time));
    e.push_back(num("verify.tol", c.verify_tol));

    e.push_back({"output.dir", [&c] { return c.out_dir; }, [&c](const std::string& v) { c.out_dir = v; }});
    e.push_back(num("output.deterministic", c.deterministic));
    e.push_back(num("run.threads", c.threads));
    return e;
}

void set_key(RunConfig& cfg, const std::string& name, const std::string& value) {
    for (auto& e : registry(cfg)) {
        if (e.name != name) continue;
        try {
            e.set(value);
        } catch (const ConfigError& err) {
            throw ConfigError(name + ": " + err.what());
        }
        return;
    }
    throw ConfigError("unknown config key '" + name + "'");
}

} // namespace

void RunConfig::validate() const {
    try {
        sd.validate();
        mps.validate();
        tdvp.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (!(delta > 0.0)) throw ConfigError("model.delta must be positive");
    if (modes < 2) throw ConfigError("bath.modes must be >= 2");
    if (chain_length >= modes) throw ConfigError("chain.length must be smaller than bath.modes");
    if (!(chain_horizon >= 0.0)) throw ConfigError("chain.horizon must be >= 0");
    if (min_chain_length < 1) throw ConfigError("chain.min_length must be >= 1");
    if (!(displacement_tol > 0.0)) throw ConfigError("chain.displacement_tol must be positive");
    if (max_chain_length < min_chain_length) throw ConfigError("chain.max_length must be >= chain.min_length");
    if (max_chain_length >= modes) throw ConfigError("chain.max_length must be smaller than bath.modes");
    if (!(evolve_time > 0.0)) throw ConfigError("evolve.time must be positive");
    if (record_every < 1) throw ConfigError("evolve.record_every must be >= 1");
    if (!(tau >= 0.0)) throw ConfigError("protocol.tau must be >= 0");
    for (double t : tau_grid)
        if (!(t > 0.0)) throw ConfigError("protocol.tau_grid entries must be positive");
    for (double t : delta_tau_grid)
        if (!(t > 0.0)) throw ConfigError("protocol.delta_tau_grid entries must be positive");
    if (!tau_grid.empty() && !delta_tau_grid.empty())
        throw ConfigError("set at most one of protocol.tau_grid and protocol.delta_tau_grid");
    if (!(rel_band >= 0.0)) throw ConfigError("protocol.rel_band must be >= 0");
    if (trace_every < 1) throw ConfigError("protocol.trace_every must be >= 1");
    if (verify_chain_length < 1) throw ConfigError("verify.chain_length must be >= 1");
    if (verify_dense.fock < 2) throw ConfigError("verify.fock must be >= 2");
    if (verify_bond_dim < 1) throw ConfigError("verify.bond_dim must be >= 1");
    if (!(verify_time > 0.0)) throw ConfigError("verify.time must be positive");
    if (!(verify_tol > 0.0)) throw ConfigError("verify.tol must be positive");
    if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
    if (threads < 1) throw ConfigError("run.threads must be >= 1");
    if (checkpoint.find('/') != std::string::npos) throw ConfigError("evolve.checkpoint is a file name, not a path");
}

std::vector<double> RunConfig::tau_values() const {
    std::vector<double> t = tau_grid;
    for (double x : delta_tau_grid) t.push_back(x / delta);
    if (t.empty() && tau > 0.0) t.push_back(tau);
    if (t.empty()) throw ConfigError("zeno needs protocol.tau, protocol.tau_grid or protocol.delta_tau_grid");
    std::sort(t.begin(), t.end());
    if (std::adjacent_find(t.begin(), t.end()) != t.end()) throw ConfigError("duplicate tau values");
    return t;
}

SweepSetup RunConfig::sweep_setup() const {
    SweepSetup s;
    s.sd = sd;
    s.modes = modes;
    s.delta = delta;
    s.initial = initial;
    s.mps = mps;
    s.tdvp = tdvp;
    s.chain_length = chain_length;
    s.min_chain_length = min_chain_length;
    s.displacement_tol = displacement_tol;
    s.max_chain_length = max_chain_length;
    s.chain_double = chain_double;
    s.horizon_cap = horizon_cap;
    s.measurements = measurements;
    s.rel_band = rel_band;
    s.threads = threads;
    s.keep_traces = traces;
    s.trace_every = trace_every;
    if (chain_length == 0 && chain_horizon > 0.0) {
        s.chain_length = sweep_chain_length(s, chain_horizon);
        s.chain_double = false; // already applied
    }
    return s;
}

std::size_t RunConfig::resolved_chain_length(double horizon) const {
    return sweep_chain_length(sweep_setup(), horizon);
}

RunConfig parse_config(const std::string& text, const RunConfig& base, const std::string& origin) {
    RunConfig cfg = base;
    std::stringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where + "missing key");
        if (section.empty()) throw ConfigError(where + "key '" + key + "' outside any section");
        try {
            set_key(cfg, section + "." + key, trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), base, path);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (key.find('.') == std::string::npos) throw ConfigError("override key '" + key + "' needs a section prefix");
    set_key(cfg, key, trim(assignment.substr(eq + 1)));
}

std::string config_value(const RunConfig& cfg, const std::string& dotted_key) {
    RunConfig copy = cfg;
    for (auto& e : registry(copy))
        if (e.name == dotted_key) return e.get();
    throw ConfigError("unknown config key '" + dotted_key + "'");
}

std::vector<std::string> config_keys() {
    RunConfig dummy;
    std::vector<std::string> k;
    for (auto& e : registry(dummy)) k.push_back(e.name);
    return k;
}

std::string to_text(const RunConfig& cfg) {
    RunConfig copy = cfg;
    std::string out, section;
    for (auto& e : registry(copy)) {
        const auto dot = e.name.find('.');
        const std::string sec = e.name.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) out += "\n";
            out += "[" + sec + "]\n";
            section = sec;
        }
        out += e.name.substr(dot + 1) + " = " + e.get() + "\n";
    }
    return out;
}

void write_config_header(std::ostream& os, const RunConfig& cfg) {
    std::stringstream ss(to_text(cfg));
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty()) os << "# " << line << "\n";
}

} // namespace sbzeno
