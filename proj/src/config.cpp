#include "zdam/config.hpp"

#include "zdam/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace zdam {

std::string to_string(Method m) {
    switch (m) {
        case Method::DA: return "da";
        case Method::Greedy: return "greedy";
        case Method::Ncr: return "ncr";
    }
    return "da";
}

Method parse_method(const std::string& s) {
    if (s == "da") return Method::DA;
    if (s == "greedy") return Method::Greedy;
    if (s == "ncr") return Method::Ncr;
    throw ConfigError("unknown method '" + s + "' (expected da, greedy or ncr)");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    if (used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError(key + ": integer out of range: '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(key, item));
    }
    return out;
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

struct Binding {
    std::function<void(const std::string& key, const std::string& value)> set;
    std::function<std::string()> get;
};

using Table = std::vector<std::pair<std::string, Binding>>;

Binding real(double& r) {
    return {[&r](const std::string& k, const std::string& v) { r = to_double(k, v); },
            [&r] { return fmt(r); }};
}
Binding count(std::size_t& r) {
    return {[&r](const std::string& k, const std::string& v) {
                r = static_cast<std::size_t>(to_u64(k, v));
            },
            [&r] { return std::to_string(r); }};
}
Binding u64(std::uint64_t& r) {
    return {[&r](const std::string& k, const std::string& v) { r = to_u64(k, v); },
            [&r] { return std::to_string(r); }};
}
Binding flag(bool& r) {
    return {[&r](const std::string& k, const std::string& v) { r = to_bool(k, v); },
            [&r] { return std::string(r ? "true" : "false"); }};
}
Binding text(std::string& r) {
    return {[&r](const std::string&, const std::string& v) { r = v; }, [&r] { return r; }};
}
Binding list(std::vector<double>& r) {
    return {[&r](const std::string& k, const std::string& v) { r = to_list(k, v); },
            [&r] { return fmt_list(r); }};
}

Table bindings(ExperimentConfig& c) {
    Table t;
    auto add = [&t](const char* key, Binding b) { t.emplace_back(key, std::move(b)); };
    add("source.rho", real(c.source.rho));
    add("source.var1", real(c.source.var1));
    add("source.var2", real(c.source.var2));
    add("source.n_x", count(c.n_x));
    add("source.span", real(c.x_span));

    add("noise.var", real(c.noise_var));
    add("noise.n_n", count(c.n_n));
    add("noise.span", real(c.noise_span));

    add("grid.n_y", count(c.n_y));
    add("grid.margin", real(c.margin));

    add("weights.mode",
        {[&c](const std::string& k, const std::string& v) {
             if (v == "individual") c.weights_mode = WeightsMode::Individual;
             else if (v == "total") c.weights_mode = WeightsMode::Total;
             else if (v == "target") c.weights_mode = WeightsMode::Target;
             else throw ConfigError(k + ": expected individual, total or target, got '" + v + "'");
         },
         [&c] {
             switch (c.weights_mode) {
                 case WeightsMode::Individual: return std::string("individual");
                 case WeightsMode::Total: return std::string("total");
                 case WeightsMode::Target: return std::string("target");
             }
             return std::string("total");
         }});
    add("weights.lambda", real(c.lambda));
    add("weights.lambda1", real(c.lambda1));
    add("weights.lambda2", real(c.lambda2));
    add("weights.target_total", real(c.target_total));
    add("weights.target_p1", real(c.target_p1));
    add("weights.target_p2", real(c.target_p2));
    add("weights.bisect_lo", real(c.bisect_lo));
    add("weights.bisect_hi", real(c.bisect_hi));
    add("weights.bisect_iters", count(c.bisect_iters));
    add("weights.bisect_tol", real(c.bisect_tol));

    add("method.name",
        {[&c](const std::string&, const std::string& v) { c.method = parse_method(v); },
         [&c] { return to_string(c.method); }});

    AnnealConfig& a = c.anneal;
    add("anneal.T_init", real(a.T_init));
    add("anneal.T_min", real(a.T_min));
    add("anneal.t_init_scale", real(a.t_init_scale));
    add("anneal.t_min_ratio", real(a.t_min_ratio));
    add("anneal.alpha", real(a.alpha));
    add("anneal.perturb_eps", real(a.perturb_eps));
    add("anneal.inner_tol", real(a.inner_tol));
    add("anneal.inner_max_iters", count(a.inner_max_iters));
    add("anneal.gd_step_init", real(a.gd_step_init));
    add("anneal.gd_backtrack_factor", real(a.gd_backtrack_factor));
    add("anneal.gd_max_iters", count(a.gd_max_iters));
    add("anneal.K1", count(a.K1));
    add("anneal.K2", count(a.K2));
    add("anneal.p_target1", real(a.p_target1));
    add("anneal.p_target2", real(a.p_target2));
    add("anneal.merge_tol", real(a.merge_tol));
    add("anneal.active_mass", real(a.active_mass));
    add("anneal.zero_temperature", flag(a.zero_temperature));
    add("anneal.zero_max_sweeps", count(a.zero_max_sweeps));
    add("anneal.zero_tol", real(a.zero_tol));

    GreedyOptions& g = c.greedy;
    add("greedy.tol", real(g.tol));
    add("greedy.max_sweeps", count(g.max_sweeps));
    add("greedy.candidates", count(g.candidates));
    add("greedy.candidate_span", real(g.candidate_span));
    add("greedy.golden_iters", count(g.golden_iters));
    add("greedy.init", text(c.greedy_init));

    add("ncr.sigma2_start", real(c.ncr.sigma2_start));
    add("ncr.alpha", real(c.ncr.ncr_alpha));
    add("ncr.stages", count(c.ncr.stages));

    add("mc.samples", count(c.mc_samples));

    add("run.seed", u64(c.seed));
    add("run.out", text(c.out));

    add("sweep.lambdas", list(c.sweep_lambdas));
    add("sweep.power_targets", list(c.sweep_targets));
    return t;
}

void assign(Table& t, const std::string& key, const std::string& value) {
    const auto it = std::find_if(t.begin(), t.end(), [&](const auto& e) { return e.first == key; });
    if (it == t.end()) throw ConfigError("unknown configuration key '" + key + "'");
    it->second.set(key, trim(value));
}

ExperimentConfig parse_tree(const boost::property_tree::ptree& tree,
                            const std::vector<std::string>& overrides) {
    ExperimentConfig c;
    Table t = bindings(c);
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("configuration key '" + section + "' is outside any [section]");
        }
        for (const auto& [key, value] : body) assign(t, section + "." + key, value.data());
    }
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("override '" + o + "' must look like section.key=value");
        }
        assign(t, trim(o.substr(0, eq)), o.substr(eq + 1));
    }
    // Derived anneal fields follow the shared grid settings.
    c.anneal.n_y = c.n_y;
    c.anneal.margin = c.margin;
    c.anneal.rng_seed = c.seed;
    c.greedy.n_y = c.n_y;
    c.greedy.margin = c.margin;
    c.validate();
    return c;
}

}  // namespace

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(std::abs(source.rho) < 1.0, "source.rho must satisfy |rho| < 1");
    require(source.var1 > 0.0 && source.var2 > 0.0, "source variances must be > 0");
    require(n_x >= 8, "source.n_x must be >= 8");
    require(x_span > 0.0, "source.span must be > 0");
    require(noise_var > 0.0, "noise.var must be > 0");
    require(n_n >= 5, "noise.n_n must be >= 5");
    require(noise_span > 0.0, "noise.span must be > 0");
    require(n_y >= 16, "grid.n_y must be >= 16");
    require(margin >= 0.0, "grid.margin must be >= 0");
    switch (weights_mode) {
        case WeightsMode::Total: require(lambda >= 0.0, "weights.lambda must be >= 0"); break;
        case WeightsMode::Individual:
            require(lambda1 >= 0.0 && lambda2 >= 0.0, "weights.lambda1/lambda2 must be >= 0");
            break;
        case WeightsMode::Target:
            require(target_total > 0.0 || (target_p1 > 0.0 && target_p2 > 0.0),
                    "weights.mode=target needs target_total or both target_p1 and target_p2");
            require(bisect_lo > 0.0 && bisect_hi > bisect_lo,
                    "weights.bisect_lo/bisect_hi must satisfy 0 < lo < hi");
            require(bisect_iters >= 1, "weights.bisect_iters must be >= 1");
            require(bisect_tol > 0.0, "weights.bisect_tol must be > 0");
            break;
    }
    require(greedy_init == "linear" || greedy_init == "random",
            "greedy.init must be linear or random");
    require(greedy.tol > 0.0 && greedy.max_sweeps >= 1, "greedy.tol and greedy.max_sweeps must be positive");
    require(greedy.candidates >= 2, "greedy.candidates must be >= 2");
    require(mc_samples >= 10000, "mc.samples must be >= 10000");
    if (method == Method::DA) anneal.validate();
    if (method == Method::Ncr) {
        require(ncr.stages >= 1, "ncr.stages must be >= 1");
        require(ncr.ncr_alpha > 0.0 && ncr.ncr_alpha < 1.0, "ncr.alpha must be in (0, 1)");
        require(ncr.sigma2_start >= noise_var, "ncr.sigma2_start must be >= noise.var");
    }
    for (double l : sweep_lambdas) require(l >= 0.0, "sweep.lambdas must be >= 0");
    for (double p : sweep_targets) require(p > 0.0, "sweep.power_targets must be > 0");
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("configuration parse error at line " + std::to_string(e.line()) + ": " +
                          e.message());
    }
    return parse_tree(tree, overrides);
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    if (path.empty()) return parse_tree({}, overrides);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

std::string render_config(const ExperimentConfig& config) {
    ExperimentConfig copy = config;
    const Table t = bindings(copy);
    std::ostringstream os;
    std::string section;
    for (const auto& [key, b] : t) {
        const auto dot = key.find('.');
        const std::string s = key.substr(0, dot);
        if (s != section) {
            if (!section.empty()) os << "\n";
            os << "[" << s << "]\n";
            section = s;
        }
        os << key.substr(dot + 1) << " = " << b.get() << "\n";
    }
    return os.str();
}

}  // namespace zdam
