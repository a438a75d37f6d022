#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fisherkin/budget.hpp"
#include "fisherkin/density.hpp"
#include "fisherkin/harness.hpp"
#include "fisherkin/io.hpp"
#include "fisherkin/numeric.hpp"
#include "fisherkin/spectral.hpp"

namespace fk = fisherkin;
using nlohmann::ordered_json;

namespace {

struct RunConfig {
    int d = 1;
    int particles = 1;
    int m = 64;
    double period = 16.0;

    double s = 1.0;
    std::string method = "spectral";
    std::optional<double> gamma;
    std::string exponent_offset = "2s";

    std::uint64_t seed = 1;
    int trials = -1;
    int n_max = 6;

    std::string in;
    std::string out = "reports";
    std::string config_path;
    std::uint64_t mem_cap_bytes = std::uint64_t{2} * 1024 * 1024 * 1024;
    std::string suites;

    std::string builder;
    std::vector<double> mean;
    double sigma2 = 1.0;
    std::string atoms;
    double smoothness = 1.0;
    std::string save_density;

    std::string scan_type = "bbm";
    std::string cache_file = "fisherkin_calibration.json";
    std::string functional = "fisher";
};

fk::Method parse_method(const std::string& name) {
    if (name == "spectral") return fk::Method::spectral;
    if (name == "gradient") return fk::Method::gradient;
    if (name == "singular") return fk::Method::singular;
    throw fk::config_error("unknown method '" + name + "' (spectral|gradient|singular)");
}

fk::ExponentOffset parse_offset(const std::string& name) {
    if (name == "2s") return fk::ExponentOffset::two_s;
    if (name == "s") return fk::ExponentOffset::s;
    throw fk::config_error("unknown exponent offset '" + name + "' (s|2s)");
}

fk::GridSpec make_grid(const RunConfig& cfg, int particles) {
    fk::GridSpec g{cfg.d, particles, cfg.m, cfg.period};
    g.validate();
    return g;
}

std::vector<double> default_mean(const RunConfig& cfg) {
    if (!cfg.mean.empty()) {
        if (cfg.mean.size() != static_cast<std::size_t>(cfg.d)) {
            throw fk::config_error("--mean needs d components");
        }
        return cfg.mean;
    }
    return std::vector<double>(cfg.d, cfg.period / 2.0);
}

// Atom syntax: "w:mean:sigma2[,w:mean:sigma2...]", mean components split by ';'.
fk::MixingMeasure parse_atoms(const RunConfig& cfg) {
    if (cfg.atoms.empty()) throw fk::config_error("mixture builder needs --atoms");
    const fk::GridSpec g1 = make_grid(cfg, 1);
    fk::MixingMeasure P;
    std::stringstream list(cfg.atoms);
    std::string atom;
    while (std::getline(list, atom, ',')) {
        std::stringstream fields(atom);
        std::string w_str, mean_str, s2_str;
        if (!std::getline(fields, w_str, ':') || !std::getline(fields, mean_str, ':') ||
            !std::getline(fields, s2_str, ':')) {
            throw fk::config_error("atom '" + atom + "' is not w:mean:sigma2");
        }
        std::vector<double> mean;
        std::stringstream comps(mean_str);
        std::string comp;
        while (std::getline(comps, comp, ';')) mean.push_back(std::stod(comp));
        if (mean.size() != static_cast<std::size_t>(cfg.d)) {
            throw fk::config_error("atom mean '" + mean_str + "' needs d components");
        }
        P.atoms.push_back({std::stod(w_str), fk::gaussian_density(g1, mean, std::stod(s2_str))});
    }
    P.validate();
    return P;
}

fk::Density build_density(const RunConfig& cfg) {
    if (!cfg.in.empty()) return fk::load_density(cfg.in);
    if (cfg.builder.empty()) {
        throw fk::config_error("no input density: pass --in or --builder");
    }
    if (cfg.builder == "uniform") {
        return fk::uniform_density(make_grid(cfg, cfg.particles));
    }
    if (cfg.builder == "gaussian") {
        const fk::Density rho = fk::gaussian_density(make_grid(cfg, 1), default_mean(cfg), cfg.sigma2);
        return cfg.particles == 1 ? rho : fk::product_density(rho, cfg.particles);
    }
    if (cfg.builder == "product") {
        const fk::Density rho = fk::gaussian_density(make_grid(cfg, 1), default_mean(cfg), cfg.sigma2);
        return fk::product_density(rho, cfg.particles);
    }
    if (cfg.builder == "mixture") {
        return fk::mixture_product_density(parse_atoms(cfg), cfg.particles);
    }
    if (cfg.builder == "random") {
        return fk::random_density(make_grid(cfg, cfg.particles), cfg.seed, cfg.smoothness);
    }
    throw fk::config_error("unknown builder '" + cfg.builder +
                           "' (gaussian|uniform|product|mixture|random)");
}

ordered_json grid_json(const fk::GridSpec& g) {
    ordered_json j;
    j["d"] = g.dim;
    j["n_particles"] = g.n_particles;
    j["m"] = g.m;
    j["period"] = g.period;
    return j;
}

int cmd_compute(const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const fk::Density mu = build_density(cfg);
    if (!cfg.save_density.empty()) fk::save_density(mu, cfg.save_density);

    ordered_json out;
    out["command"] = "compute";
    if (cfg.functional == "salem") {
        const double value =
            fk::salem_variant_info(mu, cfg.s, parse_offset(cfg.exponent_offset));
        out["value"] = value;
        out["s"] = cfg.s;
        out["method"] = "salem";
        out["exponent_offset"] = cfg.exponent_offset;
        out["grid"] = grid_json(mu.grid());
    } else if (cfg.functional != "fisher") {
        throw fk::config_error("unknown functional '" + cfg.functional + "' (fisher|salem)");
    } else if (cfg.gamma) {
        // Cutoff variant; center defaults to the box midpoint.
        const double value =
            fk::cutoff_fisher_info(mu, cfg.s, *cfg.gamma, default_mean(cfg));
        out["value"] = value;
        out["s"] = cfg.s;
        out["method"] = "spectral-cutoff";
        out["gamma"] = *cfg.gamma;
        out["grid"] = grid_json(mu.grid());
    } else {
        fk::KineticSpec spec;
        spec.s = cfg.s;
        spec.method = parse_method(cfg.method);
        spec.exponent_offset = parse_offset(cfg.exponent_offset);
        const fk::FisherResult r = fk::fisher_info(mu, spec);
        out["value"] = r.value;
        out["s"] = r.s;
        out["method"] = cfg.method;
        out["grid"] = grid_json(r.grid);
        out["per_axis"] = r.per_particle;
    }
    const auto end = std::chrono::steady_clock::now();
    out["wall_time_seconds"] = std::chrono::duration<double>(end - start).count();
    std::cout << out.dump(2) << '\n';
    return 0;
}

std::vector<std::string> selected_suites(const RunConfig& cfg) {
    if (cfg.suites.empty()) return fk::suite_names();
    std::vector<std::string> picked;
    std::stringstream list(cfg.suites);
    std::string name;
    while (std::getline(list, name, ',')) {
        if (name.empty()) continue;
        bool known = false;
        for (const std::string& k : fk::suite_names()) known = known || k == name;
        if (!known) throw fk::config_error("unknown suite '" + name + "'");
        picked.push_back(name);
    }
    if (picked.empty()) throw fk::config_error("--suites selected nothing");
    return picked;
}

int cmd_verify(const RunConfig& cfg) {
    const fk::SuiteConfig suite_cfg{cfg.seed, cfg.trials, cfg.n_max};
    const std::vector<std::string> names = selected_suites(cfg);
    std::filesystem::create_directories(cfg.out);

    ordered_json summary;
    summary["command"] = "verify";
    summary["master_seed"] = cfg.seed;
    ordered_json suites = ordered_json::array();
    bool all_pass = true;
    for (const std::string& name : names) {
        std::cerr << "running suite " << name << "...\n";
        const fk::SuiteReport rep = fk::run_suite(name, suite_cfg);
        all_pass = all_pass && rep.pass;
        const std::string base = cfg.out + "/" + name;
        std::ofstream jf(base + ".json", std::ios::trunc);
        jf << rep.to_json() << '\n';
        std::ofstream cf(base + ".csv", std::ios::trunc);
        cf << rep.to_csv();
        if (!jf || !cf) throw fk::format_error("cannot write reports under " + cfg.out);
        ordered_json row;
        row["suite"] = rep.suite;
        row["pass"] = rep.pass;
        row["trials"] = rep.trials();
        row["min_gap"] = rep.min_gap;
        row["tolerance"] = rep.tolerance;
        row["runtime_seconds"] = rep.runtime_seconds;
        row["digest"] = rep.digest;
        if (!rep.note.empty()) row["note"] = rep.note;
        suites.push_back(std::move(row));
    }
    summary["suites"] = std::move(suites);
    summary["all_pass"] = all_pass;
    std::ofstream sf(cfg.out + "/summary.json", std::ios::trunc);
    sf << summary.dump(2) << '\n';
    std::cout << summary.dump(2) << '\n';
    return all_pass ? 0 : 1;
}

int cmd_scan(const RunConfig& cfg) {
    if (cfg.scan_type == "bbm") {
        const fk::Density mu = build_density(cfg);
        std::vector<double> s_values;
        for (double s = 0.5; s < 0.96; s += 0.05) s_values.push_back(s);
        s_values.push_back(0.99);
        const fk::BbmTable t = fk::bbm_scan(mu, s_values);
        std::cout << "s,spectral,scaled_singular,i1_spectral\n";
        for (const fk::BbmRow& row : t.rows) {
            std::cout << fk::format_double(row.s) << ',' << fk::format_double(row.spectral)
                      << ',' << fk::format_double(row.scaled_singular) << ','
                      << fk::format_double(t.i1_spectral) << '\n';
        }
        return 0;
    }
    if (cfg.scan_type == "mean-info") {
        fk::MixingMeasure P;
        if (!cfg.atoms.empty()) {
            P = parse_atoms(cfg);
        } else {
            P.atoms.push_back(
                {1.0, fk::gaussian_density(make_grid(cfg, 1), default_mean(cfg), cfg.sigma2)});
        }
        fk::KineticSpec spec;
        spec.s = cfg.s;
        spec.method = parse_method(cfg.method);
        spec.exponent_offset = parse_offset(cfg.exponent_offset);
        const auto rows = fk::mean_info_sequence(P, spec, cfg.n_max);
        fk::KahanSum bound;
        for (const auto& a : P.atoms) bound.add(a.weight * fk::fisher_info(a.rho, spec).value);
        std::cout << "n,g_n,affine_bound\n";
        for (const auto& [n, g_n] : rows) {
            std::cout << n << ',' << fk::format_double(g_n) << ','
                      << fk::format_double(bound.value()) << '\n';
        }
        return 0;
    }
    throw fk::config_error("unknown scan type '" + cfg.scan_type + "' (bbm|mean-info)");
}

int cmd_calibrate(const RunConfig& cfg) {
    const fk::GridSpec g1 = make_grid(cfg, 1);
    if (!(cfg.s > 0.0) || cfg.s >= 1.0) {
        throw fk::config_error("calibration needs 0 < s < 1");
    }
    const fk::ExponentOffset off = parse_offset(cfg.exponent_offset);
    std::ostringstream key;
    key << "d=" << cfg.d << ",m=" << cfg.m << ",L=" << fk::format_double(cfg.period)
        << ",s=" << fk::format_double(cfg.s) << ",offset=" << cfg.exponent_offset;

    nlohmann::json cache = nlohmann::json::object();
    if (std::filesystem::exists(cfg.cache_file)) {
        std::ifstream in(cfg.cache_file);
        try {
            in >> cache;
        } catch (const nlohmann::json::exception&) {
            cache = nlohmann::json::object(); // unreadable cache is rebuilt
        }
    }
    bool cache_hit = cache.contains(key.str());
    const double c = cache_hit ? cache.at(key.str()).get<double>()
                               : fk::calibrate_singular_constant(g1, cfg.s, off);
    if (!cache_hit) {
        cache[key.str()] = c;
        std::ofstream out(cfg.cache_file, std::ios::trunc);
        out << cache.dump(2) << '\n';
    }

    // Held-out sanity: the constant must transfer to a different density.
    const fk::Density held_out = fk::random_density(g1, 42, 0.9);
    fk::KineticSpec spec;
    spec.s = cfg.s;
    const double spectral = fk::fisher_info(held_out, spec).value;
    const double reproduced = c * fk::singular_form(held_out, cfg.s, off);
    ordered_json out;
    out["command"] = "calibrate";
    out["C"] = c;
    out["d"] = cfg.d;
    out["s"] = cfg.s;
    out["exponent_offset"] = cfg.exponent_offset;
    out["grid"] = grid_json(g1);
    out["cache_hit"] = cache_hit;
    out["held_out_relative_deviation"] = std::abs(reproduced - spectral) / spectral;
    std::cout << out.dump(2) << '\n';
    return 0;
}

// Fills options that were not passed on the command line from the JSON
// config file; flags > config file > defaults.
class ConfigFile {
public:
    void load(const std::string& path) {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) throw fk::config_error("cannot open config file " + path);
        try {
            in >> data_;
        } catch (const nlohmann::json::exception& e) {
            throw fk::config_error("malformed config file " + path + ": " + e.what());
        }
        loaded_ = true;
    }

    template <typename T>
    void apply(const CLI::Option* opt, const char* key, T& target) const {
        if (!loaded_ || (opt && opt->count() > 0) || !data_.contains(key)) return;
        try {
            target = data_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw fk::config_error(std::string("config key '") + key + "': " + e.what());
        }
    }

    void apply_gamma(const CLI::Option* opt, std::optional<double>& target) const {
        if (!loaded_ || (opt && opt->count() > 0) || !data_.contains("gamma")) return;
        target = data_.at("gamma").get<double>();
    }

private:
    nlohmann::json data_;
    bool loaded_ = false;
};

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"Fisher informations of symmetric densities on periodic grids"};
    app.require_subcommand(1);

    double gamma_value = 0.0;

    auto add_common = [&](CLI::App* sub) {
        std::map<std::string, CLI::Option*> opts;
        opts["d"] = sub->add_option("--d", cfg.d, "dimension per particle");
        opts["particles"] = sub->add_option("--particles", cfg.particles, "particle count N");
        opts["m"] = sub->add_option("--m", cfg.m, "grid nodes per axis");
        opts["period"] = sub->add_option("--period", cfg.period, "box length L");
        opts["s"] = sub->add_option("--s", cfg.s, "fractional order in (0,1]");
        opts["method"] =
            sub->add_option("--method", cfg.method, "spectral|gradient|singular");
        opts["gamma"] = sub->add_option("--gamma", gamma_value,
                                        "cutoff exponent (<= 0); enables the cutoff variant");
        opts["exponent-offset"] = sub->add_option("--exponent-offset", cfg.exponent_offset,
                                                  "singular kernel exponent offset: s|2s");
        opts["seed"] = sub->add_option("--seed", cfg.seed, "master seed");
        opts["trials"] = sub->add_option("--trials", cfg.trials, "trial count (-1 = default)");
        opts["n-max"] = sub->add_option("--n-max", cfg.n_max, "mean-information depth");
        opts["in"] = sub->add_option("--in", cfg.in, "input density basename (.fkh/.fkd)");
        opts["out"] = sub->add_option("--out", cfg.out, "report output directory");
        opts["config"] = sub->add_option("--config", cfg.config_path, "JSON config file");
        opts["mem-cap-bytes"] =
            sub->add_option("--mem-cap-bytes", cfg.mem_cap_bytes, "memory cap in bytes");
        opts["suites"] = sub->add_option("--suites", cfg.suites, "comma list of suites");
        opts["builder"] = sub->add_option(
            "--builder", cfg.builder, "inline density: gaussian|uniform|product|mixture|random");
        opts["mean"] = sub->add_option("--mean", cfg.mean, "builder mean (d components)");
        opts["sigma2"] = sub->add_option("--sigma2", cfg.sigma2, "builder variance");
        opts["atoms"] = sub->add_option("--atoms", cfg.atoms,
                                        "mixture atoms 'w:mean:sigma2,...' (mean comps ';')");
        opts["smoothness"] =
            sub->add_option("--smoothness", cfg.smoothness, "random builder spectral decay");
        opts["save-density"] =
            sub->add_option("--save-density", cfg.save_density, "write the built density here");
        opts["type"] = sub->add_option("--type", cfg.scan_type, "scan type: bbm|mean-info");
        opts["cache-file"] =
            sub->add_option("--cache-file", cfg.cache_file, "calibration cache path");
        opts["functional"] = sub->add_option("--functional", cfg.functional,
                                             "compute target: fisher|salem");
        return opts;
    };

    CLI::App* compute = app.add_subcommand("compute", "evaluate one Fisher functional (JSON)");
    CLI::App* verify = app.add_subcommand("verify", "run verification suites, write reports");
    CLI::App* scan = app.add_subcommand("scan", "bbm or mean-info table (CSV on stdout)");
    CLI::App* calibrate = app.add_subcommand("calibrate", "singular-form constant (JSON)");
    std::map<CLI::App*, std::map<std::string, CLI::Option*>> opts;
    for (CLI::App* sub : {compute, verify, scan, calibrate}) opts[sub] = add_common(sub);

    try {
        app.parse(argc, argv);
        CLI::App* sub = app.get_subcommands().front();
        auto& o = opts[sub];

        ConfigFile file;
        file.load(cfg.config_path);
        file.apply(o["d"], "d", cfg.d);
        file.apply(o["particles"], "particles", cfg.particles);
        file.apply(o["m"], "m", cfg.m);
        file.apply(o["period"], "period", cfg.period);
        file.apply(o["s"], "s", cfg.s);
        file.apply(o["method"], "method", cfg.method);
        file.apply(o["exponent-offset"], "exponent-offset", cfg.exponent_offset);
        file.apply(o["seed"], "seed", cfg.seed);
        file.apply(o["trials"], "trials", cfg.trials);
        file.apply(o["n-max"], "n-max", cfg.n_max);
        file.apply(o["in"], "in", cfg.in);
        file.apply(o["out"], "out", cfg.out);
        file.apply(o["mem-cap-bytes"], "mem-cap-bytes", cfg.mem_cap_bytes);
        file.apply(o["suites"], "suites", cfg.suites);
        file.apply(o["builder"], "builder", cfg.builder);
        file.apply(o["mean"], "mean", cfg.mean);
        file.apply(o["sigma2"], "sigma2", cfg.sigma2);
        file.apply(o["atoms"], "atoms", cfg.atoms);
        file.apply(o["smoothness"], "smoothness", cfg.smoothness);
        file.apply(o["save-density"], "save-density", cfg.save_density);
        file.apply(o["type"], "type", cfg.scan_type);
        file.apply(o["cache-file"], "cache-file", cfg.cache_file);
        file.apply(o["functional"], "functional", cfg.functional);
        if (o["gamma"]->count() > 0) {
            cfg.gamma = gamma_value;
        } else {
            file.apply_gamma(nullptr, cfg.gamma);
        }

        fk::set_memory_cap(cfg.mem_cap_bytes);

        if (sub == compute) return cmd_compute(cfg);
        if (sub == verify) return cmd_verify(cfg);
        if (sub == scan) return cmd_scan(cfg);
        if (sub == calibrate) return cmd_calibrate(cfg);
        throw fk::config_error("no command selected");
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e); // --help and friends
        }
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fk::budget_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const fk::format_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const fk::config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
