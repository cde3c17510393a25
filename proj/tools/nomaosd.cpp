// Command-line front end: simulate | de | converge | validate.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "config.hpp"
#include "nomaosd/convergence.hpp"
#include "nomaosd/sim_harness.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace nomaosd;
using nomaosd::tool::Config;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct Manifest {
    json j;
    fs::path path;

    Manifest(const std::string& command, const std::string& config_path, const Config& cfg,
             std::uint64_t seed, const fs::path& out_dir) {
        j["command"] = command;
        j["config"] = config_path;
        j["seed"] = seed;
        j["tool_version"] = kVersion;
        j["started_at"] = timestamp();
        j["outputs"] = json::array();
        json resolved;
        for (const auto& [k, v] : cfg.entries()) resolved[k] = v;
        j["resolved"] = resolved;
        path = out_dir / "manifest.json";
        write();
    }
    void add_output(const fs::path& p) { j["outputs"].push_back(p.string()); }
    void finish() {
        j["finished_at"] = timestamp();
        write();
    }
    void write() const {
        std::ofstream os(path);
        os << j.dump(2) << '\n';
    }
};

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;  // 0 = from config
    int threads = 0;         // 0 = from config
    std::string grid;        // LO:HI:NBINS override
    bool dry_run = false;
};

GridSpec parse_grid(const std::string& text) {
    GridSpec g;
    if (std::sscanf(text.c_str(), "%lf:%lf:%u", &g.lo, &g.hi, &g.n_bins) != 3 || g.lo >= g.hi ||
        g.n_bins < 2)
        throw std::runtime_error("bad grid spec (expect LO:HI:NBINS): " + text);
    return g;
}

GridSpec grid_from(const Config& cfg, const CommonArgs& args, const char* key,
                   GridSpec fallback) {
    if (!args.grid.empty()) return parse_grid(args.grid);
    if (cfg.has("grid", key)) return parse_grid(cfg.require("grid", key));
    return fallback;
}

LinearCode load_configured_code(const Config& cfg) {
    const std::string file = cfg.require("code", "file");
    if (fs::exists(file)) return load_code(file);
    return load_code(code_fixture_path(file));
}

UserChannel channel_from(const Config& cfg, double snr_db) {
    const auto h = cfg.get_doubles("channel", "h");
    if (h.empty()) throw std::runtime_error("config: missing channel.h");
    return UserChannel::from_snr_db(h, snr_db);
}

std::vector<double> snr_points(const Config& cfg, const char* section) {
    auto pts = cfg.get_doubles(section, "snr_db");
    if (pts.empty()) pts = cfg.get_doubles("channel", "snr_db");
    return pts;
}

JdConfig decoder_from(const Config& cfg, const LinearCode& code) {
    JdConfig jd;
    jd.code = &code;
    jd.ch.h = cfg.get_doubles("channel", "h");
    jd.order = static_cast<std::uint32_t>(cfg.get_int("decoder", "order", 3));
    jd.t_off = static_cast<int>(cfg.get_int("decoder", "t_off", -1));
    jd.t_max = static_cast<int>(cfg.get_int("decoder", "t_max", 10));
    jd.beta = cfg.get_double("decoder", "beta", 1.0);
    jd.gamma = cfg.get_double("decoder", "gamma", 1.0);
    return jd;
}

std::uint64_t seed_from(const Config& cfg, const CommonArgs& args, const char* section) {
    if (args.seed) return args.seed;
    return static_cast<std::uint64_t>(cfg.get_int(section, "seed", 1));
}

int threads_from(const Config& cfg, const CommonArgs& args, const char* section) {
    if (args.threads) return args.threads;
    return static_cast<int>(cfg.get_int(section, "threads", 2));
}

void dump_density(const GridDensity& d, const fs::path& p, Manifest& man) {
    std::ofstream os(p);
    d.write_csv(os);
    man.add_output(p);
}

void print_resolved(const Config& cfg) {
    for (const auto& [k, v] : cfg.entries()) std::cout << k << " = " << v << '\n';
}

// ---------------------------------------------------------------- simulate --
int cmd_simulate(const CommonArgs& args) {
    const Config cfg = Config::parse_file(args.config_path);
    if (args.dry_run) {
        print_resolved(cfg);
        return 0;
    }
    const auto code = load_configured_code(cfg);

    ExperimentSpec spec;
    spec.cfg = decoder_from(cfg, code);
    spec.snr_points = snr_points(cfg, "experiment");
    if (spec.snr_points.empty()) {
        std::cerr << "simulate: no SNR points configured\n";
        return 2;
    }
    spec.n_blocks = static_cast<std::size_t>(cfg.get_int("experiment", "blocks", 1000));
    spec.seed = seed_from(cfg, args, "experiment");
    spec.threads = threads_from(cfg, args, "experiment");
    spec.all_zero = cfg.get("experiment", "mode", "random") == "allzero";
    for (const auto& w : cfg.get_words("experiment", "collect")) {
        if (w == "densities") spec.collect.densities = true;
        if (w == "nc_stats") spec.collect.nc_stats = true;
    }
    spec.density_grid = grid_from(cfg, args, "density", spec.density_grid);

    fs::create_directories(args.out_dir);
    Manifest man("simulate", args.config_path, cfg, spec.seed, args.out_dir);

    const auto res = run_experiment(spec);

    const fs::path ber_path = fs::path(args.out_dir) / "ber.csv";
    {
        std::ofstream os(ber_path);
        os << "snr_db,user,iteration,ber,ci95,bler,bit_errors,bits,block_errors,blocks\n";
        for (std::size_t s = 0; s < res.snr_points.size(); ++s)
            for (std::size_t u = 0; u < res.n_users; ++u)
                for (int t = 1; t <= res.t_max; ++t) {
                    const auto& st = res.at(s, u, t);
                    os << res.snr_points[s] << ',' << u + 1 << ',' << t << ',' << st.ber()
                       << ',' << st.ber_ci95() << ',' << st.bler() << ',' << st.bit_errors
                       << ',' << st.bits << ',' << st.block_errors << ',' << st.blocks << '\n';
                }
    }
    man.add_output(ber_path);

    if (spec.collect.densities) {
        for (std::size_t s = 0; s < res.snr_points.size(); ++s)
            for (std::size_t u = 0; u < res.n_users; ++u)
                for (int t = 1; t <= res.t_max; ++t) {
                    const auto& st = res.at(s, u, t);
                    char name[128];
                    std::snprintf(name, sizeof name, "hist_snr%g_u%zu_t%d_priori.csv",
                                  res.snr_points[s], u + 1, t);
                    dump_density(st.priori.to_density(), fs::path(args.out_dir) / name, man);
                    if (st.extrinsic.total() > 0) {
                        std::snprintf(name, sizeof name, "hist_snr%g_u%zu_t%d_extrinsic.csv",
                                      res.snr_points[s], u + 1, t);
                        dump_density(st.extrinsic.to_density(), fs::path(args.out_dir) / name,
                                     man);
                    }
                }
    }
    if (spec.collect.nc_stats) {
        const auto m0 = static_cast<std::uint32_t>(cfg.get_int("decoder", "order", 3));
        const auto stats = run_nc_experiment(code, m0, m0, spec.snr_points,
                                             static_cast<std::size_t>(cfg.get_int(
                                                 "experiment", "nc_samples", 5000)),
                                             spec.seed, spec.threads);
        const fs::path p = fs::path(args.out_dir) / "nc.csv";
        std::ofstream os(p);
        os << "snr_db,mean_nc,samples\n";
        for (const auto& st : stats)
            os << st.snr_db << ',' << st.mean_nc << ',' << st.samples << '\n';
        man.add_output(p);
    }

    std::cout << "simulate: " << res.completed_blocks << " blocks in " << res.wall_seconds
              << " s -> " << ber_path.string() << '\n';
    man.finish();
    return 0;
}

// ---------------------------------------------------------------------- de --
int cmd_de(const CommonArgs& args) {
    const Config cfg = Config::parse_file(args.config_path);
    if (args.dry_run) {
        print_resolved(cfg);
        return 0;
    }
    const auto code = load_configured_code(cfg);
    const auto pts = snr_points(cfg, "de");
    if (pts.size() != 1) {
        std::cerr << "de: exactly one SNR point required\n";
        return 2;
    }
    const auto ch = channel_from(cfg, pts[0]);
    const auto order = static_cast<std::uint32_t>(cfg.get_int("decoder", "order", 3));
    const int t_off = static_cast<int>(cfg.get_int("decoder", "t_off", ch.n_users()));
    const int t_max = static_cast<int>(cfg.get_int("decoder", "t_max", 6));
    if (t_max < 1) {
        std::cerr << "de: t_max must be at least 1\n";
        return 2;
    }

    DeOptions opt;
    opt.seed = seed_from(cfg, args, "de");
    opt.llr_grid = grid_from(cfg, args, "llr", opt.llr_grid);
    const auto backend =
        make_delta_backend(cfg.get("de", "backend", "empirical"),
                           static_cast<std::size_t>(cfg.get_int("de", "samples", 10000)),
                           opt.llr_grid);

    fs::create_directories(args.out_dir);
    Manifest man("de", args.config_path, cfg, opt.seed, args.out_dir);

    const auto states = de_run(ch, code, order, t_off, t_max, *backend, opt);

    json series = json::array();
    const fs::path means_path = fs::path(args.out_dir) / "de_means.csv";
    std::ofstream means(means_path);
    means << "t,user,kind,mean,variance,error_mass\n";
    for (const auto& st : states) {
        for (std::size_t u = 0; u < ch.n_users(); ++u) {
            auto emit = [&](const GridDensity& d, const char* kind) {
                char name[96];
                std::snprintf(name, sizeof name, "de_u%zu_t%d_%s.csv", u + 1, st.t, kind);
                dump_density(d, fs::path(args.out_dir) / name, man);
                series.push_back({{"iteration", st.t},
                                  {"user", u + 1},
                                  {"kind", kind},
                                  {"side", "+1"},
                                  {"file", name}});
                means << st.t << ',' << u + 1 << ',' << kind << ',' << d.mean() << ','
                      << d.variance() << ',' << ber_of(d) << '\n';
            };
            emit(st.priori[u], "priori");
            if (st.decoding) emit(st.extrinsic[u], "extrinsic");
        }
    }
    means.close();
    man.add_output(means_path);

    const fs::path series_path = fs::path(args.out_dir) / "de_series.json";
    std::ofstream(series_path) << series.dump(2) << '\n';
    man.add_output(series_path);

    std::cout << "de: " << states.size() << " iterations -> " << series_path.string() << '\n';
    man.finish();
    return 0;
}

// ---------------------------------------------------------------- converge --
int cmd_converge(const CommonArgs& args) {
    const Config cfg = Config::parse_file(args.config_path);
    if (args.dry_run) {
        print_resolved(cfg);
        return 0;
    }
    const auto code = load_configured_code(cfg);
    const auto order = static_cast<std::uint32_t>(cfg.get_int("decoder", "order", 3));
    const std::uint64_t seed = seed_from(cfg, args, "convergence");
    const int threads = threads_from(cfg, args, "convergence");

    const auto backend =
        make_delta_backend(cfg.get("convergence", "backend", "semianalytic"),
                           static_cast<std::size_t>(cfg.get_int("convergence", "samples", 4000)));
    GdTable::Options topt;
    topt.xi_lo = cfg.get_double("convergence", "xi_lo", 0.01);
    topt.xi_hi = cfg.get_double("convergence", "xi_hi", 16.0);
    topt.knots = static_cast<std::size_t>(cfg.get_int("convergence", "knots", 64));
    topt.threads = threads;

    fs::create_directories(args.out_dir);
    Manifest man("converge", args.config_path, cfg, seed, args.out_dir);

    GdTable table(code, order, *backend, seed, topt);

    const fs::path gd_path = fs::path(args.out_dir) / "gd_table.csv";
    {
        std::ofstream os(gd_path);
        os << "xi,g_d\n";
        for (std::size_t i = 0; i < table.knots_xi().size(); ++i)
            os << table.knots_xi()[i] << ',' << table.knots_g()[i] << '\n';
    }
    man.add_output(gd_path);

    const std::string mode = cfg.get("convergence", "mode", "equal_power");
    const fs::path xs_path = fs::path(args.out_dir) / "xistar.csv";
    std::ofstream xs(xs_path);

    if (mode == "equal_power") {
        const auto users = cfg.get_doubles("convergence", "users");
        const auto snrs = snr_points(cfg, "convergence");
        if (users.empty() || snrs.empty()) {
            std::cerr << "converge: equal_power needs convergence.users and snr_db\n";
            return 2;
        }
        xs << "n_users,snr_db,xi_star,multiplicity,intersections\n";
        for (double nu_d : users) {
            const auto nu = static_cast<std::size_t>(nu_d);
            if (nu < 2) {
                std::cerr << "converge: need at least two users for a fixed point\n";
                return 2;
            }
            for (double snr : snrs) {
                const auto cp = equal_power_fixed_point(nu, snr, table);
                xs << nu << ',' << snr << ',' << cp.xi_star[0] << ',' << cp.multiplicity << ',';
                for (std::size_t i = 0; i < cp.intersections.size(); ++i)
                    xs << (i ? ";" : "") << cp.intersections[i];
                xs << '\n';
                char name[96];
                std::snprintf(name, sizeof name, "converged_density_n%zu_snr%g.csv", nu, snr);
                dump_density(cp.converged_density[0], fs::path(args.out_dir) / name, man);
                // the matching power-balance line for plotting
                std::snprintf(name, sizeof name, "ge_line_n%zu_snr%g.csv", nu, snr);
                std::ofstream ge(fs::path(args.out_dir) / name);
                ge << "xi,g_e\n";
                const double sigma2 = static_cast<double>(nu) / std::pow(10.0, snr / 10.0);
                for (double xi = topt.xi_lo; xi <= topt.xi_hi; xi *= 1.1)
                    ge << xi << ',' << (xi - sigma2) / static_cast<double>(nu - 1) << '\n';
                man.add_output(fs::path(args.out_dir) / name);
            }
        }
    } else if (mode == "two_user") {
        const auto snrs = snr_points(cfg, "convergence");
        if (snrs.empty()) {
            std::cerr << "converge: two_user needs snr_db\n";
            return 2;
        }
        xs << "snr_db,xi1_star,xi2_star,multiplicity\n";
        for (double snr : snrs) {
            const auto ch = channel_from(cfg, snr);
            const auto cp = two_user_fixed_point(ch, table);
            xs << snr << ',' << cp.xi_star[0] << ',' << cp.xi_star[1] << ','
               << cp.multiplicity << '\n';
            for (std::size_t u = 0; u < 2; ++u) {
                char name[96];
                std::snprintf(name, sizeof name, "converged_density_u%zu_snr%g.csv", u + 1, snr);
                dump_density(cp.converged_density[u], fs::path(args.out_dir) / name, man);
            }
        }
    } else {
        std::cerr << "converge: unknown mode " << mode << '\n';
        return 2;
    }
    xs.close();
    man.add_output(xs_path);

    std::cout << "converge: table and fixed points -> " << xs_path.string() << '\n';
    man.finish();
    return 0;
}

// ---------------------------------------------------------------- validate --
int cmd_validate(const CommonArgs& args, double tv_override) {
    const Config cfg = Config::parse_file(args.config_path);
    if (args.dry_run) {
        print_resolved(cfg);
        return 0;
    }
    const auto code = load_configured_code(cfg);
    const auto pts = snr_points(cfg, "validate");
    if (pts.size() != 1) {
        std::cerr << "validate: exactly one SNR point required\n";
        return 2;
    }

    ExperimentSpec spec;
    spec.cfg = decoder_from(cfg, code);
    spec.snr_points = pts;
    spec.n_blocks = static_cast<std::size_t>(cfg.get_int("validate", "blocks", 4000));
    spec.seed = seed_from(cfg, args, "validate");
    spec.threads = threads_from(cfg, args, "validate");
    spec.collect.densities = true;
    spec.density_grid = grid_from(cfg, args, "density", {-80.0, 80.0, 320});

    const double tv_max =
        tv_override > 0 ? tv_override : cfg.get_double("validate", "tv_max", 0.05);

    fs::create_directories(args.out_dir);
    Manifest man("validate", args.config_path, cfg, spec.seed, args.out_dir);

    const auto sim = run_experiment(spec);

    DeOptions opt;
    opt.seed = spec.seed;
    const auto backend =
        make_delta_backend(cfg.get("de", "backend", "empirical"),
                           static_cast<std::size_t>(cfg.get_int("de", "samples", 10000)));
    const auto ch = channel_from(cfg, pts[0]);
    const auto states = de_run(ch, code, spec.cfg.order, spec.cfg.effective_t_off(),
                               spec.cfg.t_max, *backend, opt);
    const auto rows = compare_de(sim, 0, states);

    const fs::path p = fs::path(args.out_dir) / "validate.csv";
    bool all_pass = !rows.empty();
    {
        std::ofstream os(p);
        os << "user,iteration,kind,tv,threshold,pass\n";
        for (const auto& r : rows) {
            const bool pass = r.tv <= tv_max;
            all_pass = all_pass && pass;
            os << r.user + 1 << ',' << r.t << ',' << r.kind << ',' << r.tv << ',' << tv_max
               << ',' << (pass ? "yes" : "no") << '\n';
        }
    }
    man.add_output(p);
    man.finish();
    std::cout << "validate: " << rows.size() << " comparisons -> " << p.string()
              << (all_pass ? " (all pass)" : " (FAILURES)") << '\n';
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint-decoding simulator and density-evolution analyzer"};
    app.require_subcommand(1);

    CommonArgs args;
    double tv_override = -1;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "config file")->required();
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--seed", args.seed, "seed override");
        sub->add_option("--threads", args.threads, "worker thread count");
        sub->add_option("--grid", args.grid, "grid override LO:HI:NBINS");
        sub->add_flag("--dry-run", args.dry_run, "print the resolved config and exit");
    };
    auto* sim = app.add_subcommand("simulate", "Monte Carlo BER/BLER experiment");
    add_common(sim);
    auto* de = app.add_subcommand("de", "density-evolution run");
    add_common(de);
    auto* conv = app.add_subcommand("converge", "fixed-point convergence analysis");
    add_common(conv);
    auto* val = app.add_subcommand("validate", "compare simulation against the prediction");
    add_common(val);
    val->add_option("--tv-max", tv_override, "override the TV pass threshold");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(args);
        if (de->parsed()) return cmd_de(args);
        if (conv->parsed()) return cmd_converge(args);
        if (val->parsed()) return cmd_validate(args, tv_override);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
