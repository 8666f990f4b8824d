#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstdio>
#include <future>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavemap/approx.hpp"
#include "wavemap/archive.hpp"
#include "wavemap/errors.hpp"
#include "wavemap/evolve.hpp"
#include "wavemap/matching.hpp"
#include "wavemap/numerics.hpp"
#include "wavemap/segment_solver.hpp"

namespace wm = wavemap;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void fail(const std::string& stage, const std::string& what, int code) {
    std::cerr << "stage " << stage << ": " << what << "\n";
    std::exit(code);
}

wm::match::GlobalProfile load_profile(const std::string& path) {
    std::string text;
    try {
        text = wm::archive::read_file(path);
    } catch (const std::exception& e) {
        fail("read-archive", e.what(), 2);
    }
    try {
        return wm::archive::from_json(text);
    } catch (const std::exception& e) {
        fail("parse-archive", e.what(), 2);
    }
}

struct SolveArgs {
    double d0 = 0.0;
    std::string mode = "small";
    double d1t = 0.0;
    double q1 = 0.0;
    std::string out;
    int mesh_points = 2001;
    double tol = 1e-12;
};

int cmd_solve(const SolveArgs& a) {
    wm::seg::PicardConfig cfg;
    cfg.mesh_points = a.mesh_points;
    cfg.tol = a.tol;
    wm::seg::ProfileMode mode =
        a.mode == "large" ? wm::seg::ProfileMode::large : wm::seg::ProfileMode::small;
    // module preconditions checked before dispatch
    try {
        cfg.validate();
        if (std::abs(a.d0) > cfg.smallness_bound)
            throw std::invalid_argument("--d0 exceeds the smallness bound");
        if (mode == wm::seg::ProfileMode::small && std::abs(a.q1) > cfg.smallness_bound)
            throw std::invalid_argument("--q1 exceeds the smallness bound");
        if (mode == wm::seg::ProfileMode::large && std::abs(a.d1t) < 1.0)
            throw std::invalid_argument("large mode needs |--d1t| >= 1");
    } catch (const std::exception& e) {
        fail("solve-args", e.what(), 2);
    }
    wm::match::GlobalProfile prof;
    try {
        const double free_param = mode == wm::seg::ProfileMode::large ? a.d1t : a.q1;
        prof = wm::match::glue_at_cone(a.d0, mode, free_param, cfg);
    } catch (const wm::SolverError& e) {
        fail("solve", e.what(), 3);
    } catch (const std::exception& e) {
        fail("solve-args", e.what(), 2);
    }
    // peak amplitude over the segments adjacent to the cone (the outer
    // region's size is already summarised by the far-field limit)
    double qmax = 0.0;
    for (const auto* s : {&prof.interior, &prof.subcone, &prof.supercone})
        for (double v : s->q) qmax = std::max(qmax, std::abs(v));
    try {
        wm::archive::write_file_atomic(a.out, wm::archive::to_json(prof));
    } catch (const std::exception& e) {
        fail("write-archive", e.what(), 2);
    }
    std::cout << "continuity_residual=" << fmt17(prof.continuity_residual)
              << " max_abs_Q=" << fmt17(qmax) << " farfield_limit=" << fmt17(prof.farfield.limit)
              << "\n";
    return 0;
}

struct ProfileCsvArgs {
    std::string in, out;
    int samples = 400;
};

int cmd_profile_csv(const ProfileCsvArgs& a) {
    if (a.samples < 8) fail("profile-csv-args", "--samples must be >= 8", 2);
    const auto prof = load_profile(a.in);
    // graded sampling: uniform bulk plus log-graded wedges on both sides of
    // the cone and a log far-field section
    std::vector<double> as;
    const int quarter = a.samples / 4;
    const int rest = a.samples - 3 * quarter;
    for (int i = 0; i < rest; ++i)
        as.push_back(0.05 + (0.9 - 0.05) * i / std::max(1, rest - 1));
    for (int i = 0; i < quarter; ++i)
        as.push_back(1.0 - 0.1 * std::pow(1e-8, static_cast<double>(i) / (quarter - 1)));
    for (int i = 0; i < quarter; ++i)
        as.push_back(1.0 + 0.1 * std::pow(1e-8, static_cast<double>(quarter - 1 - i) / (quarter - 1)));
    for (int i = 0; i < quarter; ++i)
        as.push_back(1.1 * std::pow(prof.a_max() / 1.1, static_cast<double>(i) / (quarter - 1)));
    std::sort(as.begin(), as.end());

    std::string csv = "a,Q,Qprime,ode_residual\n";
    for (double aa : as) {
        const auto [q, qp] = prof.q0(aa);
        const double res = wm::match::profile_ode_residual(prof, aa);
        csv += fmt17(aa) + "," + fmt17(q) + "," + fmt17(qp) + "," + fmt17(res) + "\n";
    }
    try {
        wm::archive::write_file_atomic(a.out, csv);
    } catch (const std::exception& e) {
        fail("write-csv", e.what(), 2);
    }
    return 0;
}

struct ScanArgs {
    std::string in, out;
    double cutoff_width = 1.0;
    double t_min = 50, t_max = 800;
    int t_steps = 10;
    bool use_fd = false;
    int threads = 1;
};

int cmd_residual_scan(const ScanArgs& a) {
    if (a.t_steps < 4) fail("residual-scan-args", "--t-steps must be >= 4 for the decay fit", 2);
    if (!(a.t_min > 0) || !(a.t_max > a.t_min))
        fail("residual-scan-args", "need 0 < t-min < t-max", 2);
    const auto prof = std::make_shared<const wm::match::GlobalProfile>(load_profile(a.in));
    wm::approx::CutoffSpec cutoff{a.cutoff_width};
    const wm::approx::ApproxSolutionField field(prof, cutoff);

    std::vector<double> ts(a.t_steps);
    for (int i = 0; i < a.t_steps; ++i)
        ts[i] = a.t_min * std::pow(a.t_max / a.t_min, static_cast<double>(i) / (a.t_steps - 1));

    std::vector<wm::approx::ResidualNorms> rows(ts.size());
    try {
        const int nth = std::max(1, a.threads);
        std::vector<std::future<void>> futs;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < nth; ++w)
            futs.push_back(std::async(std::launch::async, [&]() {
                for (std::size_t i = next++; i < ts.size(); i = next++)
                    rows[i] = wm::approx::residual_norms(field, ts[i], a.use_fd);
            }));
        for (auto& f : futs) f.get();
    } catch (const std::invalid_argument& e) {
        fail("residual-scan", e.what(), 3);
    } catch (const std::exception& e) {
        fail("residual-scan", e.what(), 3);
    }

    std::string csv = "t,l2,strip_sup\n";
    std::vector<double> l2s, sups;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        csv += fmt17(ts[i]) + "," + fmt17(rows[i].l2) + "," + fmt17(rows[i].strip_sup) + "\n";
        l2s.push_back(rows[i].l2);
        sups.push_back(rows[i].strip_sup);
    }
    std::string sidecar;
    try {
        const auto fl2 = wm::approx::decay_fit(ts, l2s);
        const auto fss = wm::approx::decay_fit(ts, sups);
        sidecar = std::string("{\n \"l2_exponent\": ") + fmt17(fl2.exponent) +
                  ",\n \"l2_r2\": " + fmt17(fl2.r2) +
                  ",\n \"strip_sup_exponent\": " + fmt17(fss.exponent) +
                  ",\n \"strip_sup_r2\": " + fmt17(fss.r2) + "\n}\n";
    } catch (const std::exception& e) {
        fail("residual-scan-fit", e.what(), 3);
    }
    try {
        wm::archive::write_file_atomic(a.out, csv);
        wm::archive::write_file_atomic(a.out + ".json", sidecar);
    } catch (const std::exception& e) {
        fail("write-csv", e.what(), 2);
    }
    return 0;
}

struct EvolveArgs {
    std::string in, out;
    double T = 50, delta1 = 0, horizon_factor = 20;
    int cells = 8192;
    double r_max = 0;  // 0: auto
    double cutoff_width = 1.0;
};

int cmd_evolve(const EvolveArgs& a) {
    const auto prof = load_profile(a.in);
    wm::approx::CutoffSpec cutoff{a.cutoff_width};
    wm::evolve::RadialGrid grid;
    grid.n = a.cells;
    grid.r_max = a.r_max > 0 ? a.r_max : 1.05 * a.horizon_factor * a.T + 8.0 * a.cutoff_width;
    wm::evolve::PersistenceReport rep;
    try {
        rep = wm::evolve::run_persistence(prof, cutoff, a.T, a.delta1, a.horizon_factor, grid);
    } catch (const wm::SolverError& e) {
        fail("evolve", e.what(), 3);
    } catch (const std::invalid_argument& e) {
        fail("evolve-args", e.what(), 2);
    }

    std::string csv = "t,sup_eps,energy_eps,energy_total\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        csv += fmt17(rep.times[i]) + "," + fmt17(rep.sup_eps[i]) + "," +
               fmt17(rep.energy_eps[i]) + "," + fmt17(rep.energy_total[i]) + "\n";
    std::string rj = std::string("{\n \"T\": ") + fmt17(rep.T) +
                     ",\n \"delta1\": " + fmt17(rep.delta1) +
                     ",\n \"horizon\": " + fmt17(rep.horizon) +
                     ",\n \"gamma_fit\": " + fmt17(rep.gamma_fit) +
                     ",\n \"gamma_r2\": " + fmt17(rep.gamma_r2) +
                     ",\n \"blowup\": " + (rep.blowup ? "true" : "false") +
                     ",\n \"blowup_time\": " + fmt17(rep.blowup_time) +
                     ",\n \"persistent\": " + (rep.persistent ? "true" : "false") + "\n}\n";
    try {
        wm::archive::write_file_atomic(a.out, csv);
        wm::archive::write_file_atomic(a.out + ".report.json", rj);
    } catch (const std::exception& e) {
        fail("write-csv", e.what(), 2);
    }
    if (rep.blowup) {
        std::cerr << "stage evolve: blowup at t=" << fmt17(rep.blowup_time)
                  << " (report written)\n";
        return 4;
    }
    return 0;
}

struct CritArgs {
    std::string in, out;
    double T = 20;
    int kmin_decades = 3;
};

int cmd_critnorm(const CritArgs& a) {
    if (a.kmin_decades < 1) fail("critnorm-args", "--kmin-decades must be >= 1", 2);
    const auto prof = std::make_shared<const wm::match::GlobalProfile>(load_profile(a.in));
    wm::approx::CutoffSpec cutoff{1.0};
    const wm::approx::ApproxSolutionField field(prof, cutoff);
    wm::approx::BandGrowthScan scan;
    try {
        scan = wm::approx::band_growth_scan(field, a.T, a.kmin_decades);
    } catch (const std::invalid_argument& e) {
        fail("critnorm", e.what(), 3);
    }
    std::string csv = "k_min,N2\n";
    for (std::size_t i = 0; i < scan.k_mins.size(); ++i)
        csv += fmt17(scan.k_mins[i]) + "," + fmt17(scan.n2[i]) + "\n";
    std::string sidecar =
        std::string("{\n \"slope\": ") + fmt17(scan.slope) + ",\n \"r2\": " + fmt17(scan.r2) +
        ",\n \"relative_slope\": " + fmt17(scan.relative_slope) +
        ",\n \"control_relative_slope\": " + fmt17(scan.control_relative_slope) +
        ",\n \"stabilized\": " +
        (std::abs(scan.control_relative_slope) < 0.05 ? "true" : "false") + "\n}\n";
    try {
        wm::archive::write_file_atomic(a.out, csv);
        wm::archive::write_file_atomic(a.out + ".json", sidecar);
    } catch (const std::exception& e) {
        fail("write-csv", e.what(), 2);
    }
    return 0;
}

struct BasisArgs {
    std::string table = "interior", out;
    double a_min = 0.1, a_max = 0.9;
    int samples = 64;
};

int cmd_basis(const BasisArgs& a) {
    const bool interior = a.table == "interior";
    if (!interior && a.table != "exterior")
        fail("basis-args", "--table must be interior or exterior", 2);
    if (!(a.a_min < a.a_max) || a.samples < 2) fail("basis-args", "bad range", 2);
    if (interior && !(a.a_min > 0 && a.a_max < 1)) fail("basis-args", "interior needs (0,1)", 2);
    if (!interior && !(a.a_min > 1)) fail("basis-args", "exterior needs a > 1", 2);

    auto f1 = interior ? wm::basis::phi1 : wm::basis::phi1_ext;
    auto f2 = interior ? wm::basis::phi2 : wm::basis::phi2_ext;
    std::string csv = "a,phi1,phi2,wronskian_check\n";
    for (int i = 0; i < a.samples; ++i) {
        const double aa = a.a_min + (a.a_max - a.a_min) * i / (a.samples - 1);
        // five-point FD Wronskian minus the closed form 4/a^2
        const double h = 1e-4 * std::max(1.0, aa);
        auto d5 = [h, aa](auto g) {
            return (g(aa - 2 * h) - 8 * g(aa - h) + 8 * g(aa + h) - g(aa + 2 * h)) / (12 * h);
        };
        const double w_fd = f1(aa) * d5(f2) - d5(f1) * f2(aa);
        csv += fmt17(aa) + "," + fmt17(f1(aa)) + "," + fmt17(f2(aa)) + "," +
               fmt17(w_fd - 4.0 / (aa * aa)) + "\n";
    }
    try {
        wm::archive::write_file_atomic(a.out, csv);
    } catch (const std::exception& e) {
        fail("write-csv", e.what(), 2);
    }
    return 0;
}

}  // namespace

namespace {

// `--config FILE` after the subcommand: plain `key = value` lines with #
// comments; explicit flags take precedence over file entries.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
    auto it = std::find(args.begin(), args.end(), "--config");
    if (it == args.end()) return args;
    if (it + 1 == args.end()) {
        std::cerr << "stage parse-flags: --config needs a file path\n";
        std::exit(2);
    }
    const std::string path = *(it + 1);
    args.erase(it, it + 2);
    std::ifstream f(path);
    if (!f) {
        std::cerr << "stage parse-flags: cannot open config file " << path << "\n";
        std::exit(2);
    }
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        const std::string flag = "--" + key;
        bool present = false;
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        if (!present) {
            args.push_back(flag);
            args.push_back(value);
        }
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-similar wave-map profile and evolution toolkit"};
    app.require_subcommand(1);

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "solve and glue a global profile");
    solve->add_option("--d0", sa.d0, "slope of the interior branch at the origin");
    solve->add_option("--mode", sa.mode, "small|large")->check(CLI::IsMember({"small", "large"}));
    solve->add_option("--d1t", sa.d1t, "exterior coefficient in large mode (>= 1)");
    solve->add_option("--q1", sa.q1, "free far-field limit in small mode");
    solve->add_option("--out", sa.out, "archive path")->required();
    solve->add_option("--mesh-points", sa.mesh_points, "nodes per segment");
    solve->add_option("--tol", sa.tol, "iteration tolerance");

    ProfileCsvArgs pa;
    auto* pcsv = app.add_subcommand("profile-csv", "sample an archive to CSV");
    pcsv->add_option("--in", pa.in)->required();
    pcsv->add_option("--samples", pa.samples);
    pcsv->add_option("--out", pa.out)->required();

    ScanArgs sc;
    auto* scan = app.add_subcommand("residual-scan", "defect norms of the excised field over t");
    scan->add_option("--in", sc.in)->required();
    scan->add_option("--cutoff-width", sc.cutoff_width);
    scan->add_option("--t-min", sc.t_min);
    scan->add_option("--t-max", sc.t_max);
    scan->add_option("--t-steps", sc.t_steps);
    scan->add_flag("--fd", sc.use_fd, "finite-difference defect evaluator");
    scan->add_option("--threads", sc.threads);
    scan->add_option("--out", sc.out)->required();

    EvolveArgs ea;
    auto* evo = app.add_subcommand("evolve", "perturbed evolution and persistence report");
    evo->add_option("--in", ea.in)->required();
    evo->add_option("--T", ea.T);
    evo->add_option("--delta1", ea.delta1);
    evo->add_option("--horizon-factor", ea.horizon_factor);
    evo->add_option("--cells", ea.cells);
    evo->add_option("--r-max", ea.r_max, "grid extent (0 = auto)");
    evo->add_option("--cutoff-width", ea.cutoff_width);
    evo->add_option("--out", ea.out)->required();

    CritArgs ca;
    auto* crit = app.add_subcommand("critnorm", "band-limited norm growth of the data tail");
    crit->add_option("--in", ca.in)->required();
    crit->add_option("--T", ca.T);
    crit->add_option("--kmin-decades", ca.kmin_decades);
    crit->add_option("--out", ca.out)->required();

    BasisArgs ba;
    auto* bas = app.add_subcommand("basis", "table of the fundamental pair");
    bas->add_option("--table", ba.table);
    bas->add_option("--a-min", ba.a_min);
    bas->add_option("--a-max", ba.a_max);
    bas->add_option("--samples", ba.samples);
    bas->add_option("--out", ba.out)->required();

    std::vector<std::string> args(argv + 1, argv + argc);
    args = apply_config_file(args);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "stage parse-flags: " << e.what() << "\n";
        return 2;
    }

    if (solve->parsed()) return cmd_solve(sa);
    if (pcsv->parsed()) return cmd_profile_csv(pa);
    if (scan->parsed()) return cmd_residual_scan(sc);
    if (evo->parsed()) return cmd_evolve(ea);
    if (crit->parsed()) return cmd_critnorm(ca);
    if (bas->parsed()) return cmd_basis(ba);
    return 2;
}
