// End-to-end checks of the command-line tool. argv[1] is the binary path.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

int g_failures = 0;
std::string g_bin;

void check(bool ok, const std::string& what) {
    if (!ok) {
        ++g_failures;
        std::cerr << "FAILED: " << what << "\n";
    }
}

int run(const std::string& args) {
    const std::string cmd = g_bin + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream f(path);
    std::string line;
    while (std::getline(f, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

double json_number(const std::string& text, const std::string& key) {
    const auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos) return std::nan("");
    const auto colon = text.find(':', pos);
    return std::strtod(text.c_str() + colon + 1, nullptr);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: cli_tests <wavemap binary>\n";
        return 2;
    }
    g_bin = argv[1];

    // invalid flags exit with 2
    check(run("solve --bogus 1 --out x.json") == 2, "unknown flag exits 2");
    check(run("profile-csv --in missing.json --samples 10 --out y.csv") == 2,
          "missing archive exits 2");
    check(run("basis --table nowhere --out b.csv") == 2, "bad table exits 2");

    // trivial solve: zero archive
    check(run("solve --d0 0 --q1 0 --out zero.json") == 0, "zero solve exits 0");
    const std::string zero = slurp("zero.json");
    check(zero.find("\"schema\": 1") != std::string::npos, "archive carries schema 1");

    // real solve is deterministic byte for byte
    check(run("solve --d0 0.01 --q1 0.02 --out p1.json") == 0, "solve exits 0");
    check(run("solve --d0 0.01 --q1 0.02 --out p2.json") == 0, "second solve exits 0");
    check(slurp("p1.json") == slurp("p2.json"), "identical flags give identical archives");
    const std::string summary = slurp("cli_stdout.txt");
    check(summary.find("continuity_residual=") != std::string::npos, "solve prints a summary");

    // flags override the config file
    {
        std::ofstream cfgf("solve.cfg");
        cfgf << "# configuration\n"
             << "d0 = 0.005\n"
             << "q1 = 0.02\n"
             << "out = cfg_out.json\n";
    }
    check(run("solve --config solve.cfg --d0 0.01") == 0, "config-file solve exits 0");
    check(slurp("cfg_out.json") == slurp("p1.json"), "command line overrides the config file");

    // parameters are validated against module preconditions before dispatch
    check(run("solve --d0 0.5 --q1 0 --out bad.json") == 2, "out-of-bound d0 exits 2");
    check(slurp("cli_stderr.txt").find("stage solve-args") != std::string::npos,
          "stderr names the failing stage");

    // profile CSV
    check(run("profile-csv --in p1.json --samples 200 --out prof.csv") == 0, "profile-csv");
    auto rows = csv_rows("prof.csv");
    check(rows.size() == 201, "row count equals samples plus header");
    check(rows[0].size() == 4 && rows[0][0] == "a" && rows[0][3] == "ode_residual",
          "profile CSV header");
    double worst = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        worst = std::max(worst, std::abs(std::strtod(rows[i][3].c_str(), nullptr)));
    check(worst < 1e-6, "ode residual column stays below 1e-6");

    // zero archive gives all-zero columns
    check(run("profile-csv --in zero.json --samples 50 --out zeroprof.csv") == 0,
          "profile-csv on the zero archive");
    auto zrows = csv_rows("zeroprof.csv");
    bool allz = true;
    for (std::size_t i = 1; i < zrows.size(); ++i)
        for (int c = 1; c < 4; ++c)
            if (std::strtod(zrows[i][c].c_str(), nullptr) != 0.0) allz = false;
    check(allz, "zero archive samples to zero columns");

    // basis tables
    check(run("basis --table interior --a-min 0.1 --a-max 0.9 --samples 33 --out bi.csv") == 0,
          "basis interior");
    auto brows = csv_rows("bi.csv");
    bool found_half = false;
    double wcheck = 0;
    for (std::size_t i = 1; i < brows.size(); ++i) {
        if (std::strtod(brows[i][0].c_str(), nullptr) == 0.5)
            found_half = std::strtod(brows[i][1].c_str(), nullptr) == 3.0;
        wcheck = std::max(wcheck, std::abs(std::strtod(brows[i][3].c_str(), nullptr)));
    }
    check(found_half, "interior row at a = 0.5 has phi1 = 3");
    check(wcheck < 1e-6, "wronskian check column below 1e-6");
    check(run("basis --table exterior --a-min 1.5 --a-max 3 --samples 4 --out be.csv") == 0,
          "basis exterior");
    auto erows = csv_rows("be.csv");
    check(std::strtod(erows[2][1].c_str(), nullptr) == 0.75, "exterior row at a = 2 has phi1 = 3/4");

    // residual scan on a tail-driven profile
    check(run("solve --d0 0 --q1 0.05 --out pz.json") == 0, "d0 = 0 solve");
    check(run("residual-scan --in pz.json --t-min 50 --t-max 200 --t-steps 5 --out scan.csv") == 0,
          "residual-scan");
    auto srows = csv_rows("scan.csv");
    check(srows.size() == 6 && srows[0][1] == "l2" && srows[0][2] == "strip_sup",
          "scan CSV schema");
    const std::string sidecar = slurp("scan.csv.json");
    const double l2e = json_number(sidecar, "l2_exponent");
    check(l2e < -1.7 && l2e > -2.3, "scan sidecar l2 exponent near -2");
    check(run("residual-scan --in pz.json --t-min 50 --t-max 200 --t-steps 5 --threads 3 "
              "--out scan3.csv") == 0,
          "threaded residual-scan");
    check(slurp("scan3.csv") == slurp("scan.csv"), "threaded scan output is identical");

    // small evolve
    check(run("evolve --in pz.json --T 50 --delta1 0.001 --horizon-factor 2 --cells 1024 "
              "--r-max 130 --out ev.csv") == 0,
          "evolve exits 0");
    auto evrows = csv_rows("ev.csv");
    check(evrows.size() > 10 && evrows[0][3] == "energy_total", "evolve CSV schema");
    const std::string evrep = slurp("ev.csv.report.json");
    check(evrep.find("\"blowup\": false") != std::string::npos, "evolve report parses");

    // large mode summary reports the near-cone peak
    check(run("solve --d0 0.01 --mode large --d1t 100 --out pl.json") == 0, "large solve");
    {
        const std::string out = slurp("cli_stdout.txt");
        const auto pos = out.find("max_abs_Q=");
        const double m = std::strtod(out.c_str() + pos + 10, nullptr);
        check(m >= 3.0 && m <= 30.0, "large-mode summary peak in [3, 30]");
    }

    // an oversized perturbation trips the blowup detector but still writes
    // a well-formed truncated report
    check(run("evolve --in pz.json --T 50 --delta1 1e5 --horizon-factor 2 --cells 1024 "
              "--r-max 130 --out evb.csv") == 4,
          "blowup exits 4");
    const std::string brep = slurp("evb.csv.report.json");
    check(brep.find("\"blowup\": true") != std::string::npos, "blowup report flagged");
    check(std::isfinite(json_number(brep, "blowup_time")), "blowup time recorded");

    // critnorm with a short scan
    check(run("critnorm --in p1.json --T 10 --kmin-decades 2 --out cn.csv") == 0, "critnorm");
    auto crows = csv_rows("cn.csv");
    check(crows.size() == 18 && crows[0][0] == "k_min" && crows[0][1] == "N2", "critnorm schema");
    const std::string cnside = slurp("cn.csv.json");
    check(std::isfinite(json_number(cnside, "relative_slope")), "critnorm sidecar parses");

    if (g_failures == 0) {
        std::cout << "cli tests passed\n";
        return 0;
    }
    std::cerr << g_failures << " cli checks failed\n";
    return 1;
}
