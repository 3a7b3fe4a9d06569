#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = ENSCTRL_CLI_PATH;

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args, const fs::path& scratch) {
    const fs::path log = scratch / "cli.log";
    const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream buf;
    buf << in.rdbuf();
    r.output = buf.str();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ensctrl_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string base_config(const fs::path& out_dir, const std::string& extra = "") {
    std::ostringstream cfg;
    cfg << "[problem]\nname = linear2d\n"
        << "[measure]\nkind = quantile\nN = 4\n"
        << "[discretization]\nM = 8\nS = 4\n"
        << "[objective]\nbeta = 1e-3\n"
        << "[algorithm]\nmethod = grad\nmax_iter = 20\n"
        << "[output]\ndirectory = " << out_dir.string() << "\n"
        << extra;
    return cfg.str();
}

} // namespace

TEST_CASE("optimize runs, writes outputs, and the traced cost decreases") {
    const fs::path dir = fresh_dir("optimize");
    const fs::path ini = dir / "run.ini";
    write_file(ini, base_config(dir / "out"));
    const RunResult r = run_cli("optimize --config " + ini.string(), dir);
    CHECK(r.exit_code == 0);
    for (const char* f : {"trace.csv", "control.csv", "trajectories.csv", "measure.csv"}) {
        CHECK(fs::exists(dir / "out" / f));
    }
    // First and last recorded costs from trace.csv (comment, header, rows).
    std::ifstream in(dir / "out" / "trace.csv");
    std::string line, first_row, last_row;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("iter", 0) == 0) continue;
        if (first_row.empty()) first_row = line;
        last_row = line;
    }
    auto cost_field = [](const std::string& row) {
        std::istringstream ss(row);
        std::string tok;
        std::getline(ss, tok, ',');
        std::getline(ss, tok, ',');
        return std::stod(tok);
    };
    REQUIRE(!first_row.empty());
    CHECK(cost_field(last_row) < cost_field(first_row));
}

TEST_CASE("optimize reruns are byte-for-byte reproducible") {
    const fs::path dir = fresh_dir("repro");
    const fs::path ini = dir / "run.ini";
    write_file(ini, base_config(dir / "out",
                                "[measure]\nkind = empirical\nN = 16\nseed = 9\n"));
    REQUIRE(run_cli("optimize --config " + ini.string(), dir).exit_code == 0);
    const std::string control1 = read_file(dir / "out" / "control.csv");
    const std::string trace1 = read_file(dir / "out" / "trace.csv");
    REQUIRE(run_cli("optimize --config " + ini.string(), dir).exit_code == 0);
    CHECK(read_file(dir / "out" / "control.csv") == control1);
    CHECK(read_file(dir / "out" / "trace.csv") == trace1);
}

TEST_CASE("beta = 0 is rejected with exit code 2") {
    const fs::path dir = fresh_dir("badbeta");
    const fs::path ini = dir / "run.ini";
    write_file(ini, base_config(dir / "out", "[objective]\nbeta = 0\n"));
    const RunResult r = run_cli("optimize --config " + ini.string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("beta") != std::string::npos);
}

TEST_CASE("unknown keys are rejected by name and line") {
    const fs::path dir = fresh_dir("unknown");
    const fs::path ini = dir / "run.ini";
    write_file(ini, base_config(dir / "out", "[objective]\nbetta = 1e-3\n"));
    const RunResult r = run_cli("optimize --config " + ini.string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("betta") != std::string::npos);
    CHECK(r.output.find("line") != std::string::npos);
}

TEST_CASE("missing required keys are named") {
    const fs::path dir = fresh_dir("missing");
    const fs::path ini = dir / "run.ini";
    write_file(ini, base_config(dir / "out", "[problem]\nname = generic-lti\n"));
    const RunResult r = run_cli("optimize --config " + ini.string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("A0") != std::string::npos);
}

TEST_CASE("max_iter = 0 reports the initial cost") {
    const fs::path dir = fresh_dir("noiter");
    const fs::path ini = dir / "run.ini";
    write_file(ini, base_config(dir / "out", "[algorithm]\nmax_iter = 0\n"));
    const RunResult r = run_cli("optimize --config " + ini.string(), dir);
    CHECK(r.exit_code == 0);
    // The returned control is the untouched u0 = 0.
    std::ifstream in(dir / "out" / "control.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ','); // time column
        while (std::getline(ss, tok, ',')) CHECK(std::stod(tok) == 0.0);
        ++rows;
    }
    CHECK(rows == 8);
}

TEST_CASE("simulate and oracle subcommands succeed") {
    const fs::path dir = fresh_dir("simoracle");
    const fs::path ini = dir / "run.ini";
    write_file(ini, base_config(dir / "out"));
    CHECK(run_cli("simulate --config " + ini.string(), dir).exit_code == 0);
    CHECK(fs::exists(dir / "out" / "trajectories.csv"));
    CHECK(run_cli("oracle --config " + ini.string(), dir).exit_code == 0);
    CHECK(fs::exists(dir / "out" / "oracle.csv"));
    const std::string oracle = read_file(dir / "out" / "oracle.csv");
    CHECK(oracle.find("cost_opt") != std::string::npos);
}

TEST_CASE("check-grad passes on a healthy configuration") {
    const fs::path dir = fresh_dir("checkgrad");
    const fs::path ini = dir / "run.ini";
    write_file(ini, base_config(dir / "out"));
    const RunResult r = run_cli("check-grad --config " + ini.string(), dir);
    CHECK(r.exit_code == 0);
}

TEST_CASE("the check subcommand passes end to end") {
    const fs::path dir = fresh_dir("check");
    const fs::path ini = dir / "run.ini";
    write_file(ini, base_config(dir / "out"));
    const RunResult r = run_cli("check --config " + ini.string(), dir);
    CHECK(r.exit_code == 0);
}

TEST_CASE("a missing config file is a usage error") {
    const fs::path dir = fresh_dir("nocfg");
    const RunResult r = run_cli("optimize --config " + (dir / "absent.ini").string(), dir);
    CHECK(r.exit_code == 2);
}
