#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dfd_cli_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

RunResult run_cli(const std::string& args, const fs::path& capture_dir) {
    const fs::path log = capture_dir / "run.log";
    const std::string cmd =
        std::string(DFD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream f(log);
    std::stringstream ss;
    ss << f.rdbuf();
    res.output = ss.str();
    return res;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> parse_summary(const std::string& out) {
    std::map<std::string, std::string> kv;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
        const size_t eq = line.find('=');
        if (eq != std::string::npos && line.find(' ') > eq)
            kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

const char* kBaseConfig = R"(
seed = 11
[optics]
aperture_std = 0.001
focal_length = 0.030
s1 = 0.0313433
s2 = 0.0307692
pitch = 4e-6
psf = gaussian
[scene]
type = band_noise
width = 160
height = 160
z = 0.8
freq_lo_px = 0.02
freq_hi_px = 0.05
components = 12
[noise]
gaussian_std = 0
[pipeline]
highpass_size = 21
denoise_std = 4
window = 9
border_margin = 16
[calibrate]
depths = 0.6, 0.72, 0.9, 1.1
trials = 1
)";

} // namespace

TEST_CASE("render writes the artifact set and reruns byte-identically") {
    TempDir tmp;
    write_file(tmp.path / "exp.cfg", kBaseConfig);
    const fs::path out1 = tmp.path / "out1", out2 = tmp.path / "out2";

    RunResult r1 = run_cli("render --config " + (tmp.path / "exp.cfg").string() +
                               " --out " + out1.string(),
                           tmp.path);
    CHECK(r1.exit_code == 0);
    for (const char* f : {"i1.png", "i2.png", "truth.pfm", "meta.cfg"})
        CHECK(fs::exists(out1 / f));

    RunResult r2 = run_cli("render --config " + (tmp.path / "exp.cfg").string() +
                               " --out " + out2.string(),
                           tmp.path);
    CHECK(r2.exit_code == 0);
    for (const char* f : {"i1.png", "i2.png", "truth.pfm", "meta.cfg"})
        CHECK(read_bytes(out1 / f) == read_bytes(out2 / f));

    // A different seed changes the rendered bytes.
    RunResult r3 = run_cli("render --config " + (tmp.path / "exp.cfg").string() +
                               " --out " + (tmp.path / "out3").string() + " --seed 12",
                           tmp.path);
    CHECK(r3.exit_code == 0);
    CHECK(read_bytes(out1 / "i1.png") != read_bytes(tmp.path / "out3" / "i1.png"));
}

TEST_CASE("missing optics section fails and names the section") {
    TempDir tmp;
    write_file(tmp.path / "bad.cfg", "[scene]\nz = 0.8\n");
    RunResult r = run_cli("render --config " + (tmp.path / "bad.cfg").string() +
                              " --out " + (tmp.path / "out").string(),
                          tmp.path);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("optics") != std::string::npos);
}

TEST_CASE("calibrate then depth reaches the oracle tolerance end to end") {
    TempDir tmp;
    write_file(tmp.path / "exp.cfg", kBaseConfig);
    const fs::path cal_dir = tmp.path / "cal";
    RunResult cal = run_cli("calibrate --config " + (tmp.path / "exp.cfg").string() +
                                " --out " + cal_dir.string(),
                            tmp.path);
    REQUIRE(cal.exit_code == 0);
    auto cal_kv = parse_summary(cal.output);
    CHECK(cal_kv.count("a"));
    CHECK(cal_kv.count("residual_rms"));
    REQUIRE(fs::exists(cal_dir / "calibration.cfg"));

    const fs::path ren_dir = tmp.path / "render";
    REQUIRE(run_cli("render --config " + (tmp.path / "exp.cfg").string() + " --out " +
                        ren_dir.string(),
                    tmp.path)
                .exit_code == 0);

    // Depth config points at the rendered pair and the calibration file.
    std::string depth_cfg = kBaseConfig;
    depth_cfg += "\n[depth]\ni1 = " + (ren_dir / "i1.png").string() +
                 "\ni2 = " + (ren_dir / "i2.png").string() +
                 "\nmeta = " + (ren_dir / "meta.cfg").string() +
                 "\ntruth = " + (ren_dir / "truth.pfm").string() + "\n";
    depth_cfg += "[pipeline2]\n"; // placeholder section to keep parser exercised
    write_file(tmp.path / "depth.cfg", depth_cfg);
    // Install the calibration reference into the pipeline section.
    {
        std::ofstream f(tmp.path / "depth.cfg", std::ios::app);
        f << "[pipeline]\ncalibration = " << (cal_dir / "calibration.cfg").string() << "\n";
    }

    const fs::path dep_dir = tmp.path / "depth_out";
    RunResult dep = run_cli("depth --config " + (tmp.path / "depth.cfg").string() +
                                " --out " + dep_dir.string(),
                            tmp.path);
    REQUIRE(dep.exit_code == 0);
    for (const char* f :
         {"depth.pfm", "confidence.pfm", "preview.png", "mask.png", "flops.txt"})
        CHECK(fs::exists(dep_dir / f));
    auto kv = parse_summary(dep.output);
    REQUIRE(kv.count("mae"));
    CHECK(std::stod(kv["mae"]) < 0.02 * 0.8); // oracle: within 2% of true Z
    REQUIRE(kv.count("flops_per_px"));
    CHECK(std::stod(kv["flops_per_px"]) <= 600.0);
}

TEST_CASE("depth rejects mismatched image sizes") {
    TempDir tmp;
    write_file(tmp.path / "exp.cfg", kBaseConfig);
    const fs::path ren = tmp.path / "r1";
    REQUIRE(run_cli("render --config " + (tmp.path / "exp.cfg").string() + " --out " +
                        ren.string(),
                    tmp.path)
                .exit_code == 0);
    std::string small_cfg = kBaseConfig;
    small_cfg.replace(small_cfg.find("width = 160"), 11, "width = 120");
    write_file(tmp.path / "small.cfg", small_cfg);
    const fs::path ren2 = tmp.path / "r2";
    REQUIRE(run_cli("render --config " + (tmp.path / "small.cfg").string() + " --out " +
                        ren2.string(),
                    tmp.path)
                .exit_code == 0);

    std::string depth_cfg = kBaseConfig;
    depth_cfg += "\n[depth]\ni1 = " + (ren / "i1.png").string() +
                 "\ni2 = " + (ren2 / "i2.png").string() +
                 "\n[pipeline]\na = -1e-9\nb = -1e-9\n";
    write_file(tmp.path / "mismatch.cfg", depth_cfg);
    RunResult r = run_cli("depth --config " + (tmp.path / "mismatch.cfg").string() +
                              " --out " + (tmp.path / "dout").string(),
                          tmp.path);
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("mismatch") != std::string::npos);
}

TEST_CASE("check passes on the default grid and flags an injected fault") {
    TempDir tmp;
    write_file(tmp.path / "exp.cfg", kBaseConfig);
    RunResult ok = run_cli("check --config " + (tmp.path / "exp.cfg").string() + " --out " +
                               (tmp.path / "c1").string(),
                           tmp.path);
    CHECK(ok.exit_code == 0);
    auto kv = parse_summary(ok.output);
    REQUIRE(kv.count("max_rel_error_fd"));
    CHECK(std::stod(kv["max_rel_error_fd"]) < 1e-3);
    CHECK(std::stod(kv["configs"]) >= 27);

    std::string faulted = kBaseConfig;
    faulted += "\n[check]\nfault_scale = 2.0\n";
    write_file(tmp.path / "fault.cfg", faulted);
    RunResult bad = run_cli("check --config " + (tmp.path / "fault.cfg").string() +
                                " --out " + (tmp.path / "c2").string(),
                            tmp.path);
    CHECK(bad.exit_code == 4);

    std::string empty = kBaseConfig;
    empty += "\n[check]\nz_values =\n";
    write_file(tmp.path / "empty.cfg", empty);
    RunResult vac = run_cli("check --config " + (tmp.path / "empty.cfg").string() +
                                " --out " + (tmp.path / "c3").string(),
                            tmp.path);
    CHECK(vac.exit_code == 0);
    CHECK(vac.output.find("warning") != std::string::npos);
}

TEST_CASE("a sparsity list produces one output set per threshold") {
    TempDir tmp;
    write_file(tmp.path / "exp.cfg", kBaseConfig);
    const fs::path ren = tmp.path / "ren";
    REQUIRE(run_cli("render --config " + (tmp.path / "exp.cfg").string() + " --out " +
                        ren.string(),
                    tmp.path)
                .exit_code == 0);
    std::string cfg = kBaseConfig;
    cfg += "\n[depth]\ni1 = " + (ren / "i1.png").string() +
           "\ni2 = " + (ren / "i2.png").string() +
           "\nmeta = " + (ren / "meta.cfg").string() + "\ncsv = true\n" +
           "[pipeline]\na = -5.8e-10\nb = -6.4e-10\nsparsity_list = 0, 0.3\n";
    write_file(tmp.path / "d.cfg", cfg);
    const fs::path dout = tmp.path / "dout";
    RunResult r = run_cli("depth --config " + (tmp.path / "d.cfg").string() + " --out " +
                              dout.string(),
                          tmp.path);
    REQUIRE(r.exit_code == 0);
    for (const char* f : {"depth_s0.00.pfm", "depth_s0.30.pfm", "mask_s0.00.png",
                          "mask_s0.30.png", "depth_s0.00.csv"})
        CHECK(fs::exists(dout / f));
    auto kv = parse_summary(r.output);
    CHECK(kv["output_sets"] == "2");
}

TEST_CASE("depth-axis sweep writes rows and auto-calibrates") {
    TempDir tmp;
    std::string cfg = kBaseConfig;
    cfg += "\n[sweep]\naxis = depth\nvalues = 0.75, 0.9\ntrials = 1\n";
    write_file(tmp.path / "s.cfg", cfg);
    const fs::path sout = tmp.path / "sout";
    RunResult r = run_cli("sweep --config " + (tmp.path / "s.cfg").string() + " --out " +
                              sout.string(),
                          tmp.path);
    REQUIRE(r.exit_code == 0);
    auto kv = parse_summary(r.output);
    CHECK(kv["rows"] == "2");
    std::ifstream f(sout / "sweep.csv");
    std::string all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(all.find("depth,0.75") != std::string::npos);
    CHECK(all.find("depth,0.9") != std::string::npos);
}

TEST_CASE("depth without calibration constants exits with a config error") {
    TempDir tmp;
    write_file(tmp.path / "exp.cfg", kBaseConfig);
    const fs::path ren = tmp.path / "ren";
    REQUIRE(run_cli("render --config " + (tmp.path / "exp.cfg").string() + " --out " +
                        ren.string(),
                    tmp.path)
                .exit_code == 0);
    std::string cfg = kBaseConfig;
    cfg += "\n[depth]\ni1 = " + (ren / "i1.png").string() +
           "\ni2 = " + (ren / "i2.png").string() + "\n";
    write_file(tmp.path / "nocal.cfg", cfg);
    RunResult r = run_cli("depth --config " + (tmp.path / "nocal.cfg").string() +
                              " --out " + (tmp.path / "d").string(),
                          tmp.path);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("calibrat") != std::string::npos);
}

TEST_CASE("a held lock blocks a second invocation against the same directory") {
    TempDir tmp;
    write_file(tmp.path / "exp.cfg", kBaseConfig);
    const fs::path out = tmp.path / "locked";
    fs::create_directories(out);
    const int fd = ::open((out / ".dfd.lock").c_str(), O_CREAT | O_RDWR, 0644);
    REQUIRE(fd >= 0);
    REQUIRE(::flock(fd, LOCK_EX | LOCK_NB) == 0);
    RunResult r = run_cli("render --config " + (tmp.path / "exp.cfg").string() + " --out " +
                              out.string(),
                          tmp.path);
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("in use") != std::string::npos);
    ::flock(fd, LOCK_UN);
    ::close(fd);
}

TEST_CASE("vacuous sweep exits successfully with an empty table") {
    TempDir tmp;
    std::string cfg = kBaseConfig;
    cfg += "\n[sweep]\naxis = depth\nvalues =\n[pipeline]\na = -1e-9\nb = -1e-9\n";
    write_file(tmp.path / "sweep.cfg", cfg);
    RunResult r = run_cli("sweep --config " + (tmp.path / "sweep.cfg").string() + " --out " +
                              (tmp.path / "sout").string(),
                          tmp.path);
    CHECK(r.exit_code == 0);
    auto kv = parse_summary(r.output);
    CHECK(kv["rows"] == "0");
    CHECK(fs::exists(tmp.path / "sout" / "sweep.csv"));
}
