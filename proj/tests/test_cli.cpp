#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run cli(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(REDMAP_CLI) + " " + args + " > \"" + out.string() + "\" 2> \"" +
                          err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

const std::vector<std::string> kReportFields = {
    "beta_f",      "beta_F_riem", "beta_F_eucl",  "epsilon",          "multiplicity_p",
    "delta_max",   "delta_min",   "mu_f",         "mu_F",             "kappa_f",
    "kappa_F",     "M_phi",       "m_phi",        "Q",                "Z",
    "correction_norm", "bound_affine_holds", "bound_nonlinear_holds", "bound_mb_holds",
    "star_condition_holds"};

const char* const kTraceHeader = "iter,f_value,grad_norm,step_size,elapsed_ns";

}  // namespace

TEST_CASE("cli: reproduce quad2d writes the output layout") {
  const fs::path dir = scratch("reproduce");
  const Run r = cli(dir, "--seed 1 --out \"" + (dir / "o").string() + "\" reproduce quad2d --M 10");
  REQUIRE(r.status == 0);
  const fs::path ex = dir / "o" / "quad2d";
  for (const char* m : {"GD_full", "GD_reduced", "GeoPrecGD"}) {
    const std::string csv = slurp(ex / (std::string(m) + ".csv"));
    CHECK(first_line(csv) == kTraceHeader);
  }
  CHECK(first_line(slurp(ex / "eigs.csv")) == "kind,index,value");
  const std::string geo = slurp(ex / "GeoPrecGD.csv");
  CHECK(std::count(geo.begin(), geo.end(), '\n') == 3);  // header, iterate 0, iterate 1

  const nlohmann::ordered_json j = nlohmann::ordered_json::parse(slurp(ex / "spectral.json"));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  REQUIRE(keys.size() >= kReportFields.size());
  for (std::size_t i = 0; i < kReportFields.size(); ++i) CHECK(keys[i] == kReportFields[i]);
  CHECK(j["kappa_F"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("cli: identical command lines give byte-identical artifacts") {
  const fs::path dir = scratch("bytes");
  for (const char* run : {"a", "b"}) {
    REQUIRE(cli(dir, "--seed 42 --out \"" + (dir / run).string() + "\" reproduce quad-hd").status == 0);
  }
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    CHECK(slurp(e.path()) == slurp(dir / "b" / rel));
    ++files;
  }
  CHECK(files == 5);
}

TEST_CASE("cli: timing records nonzero elapsed times") {
  const fs::path dir = scratch("timing");
  REQUIRE(cli(dir, "--timing --out \"" + (dir / "o").string() + "\" reproduce quad2d").status == 0);
  const std::string csv = slurp(dir / "o" / "quad2d" / "GD_full.csv");
  const std::string last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  CHECK(last.substr(last.rfind(',') + 1) != "0\n");
}

TEST_CASE("cli: configuration errors exit with status 2") {
  const fs::path dir = scratch("errors");
  Run r = cli(dir, "--out \"" + (dir / "o").string() + "\" reproduce nope");
  CHECK(r.status == 2);
  CHECK_FALSE(r.err.empty());
  CHECK(cli(dir, "--config \"" + (dir / "missing.toml").string() + "\" analyze").status == 2);

  std::ofstream(dir / "bad.toml") << "[problem]\nname = \"quad2d\"\nbogus = 3\n";
  r = cli(dir, "--config \"" + (dir / "bad.toml").string() + "\" --out \"" + (dir / "o").string() + "\" analyze");
  CHECK(r.status == 2);
  CHECK(cli(dir, "--out \"" + (dir / "o").string() + "\" analyze --problem quad2d --mapping sine").status == 2);
  CHECK(cli(dir, "propcheck --count -1").status == 2);
  CHECK(cli(dir, "propcheck --family nope --instance-seed 1").status == 2);
  CHECK_FALSE(fs::exists(dir / "o" / "quad2d" / "sine"));
}

TEST_CASE("cli: propcheck exit codes") {
  const fs::path dir = scratch("propcheck");
  Run r = cli(dir, "--seed 11 propcheck --count 100");
  CHECK(r.status == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(cli(dir, "propcheck --count 0").status == 0);

  r = cli(dir, "--seed 2 propcheck --count 4 --corrupt-hessian");
  CHECK(r.status == 1);
  const auto pos = r.out.find("instance_seed=");
  REQUIRE(pos != std::string::npos);
  const std::string seed = r.out.substr(pos + 14, r.out.find(' ', pos) - pos - 14);
  const auto fam = r.out.find("family=");
  const std::string family = r.out.substr(fam + 7, r.out.find(' ', fam) - fam - 7);
  const Run again = cli(dir, "propcheck --family " + family + " --instance-seed " + seed + " --corrupt-hessian");
  CHECK(again.status == 1);
  CHECK(cli(dir, "propcheck --family " + family + " --instance-seed " + seed).status == 0);
}

TEST_CASE("cli: analyze flags the nonlinear hypothesis on quad2d") {
  const fs::path dir = scratch("analyze");
  const Run r = cli(dir, "--out \"" + (dir / "o").string() +
                             "\" analyze --problem quad2d --mapping nonlinear --radius 1");
  REQUIRE(r.status == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "o" / "quad2d" / "nonlinear" / "spectral.json"));
  CHECK(j["nonlinear_hypothesis_failed"].get<bool>());
  CHECK(j["Q"].get<double>() * j["Z"].get<double>() > 0.0);
}

TEST_CASE("cli: TOML and JSON configs are equivalent and flags override them") {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "run.toml") << "[problem]\nname = \"quad2d\"\nM = 4\n[mapping]\nname = \"linear\"\n"
                                     "[region]\nradius = 0.5\nsamples = 8\n";
  std::ofstream(dir / "run.json") << R"({"problem": {"name": "quad2d", "M": 4}, "mapping": {"name": "linear"},
                                          "region": {"radius": 0.5, "samples": 8}})";
  REQUIRE(cli(dir, "--config \"" + (dir / "run.toml").string() + "\" --out \"" + (dir / "t").string() + "\" analyze")
              .status == 0);
  REQUIRE(cli(dir, "--config \"" + (dir / "run.json").string() + "\" --out \"" + (dir / "j").string() + "\" analyze")
              .status == 0);
  const std::string t = slurp(dir / "t" / "quad2d" / "linear" / "spectral.json");
  CHECK(t == slurp(dir / "j" / "quad2d" / "linear" / "spectral.json"));
  // beta_f = lambda_max([[2 + 2M, -2M], [-2M, 2M]]) = 9 + sqrt(65) for M = 4.
  CHECK(nlohmann::json::parse(t)["beta_f"].get<double>() == doctest::Approx(9 + std::sqrt(65.0)));

  REQUIRE(cli(dir, "--config \"" + (dir / "run.toml").string() + "\" --out \"" + (dir / "f").string() +
                       "\" analyze --M 10")
              .status == 0);
  const auto f = nlohmann::json::parse(slurp(dir / "f" / "quad2d" / "linear" / "spectral.json"));
  CHECK(f["beta_f"].get<double>() == doctest::Approx(21 + std::sqrt(401.0)));
}

TEST_CASE("cli: sweep writes one directory per value") {
  const fs::path dir = scratch("sweep");
  const Run r = cli(dir, "--jobs 2 --out \"" + (dir / "o").string() +
                             "\" sweep --problem quad2d --sweep-param M --values 1,10");
  REQUIRE(r.status == 0);
  for (const char* v : {"M=1", "M=10"}) {
    const fs::path d = dir / "o" / "quad2d" / "sweep" / v;
    CHECK(fs::exists(d / "spectral.json"));
    CHECK(fs::exists(d / "GeoPrecGD.csv"));
    CHECK(fs::exists(d / "eigs.csv"));
  }
  CHECK(r.out.find("[M=1]") < r.out.find("[M=10]"));
  CHECK(cli(dir, "--out \"" + (dir / "o").string() + "\" sweep --problem quad2d").status == 2);
}

TEST_CASE("cli: tanh-hd logs the Gauss-Newton direction check") {
  const fs::path dir = scratch("tanh");
  const Run r = cli(dir, "--seed 3 --out \"" + (dir / "o").string() + "\" reproduce tanh-hd --n 40 --lambda 10 --alpha 1");
  REQUIRE(r.status == 0);
  const auto pos = r.out.find("max relative deviation ");
  REQUIRE(pos != std::string::npos);
  const double dev = std::stod(r.out.substr(pos + 23));
  CHECK(dev <= 1e-10);
}
