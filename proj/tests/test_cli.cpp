// Runs the command-line tool as a subprocess.
#include "rriokr/io.hpp"
#include "support.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace rriokr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kCli = RRIOKR_CLI_PATH;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rriokr_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = kCli.string() + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_json(const fs::path& path, const json& j) {
  std::ofstream(path) << j.dump(2);
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_matrix(const fs::path& path, const Matrix& m) {
  CsvWriter w([&] {
    std::vector<std::string> h;
    for (Index j = 0; j < m.cols(); ++j) h.push_back("c" + std::to_string(j));
    return h;
  }());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) w.cell(m(i, j));
    w.end_row();
  }
  w.write(path);
}

std::vector<fs::path> csv_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") out.push_back(e.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

// Reruns `command` from the config.json saved in `first` and compares every
// CSV byte for byte.
void check_rerun(const std::string& command, const fs::path& first) {
  const fs::path second = first.string() + "_rerun";
  fs::remove_all(second);
  REQUIRE(run(command + " --config " + (first / "config.json").string() + " --threads 1 --out " +
              second.string()) == 0);
  const auto files = csv_files(first);
  REQUIRE_FALSE(files.empty());
  CHECK(files == csv_files(second));
  for (const fs::path& f : files) {
    CAPTURE(f);
    CHECK(slurp(first / f) == slurp(second / f));
  }
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 1") {
    const fs::path dir = scratch("usage");
    CHECK(run("") == 1);
    CHECK(run("frobnicate --config x") == 1);
    CHECK(run("diagnose") == 1);
    CHECK(run("diagnose --config " + write_json(dir / "noseed.json", {{"problem", {{"d", 5}}}}).string() +
              " --out " + (dir / "o").string()) == 1);
    CHECK(run("diagnose --config " + write_json(dir / "c.json", {{"seed", 1}, {"problem", {{"d", 5}}}}).string() +
              " --lambda 0.1 --out " + (dir / "o").string()) == 1);
    std::ofstream(dir / "broken.json") << "{";
    CHECK(run("diagnose --config " + (dir / "broken.json").string()) == 1);
  }

  TEST_CASE("data errors exit with 2 and numeric failures with 3") {
    const fs::path dir = scratch("data");
    const json bad = {{"seed", 1}, {"data", {{"x", "missing.csv"}, {"y", "missing.csv"}}}, {"lambda", 0.1}, {"p", 1}};
    CHECK(run("train --config " + write_json(dir / "bad.json", bad).string() + " --out " + (dir / "o").string()) == 2);
    std::ofstream(dir / "empty.csv").close();
    const json empty = {{"seed", 1}, {"data", {{"x", "empty.csv"}, {"y", "empty.csv"}}}, {"lambda", 0.1}, {"p", 1}};
    CHECK(run("train --config " + write_json(dir / "empty.json", empty).string() + " --out " + (dir / "o").string()) ==
          2);
    std::ofstream(dir / "nan.csv") << "1,2\nnan,3\n0,1\n";
    std::ofstream(dir / "y.csv") << "1\n2\n3\n";
    const json nan = {{"seed", 1}, {"data", {{"x", "nan.csv"}, {"y", "y.csv"}}}, {"lambda", 0.1}, {"p", 1}};
    CHECK(run("train --config " + write_json(dir / "nan.json", nan).string() + " --out " + (dir / "o").string()) == 2);
  }

  TEST_CASE("numeric failure exits with 3") {
    const fs::path dir = scratch("numeric");
    // Linear Gram entries overflow to infinity.
    std::ofstream(dir / "x.csv") << "1e200,1\n2e200,3\n-1e200,1\n";
    std::ofstream(dir / "y.csv") << "1\n2\n3\n";
    const json huge = {{"seed", 1},
                       {"data", {{"x", "x.csv"}, {"y", "y.csv"}}},
                       {"lambda", 0.1},
                       {"p", 1},
                       {"input_kernel", "linear"}};
    CHECK(run("train --config " + write_json(dir / "huge.json", huge).string() + " --out " + (dir / "o").string()) ==
          3);
  }

  TEST_CASE("train then decode equals the in-process pipeline") {
    const fs::path dir = scratch("roundtrip");
    const Matrix x = testing::random_matrix(50, 4, 1);
    const Matrix y = testing::random_binary(50, 6, 2);
    const Matrix xt = testing::random_matrix(8, 4, 3);
    const Matrix cand = testing::random_binary(30, 6, 4);
    write_matrix(dir / "x.csv", x);
    write_matrix(dir / "y.csv", y);
    write_matrix(dir / "xt.csv", xt);
    write_matrix(dir / "cand.csv", cand);
    const json train = {{"seed", 3},
                        {"data", {{"x", "x.csv"}, {"y", "y.csv"}}},
                        {"lambda", 0.01},
                        {"p", 4},
                        {"input_kernel", "gaussian:3"},
                        {"output_kernel", "gaussian:2"}};
    REQUIRE(run("train --config " + write_json(dir / "train.json", train).string() + " --out " +
                (dir / "t").string()) == 0);
    CHECK(fs::exists(dir / "t" / "config.json"));
    const json saved = json::parse(slurp(dir / "t" / "config.json"));
    CHECK(saved.at("seed") == 3);
    CHECK(saved.at("command") == "train");
    CHECK(read_csv(dir / "t" / "train_summary.csv").values.rows() == 1);

    for (const std::string variant : {"reduced", "fullrank"}) {
      const json decode = {{"seed", 3},
                           {"model", (dir / "t" / "model.bin").string()},
                           {"x", "xt.csv"},
                           {"candidates", "cand.csv"},
                           {"k", 5},
                           {"variant", variant}};
      const fs::path out = dir / ("d_" + variant);
      REQUIRE(run("decode --config " + write_json(dir / "decode.json", decode).string() + " --out " + out.string()) ==
              0);
      const CsvTable t = read_csv(out / "decode.csv");
      CHECK(t.header == std::vector<std::string>{"test_id", "rank", "candidate_id", "distance"});
      REQUIRE(t.values.rows() == 8 * 5);

      const TrainedModel m = train_model(x, y, KernelSpec::gaussian(3.0), KernelSpec::gaussian(2.0), 0.01, 0.01, 4,
                                         Provenance::supervised);
      const auto ref = decode_batch(m, xt, cand, 5,
                                    variant == "reduced" ? DecodeVariant::reduced : DecodeVariant::fullrank);
      for (Index r = 0; r < t.values.rows(); ++r) {
        const auto& res = ref[static_cast<std::size_t>(t.values(r, 0))];
        const auto pos = static_cast<std::size_t>(t.values(r, 1) - 1);
        CHECK(t.values(r, 2) == static_cast<double>(res.ranked_ids[pos]));
        CHECK(std::abs(t.values(r, 3) - res.distances[pos]) <= 1e-10);
      }
    }
  }

  TEST_CASE("overrides are folded into the saved config") {
    const fs::path dir = scratch("overrides");
    write_matrix(dir / "x.csv", testing::random_matrix(20, 2, 5));
    write_matrix(dir / "y.csv", testing::random_matrix(20, 2, 6));
    const json train = {{"seed", 3}, {"data", {{"x", "x.csv"}, {"y", "y.csv"}}}, {"lambda", 0.01}, {"p", 1}};
    REQUIRE(run("train --config " + write_json(dir / "train.json", train).string() +
                " --lambda 0.5 --p 2 --kernel gaussian:4 --sigma2 3 --seed 11 --out " + (dir / "t").string()) == 0);
    const json saved = json::parse(slurp(dir / "t" / "config.json"));
    CHECK(saved.at("lambda") == 0.5);
    CHECK(saved.at("lambda2") == 0.5);
    CHECK(saved.at("p") == 2);
    CHECK(saved.at("input_kernel") == "gaussian:4");
    CHECK(saved.at("output_kernel") == "gaussian:3");
    CHECK(saved.at("seed") == 11);
    CHECK_FALSE(saved.contains("overrides"));
    check_rerun("train", dir / "t");
  }

  TEST_CASE("every experiment command reproduces from its saved config") {
    const fs::path dir = scratch("repro");
    const json problem = {{"d", 12},
                          {"n_train", 60},
                          {"n_test", 40},
                          {"H", {{"mode", "spectral"}, {"profile", {{"kind", "finite_rank"}, {"rank", 2}}}}},
                          {"E", {{"kind", "polynomial"}, {"rate", 0.1}, {"scale", 0.5}}}};
    const json diag = {{"seed", 2}, {"problem", problem}, {"exponents", {{"r_c", 1}, {"r_h", 1}, {"r_e", 1}}}};
    REQUIRE(run("diagnose --config " + write_json(dir / "diag.json", diag).string() + " --out " +
                (dir / "diag").string()) == 0);
    check_rerun("diagnose", dir / "diag");

    const json synth = {{"seed", 2},
                        {"seeds", {2, 3}},
                        {"problem", problem},
                        {"grid", {{"lambdas", {{"lo_exp", -4}, {"hi_exp", 0}, {"count", 3}}}, {"ranks", {1, 2, 4}}}},
                        {"cv", {{"folds", 3}}}};
    REQUIRE(run("synth --config " + write_json(dir / "synth.json", synth).string() + " --threads 2 --out " +
                (dir / "synth").string()) == 0);
    for (const char* f : {"mse_vs_p.csv", "lambda2_vs_p.csv", "setup_spectra.csv", "report.csv"}) {
      const std::string text = slurp(dir / "synth" / f);
      CHECK(std::count(text.begin(), text.end(), '\n') > 1);
    }
    check_rerun("synth", dir / "synth");

    const Matrix x = testing::random_matrix(45, 3, 7);
    Matrix ml(45, 7);
    ml << x, testing::random_binary(45, 4, 8, 0.4);
    write_matrix(dir / "ml.csv", ml);
    const json eval = {{"seed", 4},
                       {"data", {{"multilabel", "ml.csv"}, {"labels", 4}}},
                       {"input_kernel", "gaussian:2"},
                       {"grid", {{"lambdas", {1e-3, 1e-1}}, {"ranks", {1, 4}}}},
                       {"cv", {{"folds", 3}, {"inner_folds", 2}}}};
    REQUIRE(run("eval --config " + write_json(dir / "eval.json", eval).string() + " --out " +
                (dir / "eval").string()) == 0);
    CHECK(read_csv(dir / "eval" / "folds.csv").values.rows() == 3);
    check_rerun("eval", dir / "eval");
  }

  TEST_CASE("bench-decode writes one row per case and variant") {
    const fs::path dir = scratch("bench");
    const json bench = {{"seed", 1},
                        {"cases", {{{"n", 40}, {"n_candidates", 60}, {"p", 4}}, {{"n", 40}, {"n_candidates", 120}, {"p", 4}}}},
                        {"repetitions", 3},
                        {"test_points", 4}};
    REQUIRE(run("bench-decode --config " + write_json(dir / "b.json", bench).string() + " --out " +
                (dir / "b").string()) == 0);
    std::istringstream lines(slurp(dir / "b" / "timings.csv"));
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "variant,n,n_candidates,p,test_points,repetitions,median_ns_per_point");
    CHECK(rows[1].rfind("reduced,40,60,4,", 0) == 0);
    CHECK(rows[2].rfind("fullrank,40,60,4,", 0) == 0);
  }
}
