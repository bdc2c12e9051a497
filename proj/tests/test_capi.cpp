// Exercises the shared library through its C header only.
#include "rriokr/rriokr.h"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::vector<double> random_values(std::size_t count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(count);
  for (double& x : v) x = g(rng);
  return v;
}

struct ModelGuard {
  rriokr_model* m = nullptr;
  ~ModelGuard() { rriokr_model_free(m); }
};

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("version and thread control") {
    CHECK(std::string(rriokr_version()).size() > 0);
    CHECK(rriokr_set_threads(2) == RRIOKR_OK);
    CHECK(rriokr_set_threads(0) == RRIOKR_USAGE);
    CHECK(std::string(rriokr_last_error()).find("threads") != std::string::npos);
    CHECK(rriokr_set_threads(1) == RRIOKR_OK);
    CHECK(std::string(rriokr_last_error()).empty());
  }

  TEST_CASE("train, inspect, save, load and decode") {
    const int64_t n = 40, dx = 3, dy = 4, m = 5, k = 3;
    const auto x = random_values(n * dx, 1);
    const auto y = random_values(n * dy, 2);
    const auto xt = random_values(m * dx, 3);
    ModelGuard model;
    REQUIRE(rriokr_model_train(x.data(), n, dx, y.data(), dy, "gaussian:2", "linear", 0.01, 0.02, 3,
                               RRIOKR_SUPERVISED, &model.m) == RRIOKR_OK);
    rriokr_model_info info{};
    REQUIRE(rriokr_model_info_get(model.m, &info) == RRIOKR_OK);
    CHECK(info.n_train == n);
    CHECK(info.input_dim == dx);
    CHECK(info.output_dim == dy);
    CHECK(info.rank == 3);
    CHECK(info.requested_rank == 3);
    CHECK(info.lambda1 == 0.01);
    CHECK(info.lambda2 == 0.02);

    const fs::path path = fs::temp_directory_path() / "rriokr_capi_model.bin";
    REQUIRE(rriokr_model_save(model.m, path.c_str()) == RRIOKR_OK);
    ModelGuard loaded;
    REQUIRE(rriokr_model_load(path.c_str(), &loaded.m) == RRIOKR_OK);

    std::vector<int64_t> ids_a(m * k), ids_b(m * k);
    std::vector<double> d_a(m * k), d_b(m * k);
    REQUIRE(rriokr_model_decode(model.m, xt.data(), m, nullptr, 0, k, RRIOKR_REDUCED, ids_a.data(),
                                d_a.data()) == RRIOKR_OK);
    REQUIRE(rriokr_model_decode(loaded.m, xt.data(), m, nullptr, 0, k, RRIOKR_REDUCED, ids_b.data(),
                                d_b.data()) == RRIOKR_OK);
    CHECK(ids_a == ids_b);
    for (std::size_t i = 0; i < d_a.size(); ++i) CHECK(std::abs(d_a[i] - d_b[i]) <= 1e-10);
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 1; j < k; ++j) CHECK(d_a[i * k + j] >= d_a[i * k + j - 1]);
  }

  TEST_CASE("decode pads beyond the candidate count") {
    const int64_t n = 10, d = 2;
    const auto x = random_values(n * d, 4);
    const auto y = random_values(n * d, 5);
    const auto cand = random_values(2 * d, 6);
    ModelGuard model;
    REQUIRE(rriokr_model_train(x.data(), n, d, y.data(), d, "linear", "linear", 0.1, 0.1, 2, RRIOKR_UNSUPERVISED,
                               &model.m) == RRIOKR_OK);
    std::vector<int64_t> ids(4);
    std::vector<double> dist(4);
    REQUIRE(rriokr_model_decode(model.m, x.data(), 1, cand.data(), 2, 4, RRIOKR_FULLRANK, ids.data(),
                                dist.data()) == RRIOKR_OK);
    CHECK(ids[0] >= 0);
    CHECK(ids[1] >= 0);
    CHECK(ids[2] == -1);
    CHECK(ids[3] == -1);
    CHECK(std::isnan(dist[2]));
  }

  TEST_CASE("error statuses") {
    const auto x = random_values(20, 7);
    rriokr_model* out = reinterpret_cast<rriokr_model*>(0x1);
    CHECK(rriokr_model_train(x.data(), 10, 2, x.data(), 2, "cubic", "linear", 0.1, 0.1, 1, RRIOKR_SUPERVISED,
                             &out) == RRIOKR_USAGE);
    CHECK(out == nullptr);
    CHECK(std::string(rriokr_last_error()).find("cubic") != std::string::npos);
    CHECK(rriokr_model_train(x.data(), 10, 2, x.data(), 2, "linear", "linear", -1.0, 0.1, 1, RRIOKR_SUPERVISED,
                             &out) == RRIOKR_USAGE);
    CHECK(rriokr_model_train(nullptr, 10, 2, x.data(), 2, "linear", "linear", 0.1, 0.1, 1, RRIOKR_SUPERVISED,
                             &out) == RRIOKR_USAGE);
    CHECK(rriokr_model_load("/nonexistent/model.bin", &out) == RRIOKR_DATA);
    CHECK(rriokr_model_info_get(nullptr, nullptr) == RRIOKR_USAGE);
    rriokr_model_free(nullptr);
  }

  TEST_CASE("run_command statuses") {
    const fs::path out = fs::temp_directory_path() / "rriokr_capi_cmd";
    CHECK(rriokr_run_command("diagnose", "{not json", out.c_str()) == RRIOKR_USAGE);
    CHECK(rriokr_run_command("frobnicate", "{\"seed\": 1}", out.c_str()) == RRIOKR_USAGE);
    CHECK(rriokr_run_command("diagnose", "{\"problem\": {\"d\": 5}}", out.c_str()) == RRIOKR_USAGE);
    CHECK(rriokr_run_command("train", "{\"seed\": 1, \"data\": {\"x\": \"/nonexistent.csv\", \"y\": \"/n.csv\"}, "
                                      "\"lambda\": 1, \"p\": 1}",
                             out.c_str()) == RRIOKR_DATA);
    CHECK(rriokr_run_command("diagnose", "{\"seed\": 1, \"problem\": {\"d\": 20}}", out.c_str()) == RRIOKR_OK);
    CHECK(fs::exists(out / "config.json"));
    CHECK(fs::exists(out / "slopes.csv"));
  }
}
