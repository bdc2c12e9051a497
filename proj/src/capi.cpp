#include "rriokr/rriokr.h"

#include "commands.hpp"
#include "rriokr/io.hpp"

#include <cmath>
#include <limits>
#include <new>
#include <string>

struct rriokr_model {
  rriokr::TrainedModel model;
};

namespace {

thread_local std::string last_error;

rriokr_status fail_with(rriokr_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
rriokr_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return RRIOKR_OK;
  } catch (const rriokr::Error& e) {
    return fail_with(static_cast<rriokr_status>(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail_with(RRIOKR_USAGE, std::string("config: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(RRIOKR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(RRIOKR_INTERNAL, e.what());
  } catch (...) {
    return fail_with(RRIOKR_INTERNAL, "unknown error");
  }
}

rriokr::Matrix from_row_major(const double* data, int64_t rows, int64_t cols) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(data, rows, cols);
}

}  // namespace

extern "C" {

const char* rriokr_version(void) { return "0.1.0"; }

const char* rriokr_last_error(void) { return last_error.c_str(); }

rriokr_status rriokr_set_threads(int threads) {
  return guarded([&] {
    rriokr::require(threads >= 1, rriokr::ErrorKind::usage, "threads must be at least 1");
    rriokr::set_thread_count(threads);
  });
}

rriokr_status rriokr_model_train(const double* x, int64_t n, int64_t dx, const double* y,
                                 int64_t dy, const char* input_kernel, const char* output_kernel,
                                 double lambda1, double lambda2, int64_t p,
                                 rriokr_provenance provenance, rriokr_model** out) {
  return guarded([&] {
    using rriokr::ErrorKind;
    rriokr::require(out != nullptr && x != nullptr && y != nullptr && input_kernel != nullptr &&
                        output_kernel != nullptr,
                    ErrorKind::usage, "null argument");
    *out = nullptr;
    rriokr::require(n >= 1 && dx >= 1 && dy >= 1, ErrorKind::usage, "empty training data");
    rriokr::require(provenance == RRIOKR_SUPERVISED || provenance == RRIOKR_UNSUPERVISED,
                    ErrorKind::usage, "unknown provenance");
    auto* handle = new rriokr_model{rriokr::train_model(
        from_row_major(x, n, dx), from_row_major(y, n, dy),
        rriokr::KernelSpec::parse(input_kernel), rriokr::KernelSpec::parse(output_kernel), lambda1,
        lambda2, p,
        provenance == RRIOKR_SUPERVISED ? rriokr::Provenance::supervised
                                        : rriokr::Provenance::unsupervised)};
    *out = handle;
  });
}

rriokr_status rriokr_model_load(const char* path, rriokr_model** out) {
  return guarded([&] {
    rriokr::require(out != nullptr && path != nullptr, rriokr::ErrorKind::usage, "null argument");
    *out = nullptr;
    *out = new rriokr_model{rriokr::load_model(path)};
  });
}

rriokr_status rriokr_model_save(const rriokr_model* model, const char* path) {
  return guarded([&] {
    rriokr::require(model != nullptr && path != nullptr, rriokr::ErrorKind::usage, "null argument");
    rriokr::save_model(model->model, path);
  });
}

void rriokr_model_free(rriokr_model* model) { delete model; }

rriokr_status rriokr_model_info_get(const rriokr_model* model, rriokr_model_info* info) {
  return guarded([&] {
    rriokr::require(model != nullptr && info != nullptr, rriokr::ErrorKind::usage, "null argument");
    const rriokr::TrainedModel& m = model->model;
    info->n_train = m.x_train.rows();
    info->input_dim = m.x_train.cols();
    info->output_dim = m.y_train.cols();
    info->rank = m.projection.rank();
    info->requested_rank = m.projection.requested_rank;
    info->lambda1 = m.projection.lambda1;
    info->lambda2 = m.model.lambda();
  });
}

rriokr_status rriokr_model_decode(const rriokr_model* model, const double* x_test, int64_t m,
                                  const double* candidates, int64_t n_c, int64_t k,
                                  rriokr_variant variant, int64_t* ids, double* distances) {
  return guarded([&] {
    using rriokr::ErrorKind;
    rriokr::require(model != nullptr && x_test != nullptr && ids != nullptr && distances != nullptr,
                    ErrorKind::usage, "null argument");
    rriokr::require(m >= 1 && k >= 1, ErrorKind::usage, "m and k must be positive");
    rriokr::require(variant == RRIOKR_REDUCED || variant == RRIOKR_FULLRANK, ErrorKind::usage,
                    "unknown variant");
    const rriokr::TrainedModel& tm = model->model;
    const rriokr::Matrix x = from_row_major(x_test, m, tm.x_train.cols());
    const rriokr::Matrix cand =
        candidates ? from_row_major(candidates, n_c, tm.y_train.cols()) : tm.y_train;
    const auto results =
        rriokr::decode_batch(tm, x, cand, k,
                             variant == RRIOKR_REDUCED ? rriokr::DecodeVariant::reduced
                                                       : rriokr::DecodeVariant::fullrank);
    for (int64_t i = 0; i < m; ++i) {
      const auto& r = results[static_cast<std::size_t>(i)];
      for (int64_t j = 0; j < k; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const bool present = js < r.ranked_ids.size();
        ids[i * k + j] = present ? r.ranked_ids[js] : -1;
        distances[i * k + j] =
            present ? r.distances[js] : std::numeric_limits<double>::quiet_NaN();
      }
    }
  });
}

rriokr_status rriokr_run_command(const char* command, const char* config_json,
                                 const char* out_dir) {
  return guarded([&] {
    rriokr::require(command != nullptr && config_json != nullptr && out_dir != nullptr,
                    rriokr::ErrorKind::usage, "null argument");
    nlohmann::json cfg;
    try {
      cfg = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      rriokr::fail(rriokr::ErrorKind::usage, std::string("config is not valid JSON: ") + e.what());
    }
    rriokr::run_command(command, cfg, out_dir);
  });
}

}  // extern "C"
