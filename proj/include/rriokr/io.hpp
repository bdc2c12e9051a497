#pragma once

#include "rriokr/common.hpp"
#include "rriokr/kernels.hpp"
#include "rriokr/regression.hpp"
#include "rriokr/structpred.hpp"
#include "rriokr/subspace.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rriokr {

// Numeric CSV, comma separated. A first line with any non-numeric field is
// taken as a header. Blank lines are skipped; ragged or malformed rows are
// data errors naming the line.
struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

CsvTable read_csv(const std::filesystem::path& path);
Matrix load_dense_csv(const std::filesystem::path& path);

struct MultilabelDataset {
  Matrix x;
  Matrix y;  // 0/1
  std::vector<std::string> label_names;
};

// Two layouts:
//   dense:  CSV whose last `n_labels` columns are 0/1 labels;
//   sparse: one example per line, "l1,l2,... i:v i:v ..." with 0-based
//           label ids and 1-based feature indices (an empty label list is a
//           line starting with a space). Chosen when the first data line
//           contains ':'. n_labels and n_features of 0 are inferred.
MultilabelDataset load_multilabel(const std::filesystem::path& path, Index n_labels,
                                  Index n_features = 0);

// 16×16 digits as dense CSV rows of 256 pixels (row-major), optionally
// preceded by a class column. X is the top 8 pixel rows, Y the bottom 8.
struct UspsHalves {
  Matrix top;
  Matrix bottom;
};
UspsHalves load_usps_halves(const std::filesystem::path& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Whole file written to a sibling temporary and renamed into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// CSV text builder; every cell goes through format_double or verbatim text.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(const std::string& v);
  void end_row();
  const std::string& text() const { return text_; }
  void write(const std::filesystem::path& path) const { write_file_atomic(path, text_); }

 private:
  void separator();
  std::string text_;
  bool row_open_ = false;
};

// Everything decoding needs: the ridge model (at lambda_2),
// the projection (fitted at lambda_1) and the training pairs for kernel
// columns against new inputs and candidates.
struct TrainedModel {
  KernelSpec input_kernel = KernelSpec::linear();
  KernelSpec output_kernel = KernelSpec::linear();
  RidgeModel model;
  SubspaceProjection projection;
  Matrix x_train;
  Matrix y_train;
};

TrainedModel train_model(const Matrix& x, const Matrix& y, const KernelSpec& input_kernel,
                         const KernelSpec& output_kernel, double lambda1, double lambda2, Index p,
                         Provenance provenance);

// Binary bundle: 8-byte magic, u64 metadata length, JSON metadata, then the
// matrices named in the metadata as little-endian column-major doubles.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

// Decodes every row of x_test against `candidates` (rows), top-k each.
std::vector<DecodeResult> decode_batch(const TrainedModel& model, const Matrix& x_test,
                                       const Matrix& candidates, Index k, DecodeVariant variant);

}  // namespace rriokr
