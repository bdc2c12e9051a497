#include "rriokr/io.hpp"

#include "parallel.hpp"

#include <cmath>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace rriokr {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "model bundles assume little-endian");

constexpr char kMagic[8] = {'R', 'R', 'I', 'O', 'K', 'R', '0', '1'};

std::string at_line(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_index(std::string_view s, Index& out) {
  if (s.empty()) return false;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  out = static_cast<Index>(v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

bool blank(std::string_view s) { return trim(s).empty(); }

}  // namespace

CsvTable read_csv(const fs::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  CsvTable out;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const auto fields = split(lines[i], ',');
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size() && numeric; ++j) numeric = parse_double(fields[j], row[j]);
    if (!numeric) {
      if (rows.empty() && out.header.empty()) {
        for (auto f : fields) out.header.emplace_back(f);
        width = fields.size();
        continue;
      }
      fail(ErrorKind::data, at_line(path, i + 1) + "non-numeric field");
    }
    for (double v : row)
      if (!std::isfinite(v)) fail(ErrorKind::data, at_line(path, i + 1) + "non-finite value");
    if (width == 0) width = row.size();
    if (row.size() != width)
      fail(ErrorKind::data, at_line(path, i + 1) + "expected " + std::to_string(width) +
                                " fields, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::data, path.string() + ": no data rows");
  out.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      out.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return out;
}

Matrix load_dense_csv(const fs::path& path) { return read_csv(path).values; }

MultilabelDataset load_multilabel(const fs::path& path, Index n_labels, Index n_features) {
  require(n_labels >= 0 && n_features >= 0, ErrorKind::usage,
          "load_multilabel: label and feature counts must be nonnegative");
  const std::vector<std::string> lines = read_lines(path);
  std::size_t first = 0;
  while (first < lines.size() && blank(lines[first])) ++first;
  if (first == lines.size()) fail(ErrorKind::data, path.string() + ": no data rows");
  MultilabelDataset out;

  if (lines[first].find(':') == std::string::npos) {
    CsvTable t = read_csv(path);
    require(n_labels >= 1, ErrorKind::usage, "load_multilabel: dense layout needs the label count");
    const Index d = t.values.cols() - n_labels;
    if (d < 1) fail(ErrorKind::data, path.string() + ": fewer columns than labels + 1");
    out.x = t.values.leftCols(d);
    out.y = t.values.rightCols(n_labels);
    for (Index i = 0; i < out.y.rows(); ++i)
      for (Index j = 0; j < n_labels; ++j)
        if (out.y(i, j) != 0.0 && out.y(i, j) != 1.0)
          fail(ErrorKind::data, path.string() + ": row " + std::to_string(i + 1) +
                                    ": non-binary label in column " + std::to_string(d + j + 1));
    for (Index j = 0; j < n_labels; ++j)
      out.label_names.push_back(t.header.empty() ? "label" + std::to_string(j)
                                                 : t.header[static_cast<std::size_t>(d + j)]);
    return out;
  }

  struct Row {
    std::vector<Index> labels;
    std::vector<std::pair<Index, double>> features;
  };
  std::vector<Row> rows;
  Index max_label = -1;
  Index max_feature = 0;
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    std::string_view line(lines[i]);
    while (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    Row row;
    const std::size_t space = line.find_first_of(" \t");
    const std::string_view label_part = line.substr(0, space);
    if (!label_part.empty()) {
      for (auto tok : split(label_part, ',')) {
        Index l = 0;
        if (!parse_index(tok, l) || l < 0)
          fail(ErrorKind::data, at_line(path, i + 1) + "bad label id '" + std::string(tok) + "'");
        row.labels.push_back(l);
        max_label = std::max(max_label, l);
      }
    }
    std::string_view rest = space == std::string_view::npos ? "" : line.substr(space);
    std::istringstream tokens{std::string(rest)};
    for (std::string tok; tokens >> tok;) {
      const std::size_t colon = tok.find(':');
      Index f = 0;
      double v = 0.0;
      if (colon == std::string::npos || !parse_index(std::string_view(tok).substr(0, colon), f) ||
          f < 1 || !parse_double(std::string_view(tok).substr(colon + 1), v))
        fail(ErrorKind::data, at_line(path, i + 1) + "bad feature token '" + tok + "'");
      row.features.emplace_back(f - 1, v);
      max_feature = std::max(max_feature, f);
    }
    rows.push_back(std::move(row));
  }
  const Index labels = n_labels > 0 ? n_labels : max_label + 1;
  const Index features = n_features > 0 ? n_features : max_feature;
  if (max_label >= labels)
    fail(ErrorKind::data, path.string() + ": label id " + std::to_string(max_label) +
                              " exceeds the label count");
  if (max_feature > features)
    fail(ErrorKind::data, path.string() + ": feature index exceeds the feature count");
  require(labels >= 1 && features >= 1, ErrorKind::data, "load_multilabel: empty label or feature space");
  const auto n = static_cast<Index>(rows.size());
  out.x = Matrix::Zero(n, features);
  out.y = Matrix::Zero(n, labels);
  for (Index i = 0; i < n; ++i) {
    for (Index l : rows[static_cast<std::size_t>(i)].labels) out.y(i, l) = 1.0;
    for (auto [f, v] : rows[static_cast<std::size_t>(i)].features) out.x(i, f) = v;
  }
  for (Index j = 0; j < labels; ++j) out.label_names.push_back("label" + std::to_string(j));
  return out;
}

UspsHalves load_usps_halves(const fs::path& path) {
  const Matrix m = load_dense_csv(path);
  if (m.cols() != 256 && m.cols() != 257)
    fail(ErrorKind::data, path.string() + ": expected 256 pixel columns (optionally after a class "
                                          "column), found " + std::to_string(m.cols()));
  const Matrix pixels = m.rightCols(256);
  return UspsHalves{pixels.leftCols(128), pixels.rightCols(128)};
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::data, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorKind::data, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::data, "cannot move " + tmp.string() + " into place: " + ec.message());
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

void CsvWriter::separator() {
  if (row_open_) text_ += ',';
  row_open_ = true;
}

CsvWriter& CsvWriter::cell(double v) {
  separator();
  text_ += format_double(v);
  return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t v) {
  separator();
  text_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  separator();
  text_ += v;
  return *this;
}

void CsvWriter::end_row() {
  text_ += '\n';
  row_open_ = false;
}

// ---------------------------------------------------------------- bundles

TrainedModel train_model(const Matrix& x, const Matrix& y, const KernelSpec& input_kernel,
                         const KernelSpec& output_kernel, double lambda1, double lambda2, Index p,
                         Provenance provenance) {
  require(x.rows() == y.rows(), ErrorKind::data, "train: input and output counts differ");
  require(x.rows() >= 1, ErrorKind::data, "train: no training rows");
  require(p >= 1, ErrorKind::usage, "train: p must be at least 1");
  require(provenance != Provenance::oracle, ErrorKind::usage,
          "train: oracle projections need a known signal covariance");
  const GramMatrix k_x = gram(input_kernel, x);
  const Matrix k_z = gram(output_kernel, y).entries;
  TrainedModel out;
  out.input_kernel = input_kernel;
  out.output_kernel = output_kernel;
  const RidgeModel first = fit_krr(k_x, lambda1);
  out.projection = provenance == Provenance::supervised
                       ? fit_supervised_projection(first, k_x.entries, k_z, p)
                       : fit_unsupervised_projection(k_z, p);
  out.model = lambda2 == lambda1 ? first : fit_krr(k_x, lambda2);
  out.x_train = x;
  out.y_train = y;
  return out;
}

void save_model(const TrainedModel& m, const fs::path& path) {
  const SubspaceProjection& p = m.projection;
  const std::vector<std::pair<std::string, const Matrix*>> blocks = {
      {"W", &m.model.ridge_inverse()},
      {"beta", &p.beta},
      {"output_map", &p.output_map},
      {"UY", &p.projected_train_outputs},
      {"x_train", &m.x_train},
      {"y_train", &m.y_train},
  };
  const Matrix eig = p.kept_eigenvalues;
  nlohmann::json meta;
  meta["format"] = 1;
  meta["input_kernel"] = m.input_kernel.to_string();
  meta["output_kernel"] = m.output_kernel.to_string();
  meta["lambda2"] = m.model.lambda();
  meta["lambda1"] = p.lambda1;
  meta["provenance"] = to_string(p.provenance);
  meta["requested_rank"] = p.requested_rank;
  meta["rank"] = p.rank();
  meta["n"] = m.model.size();
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, mat] : blocks) list.push_back({{"name", name}, {"rows", mat->rows()}, {"cols", mat->cols()}});
  list.push_back({{"name", "kept_eigenvalues"}, {"rows", eig.rows()}, {"cols", eig.cols()}});
  meta["matrices"] = list;

  const std::string header = meta.dump();
  std::string bytes(kMagic, sizeof kMagic);
  const std::uint64_t len = header.size();
  bytes.append(reinterpret_cast<const char*>(&len), sizeof len);
  bytes += header;
  const auto append = [&bytes](const Matrix& mat) {
    bytes.append(reinterpret_cast<const char*>(mat.data()),
                 static_cast<std::size_t>(mat.size()) * sizeof(double));
  };
  for (const auto& block : blocks) append(*block.second);
  append(eig);
  write_file_atomic(path, bytes);
}

TrainedModel load_model(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open model " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string bad = path.string() + ": not a model bundle";
  if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    fail(ErrorKind::data, bad);
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + sizeof kMagic, sizeof len);
  std::size_t offset = sizeof kMagic + sizeof len;
  if (len > bytes.size() - offset) fail(ErrorKind::data, bad + " (truncated metadata)");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.substr(offset, len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, bad + " (" + e.what() + ")");
  }
  offset += len;

  std::map<std::string, Matrix> mats;
  try {
    for (const auto& entry : meta.at("matrices")) {
      const Index rows = entry.at("rows").get<Index>();
      const Index cols = entry.at("cols").get<Index>();
      const std::size_t size = static_cast<std::size_t>(rows * cols) * sizeof(double);
      if (rows < 0 || cols < 0 || size > bytes.size() - offset)
        fail(ErrorKind::data, bad + " (truncated matrix data)");
      Matrix mat(rows, cols);
      std::memcpy(mat.data(), bytes.data() + offset, size);
      offset += size;
      mats[entry.at("name").get<std::string>()] = std::move(mat);
    }
    TrainedModel out;
    out.input_kernel = KernelSpec::parse(meta.at("input_kernel").get<std::string>());
    out.output_kernel = KernelSpec::parse(meta.at("output_kernel").get<std::string>());
    out.model = RidgeModel(mats.at("W"), meta.at("lambda2").get<double>(), out.input_kernel);
    SubspaceProjection& p = out.projection;
    p.provenance = parse_provenance(meta.at("provenance").get<std::string>());
    p.lambda1 = meta.at("lambda1").get<double>();
    p.requested_rank = meta.at("requested_rank").get<Index>();
    p.beta = mats.at("beta");
    p.output_map = mats.at("output_map");
    p.projected_train_outputs = mats.at("UY");
    p.kept_eigenvalues = mats.at("kept_eigenvalues").col(0);
    out.x_train = mats.at("x_train");
    out.y_train = mats.at("y_train");
    if (p.train_size() != out.model.size() || out.x_train.rows() != out.model.size() ||
        out.y_train.rows() != out.model.size())
      fail(ErrorKind::data, bad + " (inconsistent shapes)");
    return out;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, bad + " (" + e.what() + ")");
  } catch (const std::out_of_range&) {
    fail(ErrorKind::data, bad + " (missing matrix)");
  }
}

std::vector<DecodeResult> decode_batch(const TrainedModel& m, const Matrix& x_test,
                                       const Matrix& candidates, Index k, DecodeVariant variant) {
  require(x_test.cols() == m.x_train.cols(), ErrorKind::data,
          "decode: test inputs have a different dimension than the training inputs");
  require(candidates.cols() == m.y_train.cols(), ErrorKind::data,
          "decode: candidates have a different dimension than the training outputs");
  const CandidateSet set = CandidateSet::build(m.output_kernel, candidates);
  const Matrix k_z_tr_c = gram(m.output_kernel, m.y_train, set.candidates).entries;
  const Matrix k_x = gram(m.input_kernel, m.x_train, x_test).entries;
  std::vector<DecodeResult> out(static_cast<std::size_t>(x_test.rows()));
  const auto run = [&](const auto& decoder) {
    detail::parallel_for(x_test.rows(), [&](Index j) {
      out[static_cast<std::size_t>(j)] = decoder.decode(k_x.col(j), k);
    });
  };
  if (variant == DecodeVariant::reduced) {
    run(ReducedDecoder(m.model, m.projection, projected_coordinates(m.projection, k_z_tr_c), set));
  } else {
    run(FullRankDecoder(m.model, k_z_tr_c, set));
  }
  return out;
}

}  // namespace rriokr
