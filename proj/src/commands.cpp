#include "commands.hpp"

#include "rriokr/evalbench.hpp"
#include "rriokr/io.hpp"
#include "rriokr/spectral.hpp"
#include "rriokr/structpred.hpp"
#include "rriokr/synthgen.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace rriokr {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void progress(const std::string& command, const std::string& message) {
  std::cerr << "[" << command << "] " << message << '\n';
}

std::uint64_t config_seed(const json& cfg) {
  if (!cfg.contains("seed") || !cfg.at("seed").is_number_unsigned())
    fail(ErrorKind::usage, "config: 'seed' (unsigned integer) is required");
  return cfg.at("seed").get<std::uint64_t>();
}

fs::path resolve_path(const json& cfg, const std::string& text) {
  const fs::path p(text);
  if (p.is_absolute() || !cfg.contains("base_dir")) return p;
  return fs::path(cfg.at("base_dir").get<std::string>()) / p;
}

// ---------------------------------------------------------- config parsing

SpectralProfile parse_profile(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "polynomial")
    return SpectralProfile::polynomial(j.at("rate").get<double>(), value_or(j, "scale", 1.0));
  if (kind == "finite_rank")
    return SpectralProfile::finite_rank(j.at("rank").get<Index>(), value_or(j, "value", 1.0));
  if (kind == "exponential")
    return SpectralProfile::exponential(j.at("rate").get<double>(), value_or(j, "scale", 1.0));
  if (kind == "explicit") return SpectralProfile::explicit_list(j.at("values").get<std::vector<double>>());
  fail(ErrorKind::usage, "unknown spectral profile kind '" + kind + "'");
}

SyntheticProblemSpec parse_problem(const json& j, std::uint64_t seed) {
  SyntheticProblemSpec s;
  s.d = j.at("d").get<Index>();
  s.n_train = value_or<Index>(j, "n_train", 0);
  s.n_val = value_or<Index>(j, "n_val", 0);
  s.n_test = value_or<Index>(j, "n_test", 0);
  require(s.d >= 1 && s.n_train >= 0 && s.n_val >= 0 && s.n_test >= 0, ErrorKind::usage,
          "problem: dimensions must be nonnegative and d positive");
  if (j.contains("C")) s.c_profile = parse_profile(j.at("C"));
  if (j.contains("E")) s.e_profile = parse_profile(j.at("E"));
  if (j.contains("H")) {
    const json& h = j.at("H");
    const std::string mode = h.at("mode").get<std::string>();
    if (mode == "gaussian_h0") {
      s.h_mode = HMode::gaussian_h0;
    } else if (mode == "powered") {
      s.h_mode = HMode::powered;
      s.h_gamma = h.at("gamma").get<double>();
      require(s.h_gamma >= 0.0, ErrorKind::usage, "problem: H gamma must be >= 0");
    } else if (mode == "diagonal") {
      s.h_mode = HMode::diagonal;
      s.h_rate = h.at("rate").get<double>();
    } else if (mode == "spectral") {
      s.h_mode = HMode::spectral;
      s.h_profile = parse_profile(h.at("profile"));
    } else {
      fail(ErrorKind::usage, "unknown H mode '" + mode + "'");
    }
    s.h_unit_norm = value_or(h, "unit_norm", false);
    s.h_scale = value_or(h, "scale", 1.0);
  }
  const std::string law = value_or<std::string>(j, "x_law", "standard_normal");
  if (law == "standard_normal")
    s.x_law = XLaw::standard_normal;
  else if (law == "normal_with_cov_c")
    s.x_law = XLaw::normal_with_cov_c;
  else
    fail(ErrorKind::usage, "unknown x_law '" + law + "'");
  s.random_bases = value_or(j, "random_bases", true);
  s.seed = seed;
  return s;
}

GridSpec parse_grid(const json& cfg) {
  GridSpec g;
  if (!cfg.contains("grid")) return g;
  const json& j = cfg.at("grid");
  if (j.contains("lambdas")) {
    const json& l = j.at("lambdas");
    if (l.is_array())
      g.lambdas = l.get<std::vector<double>>();
    else
      g.lambdas = log_lambda_grid(l.at("lo_exp").get<double>(), l.at("hi_exp").get<double>(),
                                  l.at("count").get<int>());
  }
  if (j.contains("ranks")) {
    const json& r = j.at("ranks");
    if (r.is_array())
      g.ranks = r.get<std::vector<Index>>();
    else
      g.ranks = power_of_two_ranks(r.at("max").get<Index>());
  }
  return g;
}

CvPlan parse_plan(const json& cfg, std::uint64_t seed, Index default_inner) {
  CvPlan p;
  p.inner_folds = default_inner;
  p.seed = seed;
  if (!cfg.contains("cv")) return p;
  const json& j = cfg.at("cv");
  p.folds = value_or(j, "folds", p.folds);
  p.inner_folds = value_or(j, "inner_folds", p.inner_folds);
  p.repeats = value_or(j, "repeats", p.repeats);
  p.holdout_fraction = value_or(j, "holdout_fraction", p.holdout_fraction);
  return p;
}

std::vector<Provenance> parse_provenances(const json& cfg) {
  std::vector<Provenance> out;
  if (!cfg.contains("projections"))
    return {Provenance::supervised, Provenance::unsupervised, Provenance::oracle};
  for (const auto& p : cfg.at("projections")) out.push_back(parse_provenance(p.get<std::string>()));
  return out;
}

struct Data {
  Matrix x;
  Matrix y;
};

Data load_data(const json& cfg) {
  if (!cfg.contains("data")) fail(ErrorKind::usage, "config: 'data' is required");
  const json& d = cfg.at("data");
  if (d.contains("multilabel")) {
    MultilabelDataset ml = load_multilabel(resolve_path(cfg, d.at("multilabel").get<std::string>()),
                                           value_or<Index>(d, "labels", 0),
                                           value_or<Index>(d, "features", 0));
    return Data{std::move(ml.x), std::move(ml.y)};
  }
  if (d.contains("usps")) {
    UspsHalves u = load_usps_halves(resolve_path(cfg, d.at("usps").get<std::string>()));
    return Data{std::move(u.top), std::move(u.bottom)};
  }
  Data out{load_dense_csv(resolve_path(cfg, d.at("x").get<std::string>())),
           load_dense_csv(resolve_path(cfg, d.at("y").get<std::string>()))};
  if (out.x.rows() != out.y.rows())
    fail(ErrorKind::data, "data: x and y have different row counts");
  return out;
}

// ------------------------------------------------------------- outputs

void write_report(const ExperimentReport& report, const fs::path& path) {
  CsvWriter w({"experiment_id", "seed", "n", "p", "lambda1", "lambda2", "metric", "value",
               "timing_ns"});
  for (const ReportRow& r : report.rows) {
    w.cell(r.experiment_id)
        .cell(static_cast<std::int64_t>(r.seed))
        .cell(static_cast<std::int64_t>(r.n))
        .cell(static_cast<std::int64_t>(r.p))
        .cell(r.lambda1)
        .cell(r.lambda2)
        .cell(r.metric)
        .cell(r.value)
        .cell(r.timing_ns);
    w.end_row();
  }
  w.write(path);
}

void write_config(const json& resolved, const fs::path& out_dir) {
  write_file_atomic(out_dir / "config.json", resolved.dump(2) + "\n");
}

// ------------------------------------------------------------- commands

void cmd_diagnose(const json& cfg, const fs::path& out) {
  const std::uint64_t seed = config_seed(cfg);
  if (!cfg.contains("problem")) fail(ErrorKind::usage, "diagnose: 'problem' is required");
  const SyntheticProblemSpec spec = parse_problem(cfg.at("problem"), seed);
  const SyntheticProblem problem = build_problem(spec);

  const json grid = cfg.value("t_grid", json::object());
  const double lo = value_or(grid, "lo", 1e-4);
  const double hi = value_or(grid, "hi", 1.0);
  const int count = value_or(grid, "count", 30);
  const bool relative = value_or(grid, "relative", true);
  const auto window_v = cfg.value("window", std::vector<double>{0.2, 0.8});
  require(window_v.size() == 2, ErrorKind::usage, "diagnose: window must have two entries");
  const std::pair<double, double> window{window_v[0], window_v[1]};

  const Matrix m = problem.signal_covariance();
  const double scale_m = relative ? eigvalsh(m)(0) : 1.0;
  const double scale_c = relative ? eigvalsh(problem.input_covariance)(0) : 1.0;
  require(scale_m > 0.0 && scale_c > 0.0, ErrorKind::numeric, "diagnose: zero covariance");
  const auto out_profile = source_condition_profile(m, problem.h, log_grid(lo * scale_m, hi * scale_m, count));
  const auto in_profile = source_condition_profile(problem.input_covariance, problem.h.transpose(),
                                                   log_grid(lo * scale_c, hi * scale_c, count));
  progress("diagnose", "profiles computed over " + std::to_string(count) + " points");

  const auto write_profile = [](const std::vector<ProfilePoint>& prof, const fs::path& path) {
    CsvWriter w({"t", "value"});
    for (const auto& p : prof) {
      w.cell(p.t).cell(p.value);
      w.end_row();
    }
    w.write(path);
  };
  write_profile(out_profile, out / "output_profile.csv");
  write_profile(in_profile, out / "input_profile.csv");

  const Vector spectrum = eigvalsh(m);
  std::vector<ProfilePoint> spectrum_points;
  {
    CsvWriter w({"p", "eigenvalue"});
    for (Index i = 0; i < spectrum.size(); ++i) {
      w.cell(static_cast<std::int64_t>(i + 1)).cell(spectrum(i));
      w.end_row();
      if (spectrum(i) > kRelativeCutoff * spectrum(0))
        spectrum_points.push_back({static_cast<double>(i + 1), spectrum(i)});
    }
    w.write(out / "signal_spectrum.csv");
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double expected_out = spec.h_mode == HMode::powered ? -gamma_to_beta(spec.h_gamma) : nan;
  CsvWriter w({"profile", "slope", "intercept", "r_squared", "x_min", "x_max", "points", "expected"});
  const auto fit_row = [&](const std::string& name, const std::vector<ProfilePoint>& prof,
                           double expected) {
    const SlopeFit f = fit_loglog_slope(prof, window);
    w.cell(name).cell(f.slope).cell(f.intercept).cell(f.r_squared).cell(f.t_min).cell(f.t_max);
    w.cell(static_cast<std::int64_t>(f.points)).cell(expected);
    w.end_row();
  };
  fit_row("output_source", out_profile, expected_out);
  fit_row("input_source", in_profile, nan);
  double expected_decay = nan;
  if (cfg.contains("exponents")) {
    const json& e = cfg.at("exponents");
    const AssumptionExponents ex = compute_assumption_exponents(
        e.at("r_c").get<double>(), e.at("r_h").get<double>(), e.at("r_e").get<double>());
    expected_decay = -ex.s;
    CsvWriter x({"alpha", "beta", "gamma", "s", "gamma_out_of_range"});
    x.cell(ex.alpha).cell(ex.beta).cell(ex.gamma).cell(ex.s);
    x.cell(static_cast<std::int64_t>(ex.gamma_out_of_range));
    x.end_row();
    x.write(out / "exponents.csv");
  }
  if (spectrum_points.size() >= 4) fit_row("signal_spectrum", spectrum_points, expected_decay);
  w.write(out / "slopes.csv");
}

void cmd_synth(const json& cfg, const fs::path& out) {
  const std::uint64_t seed = config_seed(cfg);
  if (!cfg.contains("problem")) fail(ErrorKind::usage, "synth: 'problem' is required");
  const auto seeds = cfg.value("seeds", std::vector<std::uint64_t>{seed});
  SyntheticExperimentConfig base;
  base.input_kernel = KernelSpec::parse(cfg.value("input_kernel", std::string("linear")));
  base.output_kernel = KernelSpec::parse(cfg.value("output_kernel", std::string("linear")));
  base.grid = parse_grid(cfg);
  base.plan = parse_plan(cfg, 0, 0);
  base.projections = parse_provenances(cfg);
  base.denoised = cfg.value("denoised", true);
  base.record_timings = cfg.value("record_timings", false);
  base.experiment_id = cfg.value("experiment_id", std::string("synth"));

  CsvWriter mse({"seed", "estimator", "p", "lambda1", "lambda2", "test_mse"});
  CsvWriter lam({"seed", "estimator", "p", "lambda2", "val_mse_vs_projected_y", "val_mse"});
  CsvWriter spectra({"seed", "p", "signal_eigenvalue", "noise_eigenvalue", "noise_along_signal"});
  CsvWriter selected({"seed", "estimator", "selected_p", "val_mse", "test_mse"});
  ExperimentReport report;
  for (std::uint64_t s : seeds) {
    SyntheticExperimentConfig c = base;
    c.problem = parse_problem(cfg.at("problem"), s);
    const SyntheticExperimentResult r = run_synthetic_experiment(c);
    progress("synth", "seed " + std::to_string(s) + ": krr test mse " + format_double(r.krr_test_mse));
    const auto seed_cell = static_cast<std::int64_t>(s);
    mse.cell(seed_cell).cell(std::string("krr")).cell(std::int64_t{0}).cell(r.lambda1).cell(r.lambda1).cell(r.krr_test_mse);
    mse.end_row();
    if (c.denoised) {
      mse.cell(seed_cell).cell(std::string("denoised")).cell(std::int64_t{0});
      mse.cell(r.denoised_lambda).cell(r.denoised_lambda).cell(r.denoised_test_mse);
      mse.end_row();
    }
    for (const EstimatorCurve& curve : r.curves) {
      const std::string name = to_string(curve.provenance);
      Index best = 0;
      for (std::size_t j = 0; j < curve.ranks.size(); ++j) {
        const auto p = static_cast<std::int64_t>(curve.ranks[j]);
        mse.cell(seed_cell).cell(name).cell(p).cell(r.lambda1).cell(curve.lambda2[j]).cell(curve.test_mse[j]);
        mse.end_row();
        lam.cell(seed_cell).cell(name).cell(p).cell(curve.lambda2[j]);
        lam.cell(curve.validation_vs_projected_y[j]).cell(curve.validation_mse[j]);
        lam.end_row();
        if (curve.ranks[j] == curve.selected_rank) best = static_cast<Index>(j);
      }
      selected.cell(seed_cell).cell(name).cell(static_cast<std::int64_t>(curve.selected_rank));
      selected.cell(curve.validation_mse[static_cast<std::size_t>(best)]);
      selected.cell(curve.test_mse[static_cast<std::size_t>(best)]);
      selected.end_row();
    }
    for (Index i = 0; i < r.signal_spectrum.size(); ++i) {
      spectra.cell(seed_cell).cell(static_cast<std::int64_t>(i + 1)).cell(r.signal_spectrum(i));
      spectra.cell(r.noise_spectrum(i)).cell(r.noise_along_signal(i));
      spectra.end_row();
    }
    report.extend(r.report);
  }
  mse.write(out / "mse_vs_p.csv");
  lam.write(out / "lambda2_vs_p.csv");
  spectra.write(out / "setup_spectra.csv");
  selected.write(out / "selected_p.csv");
  write_report(report, out / "report.csv");
}

void cmd_train(const json& cfg, const fs::path& out) {
  config_seed(cfg);
  const Data data = load_data(cfg);
  if (!cfg.contains("lambda") || !cfg.contains("p"))
    fail(ErrorKind::usage, "train: 'lambda' and 'p' are required");
  const double lambda1 = cfg.at("lambda").get<double>();
  const double lambda2 = cfg.value("lambda2", lambda1);
  require(lambda1 > 0.0 && lambda2 > 0.0, ErrorKind::usage, "train: lambda must be positive");
  const KernelSpec kx = KernelSpec::parse(cfg.value("input_kernel", std::string("linear")));
  const KernelSpec kz = KernelSpec::parse(cfg.value("output_kernel", std::string("linear")));
  const Provenance prov = parse_provenance(cfg.value("provenance", std::string("supervised")));
  const TrainedModel model =
      train_model(data.x, data.y, kx, kz, lambda1, lambda2, cfg.at("p").get<Index>(), prov);
  save_model(model, out / cfg.value("model", std::string("model.bin")));
  progress("train", "n=" + std::to_string(data.x.rows()) + " rank=" +
                        std::to_string(model.projection.rank()));

  const Matrix k_z = gram(kz, data.y).entries;
  CsvWriter w({"n", "input_dim", "output_dim", "requested_rank", "rank", "lambda1", "lambda2",
               "reconstruction_residual"});
  w.cell(static_cast<std::int64_t>(data.x.rows()))
      .cell(static_cast<std::int64_t>(data.x.cols()))
      .cell(static_cast<std::int64_t>(data.y.cols()))
      .cell(static_cast<std::int64_t>(model.projection.requested_rank))
      .cell(static_cast<std::int64_t>(model.projection.rank()))
      .cell(lambda1)
      .cell(lambda2)
      .cell(reconstruction_residual(model.projection, k_z));
  w.end_row();
  w.write(out / "train_summary.csv");
}

void cmd_decode(const json& cfg, const fs::path& out) {
  config_seed(cfg);
  if (!cfg.contains("model") || !cfg.contains("x"))
    fail(ErrorKind::usage, "decode: 'model' and 'x' are required");
  const TrainedModel model = load_model(resolve_path(cfg, cfg.at("model").get<std::string>()));
  const Matrix x = load_dense_csv(resolve_path(cfg, cfg.at("x").get<std::string>()));
  const Matrix candidates = cfg.contains("candidates")
                                ? load_dense_csv(resolve_path(cfg, cfg.at("candidates").get<std::string>()))
                                : model.y_train;
  const Index k = cfg.value("k", Index{1});
  const std::string variant = cfg.value("variant", std::string("reduced"));
  require(variant == "reduced" || variant == "fullrank", ErrorKind::usage,
          "decode: variant must be 'reduced' or 'fullrank'");
  const auto results = decode_batch(model, x, candidates, k,
                                    variant == "reduced" ? DecodeVariant::reduced : DecodeVariant::fullrank);
  CsvWriter w({"test_id", "rank", "candidate_id", "distance"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t r = 0; r < results[i].ranked_ids.size(); ++r) {
      w.cell(static_cast<std::int64_t>(i)).cell(static_cast<std::int64_t>(r + 1));
      w.cell(static_cast<std::int64_t>(results[i].ranked_ids[r])).cell(results[i].distances[r]);
      w.end_row();
    }
  }
  w.write(out / "decode.csv");
  progress("decode", std::to_string(results.size()) + " test points over " +
                         std::to_string(candidates.rows()) + " candidates");
}

void cmd_bench_decode(const json& cfg, const fs::path& out) {
  const std::uint64_t seed = config_seed(cfg);
  TimingProbeConfig probe;
  probe.seed = seed;
  probe.test_points = cfg.value("test_points", probe.test_points);
  probe.repetitions = cfg.value("repetitions", probe.repetitions);
  probe.k = cfg.value("k", probe.k);
  json cases = cfg.value("cases", json::array({{{"n", 2000}, {"n_candidates", 5000}, {"p", 16}}}));
  const auto variants =
      cfg.value("variants", std::vector<std::string>{"reduced", "fullrank"});

  // Timings are taken single-threaded.
  const int threads = thread_count();
  set_thread_count(1);
  CsvWriter w({"variant", "n", "n_candidates", "p", "test_points", "repetitions",
               "median_ns_per_point"});
  try {
    for (const json& c : cases) {
      for (const std::string& v : variants) {
        require(v == "reduced" || v == "fullrank", ErrorKind::usage,
                "bench-decode: variant must be 'reduced' or 'fullrank'");
        const TimingRow row = timing_probe(
            v == "reduced" ? DecodeVariant::reduced : DecodeVariant::fullrank, c.at("n").get<Index>(),
            c.at("n_candidates").get<Index>(), c.at("p").get<Index>(), probe);
        w.cell(v).cell(static_cast<std::int64_t>(row.n)).cell(static_cast<std::int64_t>(row.n_candidates));
        w.cell(static_cast<std::int64_t>(row.p)).cell(static_cast<std::int64_t>(row.test_points));
        w.cell(static_cast<std::int64_t>(row.repetitions)).cell(row.median_ns_per_point);
        w.end_row();
        progress("bench-decode", v + " n=" + std::to_string(row.n) + " n_c=" +
                                     std::to_string(row.n_candidates) + " p=" + std::to_string(row.p) +
                                     ": " + format_double(row.median_ns_per_point) + " ns");
      }
    }
  } catch (...) {
    set_thread_count(threads);
    throw;
  }
  set_thread_count(threads);
  w.write(out / "timings.csv");
}

void cmd_eval(const json& cfg, const fs::path& out) {
  const std::uint64_t seed = config_seed(cfg);
  const Data data = load_data(cfg);
  StructuredExperimentConfig c;
  c.input_kernel = KernelSpec::parse(cfg.value("input_kernel", std::string("gaussian:1")));
  if (cfg.contains("output_kernel")) {
    c.output_kernel_set = true;
    c.output_kernel = KernelSpec::parse(cfg.at("output_kernel").get<std::string>());
  }
  c.grid = parse_grid(cfg);
  c.plan = parse_plan(cfg, seed, 4);
  c.provenance = parse_provenance(cfg.value("provenance", std::string("supervised")));
  const std::string policy = cfg.value("candidates", std::string("training_outputs"));
  if (policy == "training_outputs")
    c.candidates = CandidatePolicy::training_outputs;
  else if (policy == "training_and_test_outputs")
    c.candidates = CandidatePolicy::training_and_test_outputs;
  else
    fail(ErrorKind::usage, "eval: unknown candidate policy '" + policy + "'");
  c.topk = cfg.value("topk", c.topk);
  c.record_timings = cfg.value("record_timings", false);
  c.experiment_id = cfg.value("experiment_id", std::string("eval"));

  const StructuredExperimentResult r = run_structured_experiment(data.x, data.y, c);
  std::vector<std::string> header = {"fold", "lambda1", "lambda2", "p", "f1_reduced", "f1_fullrank",
                                     "rbf_loss_reduced", "rbf_loss_fullrank"};
  const bool with_topk = c.candidates == CandidatePolicy::training_and_test_outputs;
  if (with_topk)
    for (Index k : c.topk) {
      header.push_back("top" + std::to_string(k) + "_reduced");
      header.push_back("top" + std::to_string(k) + "_fullrank");
    }
  CsvWriter w(header);
  for (const StructuredFoldResult& f : r.folds) {
    w.cell(static_cast<std::int64_t>(f.fold)).cell(f.lambda1).cell(f.lambda2);
    w.cell(static_cast<std::int64_t>(f.rank)).cell(f.f1_reduced).cell(f.f1_fullrank);
    w.cell(f.rbf_loss_reduced).cell(f.rbf_loss_fullrank);
    for (std::size_t i = 0; i < f.topk_reduced.size(); ++i) w.cell(f.topk_reduced[i]).cell(f.topk_fullrank[i]);
    w.end_row();
    progress("eval", "fold " + std::to_string(f.fold) + ": p=" + std::to_string(f.rank) +
                         " rbf loss reduced " + format_double(f.rbf_loss_reduced) + " full-rank " +
                         format_double(f.rbf_loss_fullrank));
  }
  w.write(out / "folds.csv");
  write_report(r.report, out / "report.csv");
}

// Folds "overrides" into command keys.
void apply_overrides(const std::string& command, json& cfg) {
  if (!cfg.contains("overrides")) return;
  const json ov = cfg.at("overrides");
  cfg.erase("overrides");
  const bool experiment = command == "synth" || command == "eval";
  for (const auto& [key, value] : ov.items()) {
    if (key == "lambda" && command == "train") {
      cfg["lambda"] = value;
      cfg["lambda2"] = value;
    } else if (key == "lambda" && experiment) {
      cfg["grid"]["lambdas"] = json::array({value});
    } else if (key == "p" && command == "train") {
      cfg["p"] = value;
    } else if (key == "p" && experiment) {
      cfg["grid"]["ranks"] = json::array({value});
    } else if (key == "p" && command == "bench-decode") {
      json cases = cfg.value("cases", json::array({{{"n", 2000}, {"n_candidates", 5000}, {"p", 16}}}));
      for (json& c : cases) c["p"] = value;
      cfg["cases"] = cases;
    } else if (key == "kernel" && (command == "train" || experiment)) {
      KernelSpec::parse(value.get<std::string>());
      cfg["input_kernel"] = value;
    } else if (key == "sigma2" && (command == "train" || experiment)) {
      const std::string current = cfg.value("output_kernel", std::string("gaussian:1"));
      const std::string family = current.rfind("tanimoto", 0) == 0 ? "tanimoto:" : "gaussian:";
      const std::string spec = family + format_double(value.get<double>());
      KernelSpec::parse(spec);
      cfg["output_kernel"] = spec;
    } else {
      fail(ErrorKind::usage, "override --" + key + " does not apply to " + command);
    }
  }
}

}  // namespace

json resolve_config(const std::string& command, const json& config) {
  require(config.is_object(), ErrorKind::usage, "config must be a JSON object");
  json cfg = config;
  try {
    apply_overrides(command, cfg);
  } catch (const json::exception& e) {
    fail(ErrorKind::usage, std::string("config: ") + e.what());
  }
  cfg["command"] = command;
  return cfg;
}

void run_command(const std::string& command, const json& config, const fs::path& out_dir) {
  using Handler = void (*)(const json&, const fs::path&);
  Handler handler = nullptr;
  if (command == "diagnose") handler = cmd_diagnose;
  else if (command == "synth") handler = cmd_synth;
  else if (command == "train") handler = cmd_train;
  else if (command == "decode") handler = cmd_decode;
  else if (command == "bench-decode") handler = cmd_bench_decode;
  else if (command == "eval") handler = cmd_eval;
  else fail(ErrorKind::usage, "unknown command '" + command + "'");

  const json cfg = resolve_config(command, config);
  config_seed(cfg);
  const int threads = cfg.value("threads", 1);
  require(threads >= 1, ErrorKind::usage, "config: threads must be at least 1");
  set_thread_count(threads);
  try {
    fs::create_directories(out_dir);
  } catch (const fs::filesystem_error& e) {
    fail(ErrorKind::data, std::string("cannot create output directory: ") + e.what());
  }
  write_config(cfg, out_dir);
  try {
    handler(cfg, out_dir);
  } catch (const json::exception& e) {
    fail(ErrorKind::usage, std::string("config: ") + e.what());
  }
}

}  // namespace rriokr
