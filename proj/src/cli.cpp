#include "sann/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sann/dataset.hpp"
#include "sann/errors.hpp"
#include "sann/experiments.hpp"
#include "sann/fileio.hpp"
#include "sann/network.hpp"
#include "sann/nmf.hpp"

namespace sann::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct Options {
  std::uint64_t seed = 1;
  std::string out = ".";
  std::size_t epochs = 200;
  std::size_t hidden = 10;
  double b = 0.2;
  double t_lim = 1.0;
  int amplification = 1;
  std::string mode = "literal-eq2";
  bool single_trial = false;

  std::string input;
  std::size_t images = 0;
  std::size_t rank = 49;
  std::string model;
  std::vector<std::size_t> salient{9, 10, 11};
  double salience = 1.0;
  std::string experiment;
};

/// Input is missing or unreadable; reported with exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::size_t kSynthPersons = 20;
constexpr double kSynthNoise = 0.05;
constexpr std::size_t kSynthSize = 19;

struct Images {
  std::vector<data::Image> images;
  std::vector<std::size_t> persons;
  std::vector<std::string> sources;
};

Images load_images(const Options& o, std::size_t default_count) {
  Images out;
  if (!o.input.empty()) {
    if (!fs::is_directory(o.input)) throw InputError("input directory not found: " + o.input);
    try {
      out.images = data::load_pgm_dir(o.input);
    } catch (const ParseError& e) {
      throw InputError(e.what());
    }
    if (out.images.empty()) throw InputError("no .pgm files in " + o.input);
    for (const auto& entry : fs::directory_iterator(o.input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") out.sources.push_back(entry.path().string());
    }
    std::sort(out.sources.begin(), out.sources.end());
    out.persons.assign(out.images.size(), 0);
    return out;
  }
  const std::size_t n = o.images ? o.images : default_count;
  Rng rng(o.seed);
  auto ds = data::synth_dataset(n, kSynthPersons, kSynthSize, kSynthNoise, rng, n >= 11);
  out.images = std::move(ds.images);
  out.persons = std::move(ds.persons);
  out.sources.assign(out.images.size(), "synthetic");
  return out;
}

void ensure_out_dir(const Options& o) {
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (!fs::is_directory(o.out)) throw InputError("cannot create output directory " + o.out);
}

int cmd_factorize(const Options& o) {
  const auto imgs = load_images(o, 50);
  ensure_out_dir(o);
  nmf::NmfConfig cfg;
  cfg.rank = o.rank;
  const Matrix v = data::images_to_matrix(imgs.images);
  Rng rng(o.seed + 1);
  std::vector<double> residuals;
  const auto model = nmf::factorize(v, cfg, rng, &residuals);
  std::ostringstream ss;
  nmf::save_model(ss, model);
  const auto path = fs::path(o.out) / "nmf_model.txt";
  write_file_atomic(path, ss.str());
  std::printf("wrote %s (%zu x %zu, rank %zu)\nfinal residual %s (relative %s) after %zu sweeps\n",
              path.c_str(), v.rows(), v.cols(), cfg.rank, format_real(residuals.back(), 10).c_str(),
              format_real(residuals.back() / frobenius_norm(v), 10).c_str(), residuals.size() - 1);
  return kOk;
}

int cmd_train(const Options& o) {
  if (o.model.empty()) throw ConfigError("train needs --model");
  nmf::NmfModel model;
  try {
    std::istringstream in(read_file(o.model));
    model = nmf::load_model(in);
  } catch (const std::exception& e) {
    throw InputError(std::string("cannot load model: ") + e.what());
  }
  const auto imgs = load_images(o, model.h.cols());
  if (imgs.images.front().pixels.size() != model.w.rows()) {
    throw ShapeError("model expects " + std::to_string(model.w.rows()) + " pixels per image, images have " +
                     std::to_string(imgs.images.front().pixels.size()));
  }
  ensure_out_dir(o);

  nmf::NmfConfig cfg;
  cfg.rank = model.rank();
  Rng enc_rng(o.seed + 2);
  auto set = data::build_samples(imgs.images, model.w, cfg, enc_rng);
  for (auto idx : o.salient) {
    if (idx < 1 || idx > set.samples.size()) throw ConfigError("salient index out of range: " + std::to_string(idx));
    set.samples[idx - 1].tag.s = o.salience;
    if (!o.single_trial) set.samples[idx - 1].tag.amplification = o.amplification;
  }
  const auto examples = data::to_examples(set.samples);

  Rng net_rng(o.seed + 3);
  Network net(cfg.rank, o.hidden, 1, o.t_lim, o.b, net_rng);
  TrainParams params;
  params.epochs = o.epochs;
  params.mode = parse_salience_mode(o.mode);
  const auto curve = o.single_trial ? train_single_trial(net, examples, params, o.amplification)
                                    : train_multi_trial(net, examples, params);

  std::ostringstream ns;
  save_network(ns, net);
  write_file_atomic(fs::path(o.out) / "network.txt", ns.str());
  std::string csv = "epoch,mean_error\n";
  for (std::size_t e = 0; e < curve.size(); ++e) csv += std::to_string(e + 1) + ',' + format_real(curve[e], 10) + '\n';
  write_file_atomic(fs::path(o.out) / "learning_curve.csv", csv);
  std::printf("trained %zu-%zu-1 network (%s, %zu epochs), final mean error %s\n", cfg.rank, o.hidden,
              o.single_trial ? "single-trial" : "multi-trial", curve.size(), format_real(curve.back(), 10).c_str());
  return kOk;
}

int cmd_experiment(const Options& o, const CLI::App& app) {
  const auto id = exp::parse_experiment_id(o.experiment);
  auto cfg = exp::ExperimentConfig::defaults(id);
  cfg.seed = o.seed;
  cfg.epochs = o.epochs;
  cfg.n_hidden = o.hidden;
  cfg.b = o.b;
  cfg.t_lim = o.t_lim;
  cfg.mode = parse_salience_mode(o.mode);
  cfg.salience = o.salience;
  cfg.salient_indices = o.salient;
  if (o.images) cfg.dataset_size = o.images;
  if (app.count("--amplification")) {
    if (id == exp::ExperimentId::E5) {
      cfg.amplifications.clear();
      for (int a = 1; a <= o.amplification; ++a) cfg.amplifications.push_back(a);
    } else {
      cfg.sweep_amplification = o.amplification;
    }
  }
  cfg.validate();
  ensure_out_dir(o);

  const auto report = exp::run_experiment(cfg);
  const std::string name(exp::to_string(id));
  write_file_atomic(fs::path(o.out) / (name + ".csv"), report.to_csv());
  write_file_atomic(fs::path(o.out) / (name + ".verdict.txt"), report.verdict_text());
  std::cout << report.verdict_text();
  return report.all_pass() ? kOk : kFailed;
}

int cmd_dataset_synth(const Options& o) {
  const std::size_t n = o.images ? o.images : 100;
  Rng rng(o.seed);
  auto ds = data::synth_dataset(n, kSynthPersons, kSynthSize, kSynthNoise, rng, n >= 11);
  ensure_out_dir(o);
  std::vector<data::ManifestRow> rows;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.pgm", i + 1);
    write_file_atomic(fs::path(o.out) / name, data::write_pgm(ds.images[i]));
    double s = 0.0;
    for (auto idx : o.salient) {
      if (idx == i + 1) s = o.salience;
    }
    // Target of the stored 8-bit image, as a reader of the files will see it.
    const double target = data::mean_grayscale(data::load_pgm(data::write_pgm(ds.images[i])));
    rows.push_back({i + 1, ds.persons[i], name, target, s});
  }
  write_file_atomic(fs::path(o.out) / "manifest.csv", data::write_manifest(rows));
  std::printf("wrote %zu images and manifest.csv to %s\n", ds.images.size(), o.out.c_str());
  return kOk;
}

}  // namespace

int run(int argc, char** argv) {
  Options o;
  CLI::App app{"Salience-affected neural network toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat `key = value` file (# comments); keys are long flag names")
      ->check(CLI::ExistingFile);
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--seed", o.seed, "Random seed (falls back to $SANN_SEED, then 1)")->envname("SANN_SEED");
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--hidden", o.hidden, "Hidden layer size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--b", o.b, "Salience influence B, in (0, 1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app.add_option("--t-lim", o.t_lim, "Threshold limit, > 0")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--amplification", o.amplification,
                 "Salience amplification >= 1 (train; E6 sweep; E5 sweeps 1..N)")
      ->check(CLI::Range(1, 1000000));
  app.add_option("--mode", o.mode, "Threshold update rule")
      ->check(CLI::IsMember({"fig7", "literal-eq2"}))
      ->capture_default_str();
  app.add_flag("--single-trial", o.single_trial, "train: salience-free training, then one salience pass");
  app.add_option("--input", o.input, "Directory of .pgm images (default: synthetic images)");
  app.add_option("--images", o.images, "Number of synthetic images / experiment dataset size");
  app.add_option("--rank", o.rank, "factorize: NMF rank")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--model", o.model, "train: NMF model file");
  app.add_option("--salient", o.salient, "1-based indices of salient images")->delimiter(',')->capture_default_str();
  app.add_option("--salience", o.salience, "Salience value attached to salient images")->capture_default_str();

  auto* factorize = app.add_subcommand("factorize", "Factorize images with NMF and write the model");
  auto* train = app.add_subcommand("train", "Encode images against an NMF model and train a network");
  auto* experiment = app.add_subcommand("experiment", "Run experiment E1..E6, write CSV and verdicts");
  experiment->add_option("id", o.experiment, "Experiment id (E1, E2, E3, E4, E5, E6)")->required();
  auto* synth = app.add_subcommand("dataset-synth", "Write synthetic PGM images and a manifest");
  for (auto* sub : {factorize, train, experiment, synth}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (factorize->parsed()) return cmd_factorize(o);
    if (train->parsed()) return cmd_train(o);
    if (experiment->parsed()) return cmd_experiment(o, app);
    if (synth->parsed()) return cmd_dataset_synth(o);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}

}  // namespace sann::cli
