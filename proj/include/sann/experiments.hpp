#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sann/network.hpp"
#include "sann/nmf.hpp"

namespace sann::exp {

enum class ExperimentId { E1, E2, E3, E4, E5, E6 };

std::string_view to_string(ExperimentId id);
/// "E1".."E6" (case-insensitive); throws ConfigError naming the valid ids.
ExperimentId parse_experiment_id(std::string_view name);

struct ExperimentConfig {
  ExperimentId id = ExperimentId::E1;
  /// Number of synthetic images.
  std::size_t dataset_size = 100;
  std::uint64_t seed = 1;
  std::size_t epochs = 200;
  std::size_t n_hidden = 10;
  double b = 0.2;
  double t_lim = 1.0;
  double lr = 0.5;
  double momentum = 0.1;
  SalienceMode mode = SalienceMode::LiteralEq2;
  /// Salience attached to the salient images; 0 switches salience off.
  double salience = 1.0;
  /// 1-based indices of the images that carry salience.
  std::vector<std::size_t> salient_indices{9, 10, 11};
  /// E2: salience magnitudes compared; must contain 0.
  std::vector<double> magnitudes{0.0, 0.5, 1.0, 2.0};
  /// E5: single-trial amplification factors.
  std::vector<int> amplifications{1, 2, 3, 4, 5, 6};
  /// E6: hidden layer sizes swept, and the salience amplification used.
  std::vector<std::size_t> hidden_sizes{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18};
  int sweep_amplification = 2;

  std::size_t n_persons = 20;
  double noise_sigma = 0.05;
  std::size_t image_size = 19;
  nmf::NmfConfig nmf{};

  /// Defaults for one experiment, including its dataset size (100 images
  /// for E1, E2 and E6, 200 for E3, E4 and E5).
  static ExperimentConfig defaults(ExperimentId id);

  void validate() const;
  /// Flat key/value listing of every field, in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

struct Verdict {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  /// Human-readable rule, e.g. ">= 0.9".
  std::string rule;
};

/// Tabular experiment output. Cell values are stored rounded to 10
/// significant digits, the precision of the CSV, so verdicts computed from
/// the rows can be recomputed exactly from the file.
struct ExperimentReport {
  ExperimentId id = ExperimentId::E1;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, double>> summary;
  std::vector<Verdict> verdicts;

  void add_row(std::vector<double> values);
  std::vector<double> column(std::string_view name) const;
  bool all_pass() const;

  std::string to_csv() const;
  /// One `PASS|FAIL <name> measured=<v> rule=<rule>` line per verdict.
  std::string verdict_text() const;
};

/// Rounds to the CSV precision.
double round_sig10(double v);

/// Reads a report CSV back (columns and rows only).
ExperimentReport parse_report_csv(std::string_view csv);

ExperimentReport run_e1_residual_correlation(const ExperimentConfig& cfg);
ExperimentReport run_e2_salience_magnitude(const ExperimentConfig& cfg);
ExperimentReport run_e3_multi_trial_profile(const ExperimentConfig& cfg);
ExperimentReport run_e4_output_independence(const ExperimentConfig& cfg);
ExperimentReport run_e5_single_trial_amplification(const ExperimentConfig& cfg);
ExperimentReport run_e6_hidden_sweep(const ExperimentConfig& cfg);

/// Dispatches on cfg.id.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Verdict rules, reading nothing but the report's columns and rows.
std::vector<Verdict> verdicts_e1(const ExperimentReport& r);
std::vector<Verdict> verdicts_e2(const ExperimentReport& r);
std::vector<Verdict> verdicts_e3(const ExperimentReport& r);
std::vector<Verdict> verdicts_e4(const ExperimentReport& r);
std::vector<Verdict> verdicts_e5(const ExperimentReport& r);
std::vector<Verdict> verdicts_e6(const ExperimentReport& r);

/// First 1-based epoch whose error is <= 10% of the first epoch's error, or
/// curve.size() with censored = true when none is.
struct EpochsToTarget {
  std::size_t epochs = 0;
  bool censored = false;
};
EpochsToTarget epochs_to_tenth(std::span<const double> curve);

/// True when `values` never decreases, except for at most one step down of
/// at most `allowance`.
bool non_decreasing_with_allowance(std::span<const double> values, double allowance);

}  // namespace sann::exp
