#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "sann/numerics.hpp"

namespace sann {

/// How a salience signal moves node thresholds.
enum class SalienceMode {
  /// Step toward the limit in the direction of the sign table: positive
  /// salience on an active node lowers its threshold (raises activation).
  /// T <- (1 - eta) T + eta * d_adj * t_lim, eta = min(1, B |S| |A|).
  Fig7,
  /// Closed form T <- T - rate (T + |A| * d_adj * t_lim), rate = min(1, B |S|).
  /// At |S| = 1 the rate is B. A positive signal on an active node raises
  /// its threshold toward |A| * t_lim, damping the node.
  LiteralEq2,
};

std::string_view to_string(SalienceMode mode);
/// Accepts "fig7" and "literal-eq2"; throws ConfigError otherwise.
SalienceMode parse_salience_mode(std::string_view name);

struct SalienceTag {
  /// 0 means no salience; the sign carries direction.
  double s = 0.0;
  /// Multiplier on s during multi-trial training; >= 1.
  int amplification = 1;
};

/// One training input for the network.
struct Example {
  std::vector<double> input;
  std::vector<double> target;
  SalienceTag tag;
};

/// Per-node record of one forward pass. Node order is hidden nodes then
/// output nodes.
struct ForwardTrace {
  std::vector<double> input;
  /// Weighted input sums before the threshold shift.
  std::vector<double> v_sums;
  /// tanh(v_sums[i] - threshold[i]).
  std::vector<double> activations;
  std::vector<double> output;
  /// Network version the trace was taken at.
  std::uint64_t version = 0;
};

/// Single-hidden-layer perceptron with tanh units, one threshold per hidden
/// and output node, and no bias terms.
///
/// Thresholds move only through apply_salience and always stay within
/// [-t_lim, t_lim]. Every mutation bumps version(), which lets
/// apply_salience reject traces taken before the change.
class Network {
 public:
  /// Input-to-hidden weights uniform in [-0.2, 0.2], hidden-to-output in
  /// [-2, 2], thresholds and momentum zero. Requires all counts >= 1,
  /// t_lim > 0 and b in (0, 1].
  Network(std::size_t n_in, std::size_t n_hidden, std::size_t n_out, double t_lim, double b, Rng& rng);

  /// Assembles a network from explicit parameters, with zero momentum.
  static Network from_parts(Matrix w_ih, Matrix w_ho, std::vector<double> thresholds, double t_lim, double b);

  std::size_t n_in() const noexcept { return w_ih_.rows(); }
  std::size_t n_hidden() const noexcept { return w_ih_.cols(); }
  std::size_t n_out() const noexcept { return w_ho_.cols(); }
  std::size_t n_nodes() const noexcept { return thresholds_.size(); }

  const Matrix& w_ih() const noexcept { return w_ih_; }
  const Matrix& w_ho() const noexcept { return w_ho_; }
  std::span<const double> thresholds() const noexcept { return thresholds_; }
  double t_lim() const noexcept { return t_lim_; }
  double b() const noexcept { return b_; }
  std::uint64_t version() const noexcept { return version_; }

  /// Mutable weight access; counts as a mutation.
  Matrix& w_ih_mut() noexcept;
  Matrix& w_ho_mut() noexcept;
  /// Throws ConfigError if |value| > t_lim.
  void set_threshold(std::size_t node, double value);

  /// Parameters only; momentum buffers and version are not compared.
  bool same_parameters(const Network& other) const noexcept;

 private:
  Network() = default;
  void check() const;

  Matrix w_ih_;
  Matrix w_ho_;
  std::vector<double> thresholds_;
  double t_lim_ = 1.0;
  double b_ = 0.2;
  Matrix prev_ih_;
  Matrix prev_ho_;
  std::uint64_t version_ = 0;

  friend double backprop_step(Network&, std::span<const double>, std::span<const double>, double, double);
  friend void apply_salience(Network&, const ForwardTrace&, double, SalienceMode);
};

ForwardTrace forward(const Network& net, std::span<const double> x);

/// Half the squared error, 0.5 * sum (target - output)^2.
double loss(const Network& net, std::span<const double> x, std::span<const double> target);

struct Gradients {
  Matrix d_ih;
  Matrix d_ho;
};

/// Gradient of loss() with respect to both weight arrays.
Gradients compute_gradients(const Network& net, const ForwardTrace& trace, std::span<const double> target);

/// One gradient step with momentum in the classic per-pattern form:
/// w += lr * change + momentum * previous_change, change = -dloss/dw.
/// Thresholds are left alone. Returns the loss before the update.
double backprop_step(Network& net, std::span<const double> x, std::span<const double> target, double lr,
                     double momentum);

/// Direction of threshold adjustment: 0 if u_act * s == 0, else
/// -sign(u_act * s).
int d_adj(double u_act, double s) noexcept;

/// Moves every hidden and output threshold in response to salience s_eff,
/// using the activations in `trace`. Throws ContractError if the trace was
/// not taken from the network's current state.
void apply_salience(Network& net, const ForwardTrace& trace, double s_eff, SalienceMode mode);

struct ReverseSalience {
  double total = 0.0;
  /// A_i * (T_i - V_i), hidden nodes then output nodes.
  std::vector<double> per_node;
};

ReverseSalience reverse_salience(const Network& net, const ForwardTrace& trace);

/// Reverse salience of x minus that of the all-0.5 control input.
double relative_reverse_salience(const Network& net, std::span<const double> x);

struct TrainParams {
  std::size_t epochs = 200;
  double lr = 0.5;
  double momentum = 0.1;
  SalienceMode mode = SalienceMode::LiteralEq2;

  void validate() const;
};

/// Per epoch and per example: backprop_step, then, for salient examples, a
/// fresh forward pass and apply_salience with s_eff = s * amplification.
/// Returns the mean pre-update loss of each epoch.
std::vector<double> train_multi_trial(Network& net, std::span<const Example> examples, const TrainParams& params);

/// Salience-free multi-trial training followed by exactly one pass over the
/// salient examples that only applies salience, with s_eff = amplification * s.
/// Returns the learning curve of the first phase.
std::vector<double> train_single_trial(Network& net, std::span<const Example> examples, const TrainParams& params,
                                       int amplification);

/// Text format: `SANN <n_in> <n_hidden> <n_out> <t_lim> <b>` then w_ih,
/// w_ho and the thresholds, 17 significant digits.
void save_network(std::ostream& out, const Network& net);
Network load_network(std::istream& in);

}  // namespace sann
