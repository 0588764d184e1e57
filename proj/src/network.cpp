#include "sann/network.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "sann/errors.hpp"
#include "sann/fileio.hpp"

namespace sann {

std::string_view to_string(SalienceMode mode) {
  return mode == SalienceMode::Fig7 ? "fig7" : "literal-eq2";
}

SalienceMode parse_salience_mode(std::string_view name) {
  if (name == "fig7") return SalienceMode::Fig7;
  if (name == "literal-eq2") return SalienceMode::LiteralEq2;
  throw ConfigError("unknown salience mode '" + std::string(name) + "' (expected fig7 or literal-eq2)");
}

namespace {

void check_config(std::size_t n_in, std::size_t n_hidden, std::size_t n_out, double t_lim, double b) {
  if (n_in < 1 || n_hidden < 1 || n_out < 1) throw ConfigError("network: layer sizes must be >= 1");
  if (!(t_lim > 0.0) || !std::isfinite(t_lim)) throw ConfigError("network: t_lim must be > 0");
  if (!(b > 0.0 && b <= 1.0)) throw ConfigError("network: b must be in (0, 1]");
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  return Matrix(rows, cols, rng_uniform(rng, -bound, bound, rows * cols));
}

}  // namespace

Network::Network(std::size_t n_in, std::size_t n_hidden, std::size_t n_out, double t_lim, double b, Rng& rng) {
  check_config(n_in, n_hidden, n_out, t_lim, b);
  w_ih_ = uniform_matrix(n_in, n_hidden, 0.2, rng);
  w_ho_ = uniform_matrix(n_hidden, n_out, 2.0, rng);
  thresholds_.assign(n_hidden + n_out, 0.0);
  t_lim_ = t_lim;
  b_ = b;
  prev_ih_ = Matrix(n_in, n_hidden);
  prev_ho_ = Matrix(n_hidden, n_out);
}

Network Network::from_parts(Matrix w_ih, Matrix w_ho, std::vector<double> thresholds, double t_lim, double b) {
  check_config(w_ih.rows(), w_ih.cols(), w_ho.cols(), t_lim, b);
  if (w_ho.rows() != w_ih.cols()) throw ShapeError("network: w_ho rows must equal hidden size");
  if (thresholds.size() != w_ih.cols() + w_ho.cols()) throw ShapeError("network: one threshold per node");
  Network net;
  net.prev_ih_ = Matrix(w_ih.rows(), w_ih.cols());
  net.prev_ho_ = Matrix(w_ho.rows(), w_ho.cols());
  net.w_ih_ = std::move(w_ih);
  net.w_ho_ = std::move(w_ho);
  net.thresholds_ = std::move(thresholds);
  net.t_lim_ = t_lim;
  net.b_ = b;
  net.check();
  return net;
}

void Network::check() const {
  if (!w_ih_.all_finite() || !w_ho_.all_finite()) throw ConfigError("network: non-finite weight");
  for (double t : thresholds_) {
    if (!(std::abs(t) <= t_lim_)) throw ConfigError("network: threshold outside [-t_lim, t_lim]");
  }
}

Matrix& Network::w_ih_mut() noexcept {
  ++version_;
  return w_ih_;
}

Matrix& Network::w_ho_mut() noexcept {
  ++version_;
  return w_ho_;
}

void Network::set_threshold(std::size_t node, double value) {
  if (node >= thresholds_.size()) throw ShapeError("network: node index out of range");
  if (!(std::abs(value) <= t_lim_)) throw ConfigError("network: threshold outside [-t_lim, t_lim]");
  thresholds_[node] = value;
  ++version_;
}

bool Network::same_parameters(const Network& other) const noexcept {
  return w_ih_ == other.w_ih_ && w_ho_ == other.w_ho_ && thresholds_ == other.thresholds_ &&
         t_lim_ == other.t_lim_ && b_ == other.b_;
}

ForwardTrace forward(const Network& net, std::span<const double> x) {
  if (x.size() != net.n_in()) {
    throw ShapeError("forward: input length " + std::to_string(x.size()) + " != " + std::to_string(net.n_in()));
  }
  const std::size_t nh = net.n_hidden();
  const std::size_t no = net.n_out();
  const auto thresholds = net.thresholds();

  ForwardTrace t;
  t.input.assign(x.begin(), x.end());
  t.v_sums.assign(nh + no, 0.0);
  t.activations.assign(nh + no, 0.0);
  t.version = net.version();

  for (std::size_t i = 0; i < x.size(); ++i) {
    auto w = net.w_ih().row(i);
    for (std::size_t j = 0; j < nh; ++j) t.v_sums[j] += x[i] * w[j];
  }
  for (std::size_t j = 0; j < nh; ++j) t.activations[j] = std::tanh(t.v_sums[j] - thresholds[j]);

  for (std::size_t j = 0; j < nh; ++j) {
    auto w = net.w_ho().row(j);
    for (std::size_t k = 0; k < no; ++k) t.v_sums[nh + k] += t.activations[j] * w[k];
  }
  for (std::size_t k = 0; k < no; ++k) {
    t.activations[nh + k] = std::tanh(t.v_sums[nh + k] - thresholds[nh + k]);
  }
  t.output.assign(t.activations.begin() + static_cast<std::ptrdiff_t>(nh), t.activations.end());
  return t;
}

namespace {

double half_squared_error(std::span<const double> output, std::span<const double> target) {
  if (output.size() != target.size()) throw ShapeError("target length does not match output size");
  double e = 0.0;
  for (std::size_t k = 0; k < output.size(); ++k) {
    const double d = target[k] - output[k];
    e += 0.5 * d * d;
  }
  return e;
}

}  // namespace

double loss(const Network& net, std::span<const double> x, std::span<const double> target) {
  return half_squared_error(forward(net, x).output, target);
}

Gradients compute_gradients(const Network& net, const ForwardTrace& trace, std::span<const double> target) {
  const std::size_t ni = net.n_in();
  const std::size_t nh = net.n_hidden();
  const std::size_t no = net.n_out();
  if (target.size() != no) throw ShapeError("gradients: target length does not match output size");

  std::vector<double> out_delta(no);
  for (std::size_t k = 0; k < no; ++k) {
    const double o = trace.output[k];
    out_delta[k] = (target[k] - o) * (1.0 - o * o);
  }
  std::vector<double> hid_delta(nh);
  for (std::size_t j = 0; j < nh; ++j) {
    auto w = net.w_ho().row(j);
    double s = 0.0;
    for (std::size_t k = 0; k < no; ++k) s += out_delta[k] * w[k];
    const double a = trace.activations[j];
    hid_delta[j] = (1.0 - a * a) * s;
  }

  Gradients g{Matrix(ni, nh), Matrix(nh, no)};
  for (std::size_t j = 0; j < nh; ++j)
    for (std::size_t k = 0; k < no; ++k) g.d_ho(j, k) = -out_delta[k] * trace.activations[j];
  for (std::size_t i = 0; i < ni; ++i)
    for (std::size_t j = 0; j < nh; ++j) g.d_ih(i, j) = -hid_delta[j] * trace.input[i];
  return g;
}

double backprop_step(Network& net, std::span<const double> x, std::span<const double> target, double lr,
                     double momentum) {
  if (!(lr > 0.0)) throw ConfigError("backprop: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("backprop: momentum must be in [0, 1)");
  const ForwardTrace trace = forward(net, x);
  const double error = half_squared_error(trace.output, target);
  const Gradients g = compute_gradients(net, trace, target);

  auto step = [&](Matrix& w, Matrix& prev, const Matrix& grad) {
    auto wd = w.data();
    auto pd = prev.data();
    auto gd = grad.data();
    for (std::size_t i = 0; i < wd.size(); ++i) {
      const double change = -gd[i];
      wd[i] += lr * change + momentum * pd[i];
      pd[i] = change;
    }
  };
  step(net.w_ho_, net.prev_ho_, g.d_ho);
  step(net.w_ih_, net.prev_ih_, g.d_ih);
  ++net.version_;
  return error;
}

int d_adj(double u_act, double s) noexcept {
  if (u_act == 0.0 || s == 0.0 || std::isnan(u_act) || std::isnan(s)) return 0;
  return (u_act > 0.0) == (s > 0.0) ? -1 : 1;
}

void apply_salience(Network& net, const ForwardTrace& trace, double s_eff, SalienceMode mode) {
  if (trace.version != net.version_ || trace.activations.size() != net.n_nodes()) {
    throw ContractError("apply_salience: trace does not match the network's current state");
  }
  if (!std::isfinite(s_eff)) throw DomainError("apply_salience: salience must be finite");
  if (s_eff == 0.0) return;

  const double t_lim = net.t_lim_;
  for (std::size_t i = 0; i < net.thresholds_.size(); ++i) {
    const double a = trace.activations[i];
    const int d = d_adj(a, s_eff);
    double& t = net.thresholds_[i];
    double next;
    if (mode == SalienceMode::Fig7) {
      const double eta = std::min(1.0, net.b_ * std::abs(s_eff) * std::abs(a));
      next = (1.0 - eta) * t + eta * d * t_lim;
    } else {
      const double rate = std::min(1.0, net.b_ * std::abs(s_eff));
      next = t - rate * (t + std::abs(a) * d * t_lim);
    }
    // Both forms are convex combinations of points inside the limits; the
    // clamp only absorbs rounding.
    t = std::clamp(next, -t_lim, t_lim);
  }
  ++net.version_;
}

ReverseSalience reverse_salience(const Network& net, const ForwardTrace& trace) {
  if (trace.activations.size() != net.n_nodes()) throw ShapeError("reverse_salience: trace size mismatch");
  ReverseSalience rs;
  rs.per_node.resize(net.n_nodes());
  const auto thresholds = net.thresholds();
  for (std::size_t i = 0; i < rs.per_node.size(); ++i) {
    rs.per_node[i] = trace.activations[i] * (thresholds[i] - trace.v_sums[i]);
    rs.total += rs.per_node[i];
  }
  return rs;
}

double relative_reverse_salience(const Network& net, std::span<const double> x) {
  if (x.size() != net.n_in()) throw ShapeError("relative_reverse_salience: input length mismatch");
  const std::vector<double> control(net.n_in(), 0.5);
  return reverse_salience(net, forward(net, x)).total - reverse_salience(net, forward(net, control)).total;
}

void TrainParams::validate() const {
  if (epochs < 1) throw ConfigError("training: epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("training: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("training: momentum must be in [0, 1)");
}

namespace {

void check_examples(std::span<const Example> examples) {
  if (examples.empty()) throw ConfigError("training: empty dataset");
  for (const auto& ex : examples) {
    if (ex.tag.amplification < 1) throw ConfigError("training: salience amplification must be >= 1");
  }
}

std::vector<double> run_epochs(Network& net, std::span<const Example> examples, const TrainParams& params,
                               bool with_salience) {
  std::vector<double> curve;
  curve.reserve(params.epochs);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    double sum = 0.0;
    for (const auto& ex : examples) {
      sum += backprop_step(net, ex.input, ex.target, params.lr, params.momentum);
      if (with_salience && ex.tag.s != 0.0) {
        apply_salience(net, forward(net, ex.input), ex.tag.s * ex.tag.amplification, params.mode);
      }
    }
    const double mean_error = sum / static_cast<double>(examples.size());
    if (!std::isfinite(mean_error)) {
      throw RunError("training diverged at epoch " + std::to_string(epoch + 1));
    }
    curve.push_back(mean_error);
  }
  return curve;
}

}  // namespace

std::vector<double> train_multi_trial(Network& net, std::span<const Example> examples, const TrainParams& params) {
  params.validate();
  check_examples(examples);
  return run_epochs(net, examples, params, true);
}

std::vector<double> train_single_trial(Network& net, std::span<const Example> examples, const TrainParams& params,
                                       int amplification) {
  params.validate();
  check_examples(examples);
  if (amplification < 1) throw ConfigError("single-trial: amplification must be >= 1");
  auto curve = run_epochs(net, examples, params, false);
  for (const auto& ex : examples) {
    if (ex.tag.s == 0.0) continue;
    apply_salience(net, forward(net, ex.input), amplification * ex.tag.s, params.mode);
  }
  return curve;
}

void save_network(std::ostream& out, const Network& net) {
  out << "SANN " << net.n_in() << ' ' << net.n_hidden() << ' ' << net.n_out() << ' ' << format_real(net.t_lim(), 17)
      << ' ' << format_real(net.b(), 17) << '\n';
  auto write = [&](std::span<const double> values, std::size_t per_line) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out << format_real(values[i], 17) << ((i + 1) % per_line == 0 || i + 1 == values.size() ? '\n' : ' ');
    }
  };
  write(net.w_ih().data(), net.n_hidden());
  write(net.w_ho().data(), net.n_out());
  write(net.thresholds(), net.n_nodes());
}

Network load_network(std::istream& in) {
  std::string magic, t_lim_tok, b_tok;
  long long n_in = -1, n_hidden = -1, n_out = -1;
  if (!(in >> magic >> n_in >> n_hidden >> n_out >> t_lim_tok >> b_tok) || magic != "SANN" || n_in < 1 ||
      n_hidden < 1 || n_out < 1) {
    throw ParseError("network file: bad header");
  }
  const double t_lim = parse_real(t_lim_tok);
  const double b = parse_real(b_tok);
  auto read = [&](std::size_t n) {
    std::vector<double> v(n);
    std::string tok;
    for (double& x : v) {
      if (!(in >> tok)) throw ParseError("network file: truncated data");
      x = parse_real(tok);
    }
    return v;
  };
  const auto ni = static_cast<std::size_t>(n_in);
  const auto nh = static_cast<std::size_t>(n_hidden);
  const auto no = static_cast<std::size_t>(n_out);
  Matrix w_ih(ni, nh, read(ni * nh));
  Matrix w_ho(nh, no, read(nh * no));
  auto thresholds = read(nh + no);
  std::string extra;
  if (in >> extra) throw ParseError("network file: trailing data");
  try {
    return Network::from_parts(std::move(w_ih), std::move(w_ho), std::move(thresholds), t_lim, b);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("network file: ") + e.what());
  }
}

}  // namespace sann
