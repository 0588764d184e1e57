#include "sann/nmf.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "sann/errors.hpp"
#include "sann/fileio.hpp"

namespace sann::nmf {

void NmfConfig::validate() const {
  if (rank < 1) throw ConfigError("nmf: rank must be >= 1");
  if (max_iters < 1) throw ConfigError("nmf: max_iters must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("nmf: tol must be > 0");
  if (!(epsilon > 0.0)) throw ConfigError("nmf: epsilon must be > 0");
}

namespace {

void require_non_negative(const Matrix& v) {
  for (double x : v.data()) {
    if (!(x >= 0.0)) throw DomainError("nmf: input has a negative or non-finite entry");
  }
}

Matrix random_positive(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  // 1 - U[0,1) lies in (0, 1].
  for (double& x : m.data()) x = 1.0 - rng.uniform();
  return m;
}

// x <- x .* num ./ (den + eps)
void multiplicative_update(Matrix& x, const Matrix& num, const Matrix& den, double eps) {
  auto xd = x.data();
  auto nd = num.data();
  auto dd = den.data();
  for (std::size_t i = 0; i < xd.size(); ++i) xd[i] *= nd[i] / (dd[i] + eps);
}

}  // namespace

NmfModel factorize(const Matrix& v, const NmfConfig& cfg, Rng& rng, std::vector<double>* residuals) {
  cfg.validate();
  if (v.empty()) throw DomainError("nmf: empty input");
  require_non_negative(v);

  NmfModel m{random_positive(v.rows(), cfg.rank, rng), random_positive(cfg.rank, v.cols(), rng)};

  double prev = frobenius_norm(subtract(v, mat_mul(m.w, m.h)));
  if (residuals) residuals->assign(1, prev);

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    // H <- H .* (W'V) ./ (W'W H)
    const Matrix wt = transpose(m.w);
    multiplicative_update(m.h, mat_mul(wt, v), mat_mul(mat_mul(wt, m.w), m.h), cfg.epsilon);
    // W <- W .* (V H') ./ (W H H')
    const Matrix ht = transpose(m.h);
    multiplicative_update(m.w, mat_mul(v, ht), mat_mul(m.w, mat_mul(m.h, ht)), cfg.epsilon);

    const double res = frobenius_norm(subtract(v, mat_mul(m.w, m.h)));
    if (residuals) residuals->push_back(res);
    const double change = prev > 0.0 ? std::abs(prev - res) / prev : 0.0;
    prev = res;
    if (change < cfg.tol) break;
  }
  return m;
}

Matrix reconstruct(const NmfModel& model) {
  return mat_mul(model.w, model.h);
}

std::vector<double> encode(const Matrix& w, std::span<const double> v_col, const NmfConfig& cfg, Rng& rng) {
  cfg.validate();
  if (v_col.size() != w.rows()) {
    throw ShapeError("nmf encode: column length " + std::to_string(v_col.size()) + " != basis rows " +
                     std::to_string(w.rows()));
  }
  for (double x : v_col) {
    if (!(x >= 0.0)) throw DomainError("nmf encode: negative entry in column");
  }
  const std::size_t r = w.cols();
  const Matrix wt = transpose(w);
  const Matrix wtw = mat_mul(wt, w);
  std::vector<double> wtv(r, 0.0);
  for (std::size_t a = 0; a < r; ++a) {
    auto row = wt.row(a);
    for (std::size_t i = 0; i < row.size(); ++i) wtv[a] += row[i] * v_col[i];
  }

  std::vector<double> h(r);
  for (double& x : h) x = 1.0 - rng.uniform();

  // Residual ||v - Wh||^2 = v'v - 2 h'W'v + h'W'W h, tracked through W'W h.
  double vtv = 0.0;
  for (double x : v_col) vtv += x * x;
  std::vector<double> wtwh(r);
  auto residual_sq = [&] {
    double s = vtv;
    for (std::size_t a = 0; a < r; ++a) s += h[a] * (wtwh[a] - 2.0 * wtv[a]);
    return std::max(s, 0.0);
  };
  auto refresh = [&] {
    for (std::size_t a = 0; a < r; ++a) {
      auto row = wtw.row(a);
      double s = 0.0;
      for (std::size_t b = 0; b < r; ++b) s += row[b] * h[b];
      wtwh[a] = s;
    }
  };

  refresh();
  double prev = std::sqrt(residual_sq());
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    for (std::size_t a = 0; a < r; ++a) h[a] *= wtv[a] / (wtwh[a] + cfg.epsilon);
    refresh();
    const double res = std::sqrt(residual_sq());
    const double change = prev > 0.0 ? std::abs(prev - res) / prev : 0.0;
    prev = res;
    if (change < cfg.tol) break;
  }
  return h;
}

void save_model(std::ostream& out, const NmfModel& model) {
  out << "NMF " << model.w.rows() << ' ' << model.rank() << ' ' << model.h.cols() << '\n';
  auto write = [&](const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      auto row = m.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out << ' ';
        out << format_real(row[j], 17);
      }
      out << '\n';
    }
  };
  write(model.w);
  write(model.h);
}

NmfModel load_model(std::istream& in) {
  std::string magic;
  long long rows = -1, rank = -1, cols = -1;
  if (!(in >> magic >> rows >> rank >> cols) || magic != "NMF" || rows < 1 || rank < 1 || cols < 1) {
    throw ParseError("nmf model: bad header");
  }
  auto read = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    std::string tok;
    for (double& x : m.data()) {
      if (!(in >> tok)) throw ParseError("nmf model: truncated data");
      x = parse_real(tok);
      if (!(x >= 0.0) || !std::isfinite(x)) throw ParseError("nmf model: factor entries must be finite and >= 0");
    }
    return m;
  };
  NmfModel m;
  m.w = read(static_cast<std::size_t>(rows), static_cast<std::size_t>(rank));
  m.h = read(static_cast<std::size_t>(rank), static_cast<std::size_t>(cols));
  std::string extra;
  if (in >> extra) throw ParseError("nmf model: trailing data");
  return m;
}

}  // namespace sann::nmf
