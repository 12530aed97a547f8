#include "tcprobe/probe.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <deque>
#include <fstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "tcprobe/errors.hpp"

namespace tcprobe {

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix Matrix::hconcat(const Matrix& other) const {
  if (other.rows_ != rows_) throw ValidationError("hconcat: row counts differ");
  Matrix out(rows_, cols_ + other.cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto dst = out.row(r);
    const auto a = row(r);
    const auto b = other.row(r);
    std::copy(a.begin(), a.end(), dst.begin());
    std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(cols_));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standardizer
// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const Matrix& rows) {
  if (rows.rows() == 0) throw ValidationError("fit_standardizer: no rows");
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  Standardizer s;
  s.means.assign(d, 0.0);
  s.scales.assign(d, 1.0);
  std::vector<char> constant(d, 1);
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = rows.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      s.means[c] += x[c];
      if (x[c] != rows(0, c)) constant[c] = 0;
    }
  }
  for (std::size_t c = 0; c < d; ++c) s.means[c] /= static_cast<double>(n);
  std::vector<double> ss(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = rows.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = x[c] - s.means[c];
      ss[c] += dev * dev;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    if (constant[c]) {
      // exact zeros after transform
      s.means[c] = rows(0, c);
      continue;
    }
    const double sd = std::sqrt(ss[c] / static_cast<double>(n));
    if (sd > 1e-12 * std::max(1.0, std::abs(s.means[c]))) s.scales[c] = sd;
  }
  return s;
}

void Standardizer::transform_inplace(Matrix& rows) const {
  if (rows.cols() != width()) {
    throw ValidationError("standardizer: width " + std::to_string(rows.cols()) + " != fitted width " +
                          std::to_string(width()));
  }
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    auto x = rows.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = (x[c] - means[c]) / scales[c];
  }
}

Matrix Standardizer::transform(const Matrix& rows) const {
  Matrix out = rows;
  transform_inplace(out);
  return out;
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(-m))
double softplus_neg(double m) {
  if (m >= 0) return std::log1p(std::exp(-m));
  return -m + std::log1p(std::exp(m));
}

std::pair<double, double> class_weights_for(std::span<const std::uint8_t> y, bool balanced) {
  std::size_t n1 = 0;
  for (auto v : y) n1 += v ? 1 : 0;
  const std::size_t n0 = y.size() - n1;
  if (n0 == 0 || n1 == 0) {
    throw SingleClassError("logistic probe: training labels contain a single class (" + std::to_string(y.size()) +
                           " rows)");
  }
  if (!balanced) return {1.0, 1.0};
  const double n = static_cast<double>(y.size());
  return {n / (2.0 * static_cast<double>(n0)), n / (2.0 * static_cast<double>(n1))};
}

// Four independent partial sums in a fixed order: same bits every run, and
// enough independent chains for the compiler to keep the FPU busy.
double dot_row(const double* x, const double* w, std::size_t d) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t c = 0;
  for (; c + 4 <= d; c += 4) {
    s0 += x[c] * w[c];
    s1 += x[c + 1] * w[c + 1];
    s2 += x[c + 2] * w[c + 2];
    s3 += x[c + 3] * w[c + 3];
  }
  for (; c < d; ++c) s0 += x[c] * w[c];
  return (s0 + s1) + (s2 + s3);
}

// Each row's term depends on the margin m = s * z with s = +-1, so flipping
// every label and negating (w, b) reproduces the same terms bit for bit.
double objective_impl(const Matrix& X, std::span<const std::uint8_t> y, std::pair<double, double> cw, double C,
                      std::span<const double> params, std::span<double> grad, std::vector<double>& dz) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  const double* w = params.data();
  const double b = params[d];
  dz.resize(n);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = X.data().data() + r * d;
    const double z = dot_row(x, w, d) + b;
    const double s = y[r] ? 1.0 : -1.0;
    const double c_r = y[r] ? cw.second : cw.first;
    const double m = s * z;
    loss += c_r * softplus_neg(m);
    dz[r] = -s * c_r * sigmoid(-m);
  }
  double penalty = 0.0;
  for (std::size_t c = 0; c < d; ++c) penalty += w[c] * w[c];
  loss += penalty / (2.0 * C);

  std::fill(grad.begin(), grad.end(), 0.0);
  double* g = grad.data();
  double gb = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = X.data().data() + r * d;
    const double f = dz[r];
    for (std::size_t c = 0; c < d; ++c) g[c] += f * x[c];
    gb += f;
  }
  for (std::size_t c = 0; c < d; ++c) g[c] += w[c] / C;
  g[d] = gb;
  return loss;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

double logistic_objective(const Matrix& X, std::span<const std::uint8_t> y, const ProbeConfig& config,
                          std::span<const double> params, std::span<double> grad) {
  if (y.size() != X.rows() || params.size() != X.cols() + 1 || grad.size() != params.size()) {
    throw ValidationError("logistic_objective: shape mismatch");
  }
  std::vector<double> dz;
  return objective_impl(X, y, class_weights_for(y, config.balanced), config.C, params, grad, dz);
}

// ---------------------------------------------------------------------------
// Preconditioner
// ---------------------------------------------------------------------------

Preconditioner Preconditioner::at_model(const Matrix& X, std::span<const std::uint8_t> y, const ProbeConfig& config,
                                        const ProbeModel& at) {
  const auto cw = class_weights_for(y, config.balanced);
  const std::size_t d = X.cols();
  const std::size_t p = d + 1;
  if (at.weights.size() != d) throw ValidationError("preconditioner: model width differs from X");
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  Eigen::VectorXd row(static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const double* x = X.data().data() + r * d;
    const double z = dot_row(x, at.weights.data(), d) + at.bias;
    const double sg = sigmoid(z);
    const double c_r = (y[r] ? cw.second : cw.first) * sg * (1.0 - sg);
    for (std::size_t c = 0; c < d; ++c) row[static_cast<Eigen::Index>(c)] = x[c];
    row[static_cast<Eigen::Index>(d)] = 1.0;
    H.selfadjointView<Eigen::Lower>().rankUpdate(row, c_r);
  }
  for (std::size_t c = 0; c < d; ++c) H(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) += 1.0 / config.C;
  H(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) += 1e-12;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(H);
  if (llt.info() != Eigen::Success) throw std::runtime_error("preconditioner: Hessian is not positive definite");
  Preconditioner pc;
  pc.dim_ = p;
  pc.chol_.assign(p * p, 0.0);
  const Eigen::MatrixXd L = llt.matrixL();
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b <= a; ++b) pc.chol_[a * p + b] = L(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  return pc;
}

void Preconditioner::apply(std::span<const double> g, std::span<double> out) const {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(dim_);
  const Eigen::Map<const RowMajor> L(chol_.data(), n, n);
  Eigen::Map<Eigen::VectorXd> o(out.data(), n);
  o = Eigen::Map<const Eigen::VectorXd>(g.data(), n);
  L.triangularView<Eigen::Lower>().solveInPlace(o);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(o);
}

// ---------------------------------------------------------------------------
// L-BFGS
// ---------------------------------------------------------------------------

ProbeModel fit_logistic(const Matrix& X, std::span<const std::uint8_t> y, const ProbeConfig& config,
                        const ProbeModel* warm_start, const Preconditioner* preconditioner) {
  if (y.size() != X.rows()) throw ValidationError("fit_logistic: label count differs from row count");
  if (!(config.C > 0)) throw ValidationError("fit_logistic: C must be positive");
  const auto cw = class_weights_for(y, config.balanced);
  const std::size_t d = X.cols();
  const std::size_t p = d + 1;

  std::vector<double> x(p, 0.0);
  if (warm_start != nullptr && warm_start->weights.size() == d) {
    std::copy(warm_start->weights.begin(), warm_start->weights.end(), x.begin());
    x[d] = warm_start->bias;
  }
  if (preconditioner != nullptr && preconditioner->dim() != p) preconditioner = nullptr;
  std::vector<double> g(p), x_new(p), g_new(p), dir(p), tmp(p), alpha_buf;
  std::vector<double> dz;
  double f = objective_impl(X, y, cw, config.C, x, g, dz);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> history;
  const auto memory = static_cast<std::size_t>(std::max(1, config.lbfgs_memory));

  ProbeModel model;
  model.C = config.C;
  model.class_weights = cw;
  int iter = 0;
  double gnorm = inf_norm(g);
  while (gnorm > config.grad_tol && iter < config.max_iter) {
    // two-loop recursion
    for (std::size_t k = 0; k < p; ++k) dir[k] = -g[k];
    alpha_buf.assign(history.size(), 0.0);
    for (std::size_t h = history.size(); h-- > 0;) {
      alpha_buf[h] = history[h].rho * dot(history[h].s, dir);
      for (std::size_t k = 0; k < p; ++k) dir[k] -= alpha_buf[h] * history[h].y[k];
    }
    if (preconditioner != nullptr) {
      std::copy(dir.begin(), dir.end(), tmp.begin());
      preconditioner->apply(tmp, dir);
    } else if (!history.empty()) {
      const auto& last = history.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : dir) v *= gamma;
    } else {
      const double scale = 1.0 / std::max(1.0, std::sqrt(dot(g, g)));
      for (double& v : dir) v *= scale;
    }
    for (std::size_t h = 0; h < history.size(); ++h) {
      const double beta = history[h].rho * dot(history[h].y, dir);
      for (std::size_t k = 0; k < p; ++k) dir[k] += (alpha_buf[h] - beta) * history[h].s[k];
    }
    double gd = dot(g, dir);
    if (!(gd < 0)) {
      history.clear();
      preconditioner = nullptr;
      const double scale = 1.0 / std::max(1.0, std::sqrt(dot(g, g)));
      for (std::size_t k = 0; k < p; ++k) dir[k] = -g[k] * scale;
      gd = dot(g, dir);
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    const double f_slack = 8.0 * DBL_EPSILON * std::abs(f);
    for (int halving = 0; halving < 60; ++halving) {
      for (std::size_t k = 0; k < p; ++k) x_new[k] = x[k] + step * dir[k];
      f_new = objective_impl(X, y, cw, config.C, x_new, g_new, dz);
      if (f_new <= f + 1e-4 * step * gd) {
        accepted = true;
        break;
      }
      // Near the optimum the predicted decrease drops below rounding in f.
      if (f_new <= f + f_slack && inf_norm(g_new) < gnorm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iter;
    if (!accepted) break;

    Pair pair{std::vector<double>(p), std::vector<double>(p), 0.0};
    for (std::size_t k = 0; k < p; ++k) {
      pair.s[k] = x_new[k] - x[k];
      pair.y[k] = g_new[k] - g[k];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-16 * dot(pair.y, pair.y) && sy > 0) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (history.size() > memory) history.pop_front();
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    gnorm = inf_norm(g);
  }

  model.weights.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d));
  model.bias = x[d];
  model.iterations = iter;
  model.grad_norm = gnorm;
  model.converged = gnorm <= config.grad_tol;
  return model;
}

double ProbeModel::decision(std::span<const double> x_std) const {
  if (x_std.size() != weights.size()) {
    throw ValidationError("probe: feature width " + std::to_string(x_std.size()) + " != model width " +
                          std::to_string(weights.size()));
  }
  return dot(weights, x_std) + bias;
}

std::vector<double> predict_standardized(const ProbeModel& model, const Matrix& X_std) {
  if (X_std.cols() != model.weights.size()) {
    throw ValidationError("predict_scores: feature width " + std::to_string(X_std.cols()) + " != model width " +
                          std::to_string(model.weights.size()));
  }
  std::vector<double> out(X_std.rows());
  for (std::size_t r = 0; r < X_std.rows(); ++r) out[r] = sigmoid(model.decision(X_std.row(r)));
  return out;
}

std::vector<double> predict_scores(const ProbeModel& model, const Standardizer& standardizer, const Matrix& X) {
  if (standardizer.width() != model.weights.size()) {
    throw ValidationError("predict_scores: standardizer and model widths differ");
  }
  return predict_standardized(model, standardizer.transform(X));
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

std::filesystem::path with_suffix(std::filesystem::path base, const char* suffix) {
  base += suffix;
  return base;
}

}  // namespace

void save_probe(const std::filesystem::path& base, const ProbeModel& model, const Standardizer& standardizer) {
  const std::size_t d = model.weights.size();
  if (d == 0 || standardizer.width() != d) throw ValidationError("save_probe: empty or mismatched model");
  ActivationStore block;
  block.trajectory_id = "probe";
  block.layer_ids = {0, 1, 2};
  block.n_boundaries = 1;
  block.hidden_dim = d;
  block.values.reserve(3 * d);
  for (double v : model.weights) block.values.push_back(static_cast<float>(v));
  for (double v : standardizer.means) block.values.push_back(static_cast<float>(v));
  for (double v : standardizer.scales) block.values.push_back(static_cast<float>(v));
  write_activations(with_suffix(base, ".tcpr"), block);

  Json header = Json::object();
  header["format"] = "tcprobe-logistic";
  header["width"] = d;
  header["bias"] = model.bias;
  header["C"] = model.C;
  header["class_weights"] = {model.class_weights.first, model.class_weights.second};
  header["converged"] = model.converged;
  header["iterations"] = model.iterations;
  header["grad_norm"] = model.grad_norm;
  header["payload_rows"] = {"weights", "means", "scales"};
  std::ofstream out(with_suffix(base, ".json"));
  if (!out) throw ValidationError("save_probe: cannot write " + with_suffix(base, ".json").string());
  out << header.dump(2) << '\n';
}

std::pair<ProbeModel, Standardizer> load_probe(const std::filesystem::path& base) {
  std::ifstream in(with_suffix(base, ".json"));
  if (!in) throw ValidationError("load_probe: cannot open " + with_suffix(base, ".json").string());
  Json header;
  try {
    header = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("load_probe: bad header: ") + e.what());
  }
  const auto block = read_activations(with_suffix(base, ".tcpr"));
  const auto d = header.at("width").get<std::size_t>();
  if (block.hidden_dim != d || block.n_layers() != 3 || block.n_boundaries != 1) {
    throw ValidationError("load_probe: payload shape does not match header width " + std::to_string(d));
  }
  ProbeModel model;
  Standardizer s;
  model.weights.assign(block.values.begin(), block.values.begin() + static_cast<std::ptrdiff_t>(d));
  s.means.assign(block.values.begin() + static_cast<std::ptrdiff_t>(d),
                 block.values.begin() + static_cast<std::ptrdiff_t>(2 * d));
  s.scales.assign(block.values.begin() + static_cast<std::ptrdiff_t>(2 * d), block.values.end());
  model.bias = header.at("bias").get<double>();
  model.C = header.at("C").get<double>();
  model.class_weights = {header.at("class_weights").at(0).get<double>(), header.at("class_weights").at(1).get<double>()};
  model.converged = header.at("converged").get<bool>();
  model.iterations = header.value("iterations", 0);
  model.grad_norm = header.value("grad_norm", 0.0);
  return {std::move(model), std::move(s)};
}

}  // namespace tcprobe
