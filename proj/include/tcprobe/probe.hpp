#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "tcprobe/trajlog.hpp"

namespace tcprobe {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Rows picked by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> rows) const;
  /// [this | other], row by row.
  Matrix hconcat(const Matrix& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Per-column centring and scaling with the population standard deviation.
/// Columns without spread keep scale 1.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> scales;

  static Standardizer fit(const Matrix& rows);
  std::size_t width() const { return means.size(); }
  void transform_inplace(Matrix& rows) const;
  Matrix transform(const Matrix& rows) const;
};

struct ProbeConfig {
  /// Inverse regularisation strength; smaller is stronger.
  double C = 0.01;
  /// Class weights n / (2 n_c) when true, all ones otherwise.
  bool balanced = true;
  double grad_tol = 1e-6;
  int max_iter = 2000;
  int lbfgs_memory = 10;
};

struct ProbeModel {
  std::vector<double> weights;
  double bias = 0.0;
  double C = 0.01;
  /// Multipliers for label 0 and label 1.
  std::pair<double, double> class_weights{1.0, 1.0};
  bool converged = false;
  int iterations = 0;
  /// Infinity norm of the objective gradient at the returned point.
  double grad_norm = 0.0;

  double decision(std::span<const double> x_std) const;
};

/// Inverse of a fixed SPD approximation of the objective Hessian, used as the
/// initial inverse-Hessian of L-BFGS. It changes the path, never the optimum.
class Preconditioner {
 public:
  /// Hessian of the objective at `at` over X (standardised), factorised.
  static Preconditioner at_model(const Matrix& X, std::span<const std::uint8_t> y, const ProbeConfig& config,
                                 const ProbeModel& at);
  std::size_t dim() const { return dim_; }
  /// out = H^{-1} g
  void apply(std::span<const double> g, std::span<double> out) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> chol_;  // lower factor, row-major dim x dim
};

/// Weighted logistic loss plus (1 / 2C) * ||w||^2 (bias unpenalised) and its
/// gradient, laid out as [w..., b]. Exposed for finite-difference checks.
double logistic_objective(const Matrix& X, std::span<const std::uint8_t> y, const ProbeConfig& config,
                          std::span<const double> params, std::span<double> grad);

/// Minimises the objective with L-BFGS and Armijo backtracking. X must already
/// be standardised. Throws SingleClassError when y has one class. A warm
/// start only changes the initial point, never the optimum being sought.
ProbeModel fit_logistic(const Matrix& X, std::span<const std::uint8_t> y, const ProbeConfig& config = {},
                        const ProbeModel* warm_start = nullptr, const Preconditioner* preconditioner = nullptr);

/// Logistic probabilities for already standardised rows.
std::vector<double> predict_standardized(const ProbeModel& model, const Matrix& X_std);
/// Standardises raw rows, then scores them.
std::vector<double> predict_scores(const ProbeModel& model, const Standardizer& standardizer, const Matrix& X);

double sigmoid(double z);

/// Writes <base>.json (config and flags) and <base>.tcpr holding three
/// float32 rows: weights, means, scales.
void save_probe(const std::filesystem::path& base, const ProbeModel& model, const Standardizer& standardizer);
std::pair<ProbeModel, Standardizer> load_probe(const std::filesystem::path& base);

}  // namespace tcprobe
