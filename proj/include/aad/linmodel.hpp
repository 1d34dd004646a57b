#pragma once

#include <span>
#include <string>
#include <vector>

#include "aad/series.hpp"

namespace aad {

// Lag window in milliseconds; integer tap indices are derived by rounding
// ms * fs / 1000 to the nearest sample.
struct LagConfig {
    double lag_min_ms = -50.0;
    double lag_max_ms = 450.0;
    double fs = 64.0;

    int tau_min() const;
    int tau_max() const;
    int n_lags() const { return tau_max() - tau_min() + 1; }
    std::vector<double> lag_axis_ms() const;
    void check() const;
};

enum class LagDirection { forward, backward };

// T x (n_lags * n_inputs) matrix of time-shifted input copies, zero-padded at
// the edges. Columns are ordered input-major, lag-minor.
struct DesignMatrix {
    Matrix values;
    LagConfig lags;
    LagDirection direction = LagDirection::forward;
    std::size_t n_inputs = 1;
    std::vector<std::string> input_labels;
};

DesignMatrix build_lag_matrix(const MonoSeries& x, const LagConfig& lags, LagDirection dir);
DesignMatrix build_lag_matrix(const MultiSeries& x, const LagConfig& lags, LagDirection dir);

struct RidgeSolution {
    Matrix weights;          // (n_lags * n_inputs) x n_outputs
    double lambda = 0.0;     // grid value as passed in
    double lambda_scale = 0.0; // mean Gram diagonal used to scale it
};

// argmin ||Y - X W||^2 + lambda * mean(diag(X^T X)) * ||W||^2 via the normal
// equations and a Cholesky factorization.
RidgeSolution ridge_solve(const DesignMatrix& x, const Matrix& y, double lambda);

struct LambdaChoice {
    double lambda = 0.0;
    std::vector<double> mean_scores; // one per grid entry, grid order
};

// Contiguous-block k-fold cross-validation over the time axis; scores are
// Pearson correlations between held-out predictions and targets, averaged
// over outputs and folds. Ties within 1e-12 resolve to the smaller lambda.
LambdaChoice select_lambda(const DesignMatrix& x, const Matrix& y,
                           std::span<const double> grid, int k_folds);

// Precomputed normal equations G = X^T X, B = X^T Y. Lets callers reuse the
// Gram accumulation across lambda values and CV folds.
struct NormalEq {
    Matrix g; // cols x cols
    Matrix b; // cols x n_outputs
    std::size_t rows = 0;

    void subtract(const NormalEq& other);
};

NormalEq build_normal_eq(const Matrix& x, const Matrix& y,
                         std::size_t row_begin, std::size_t row_end);

// Solve (G + lambda * mean(diag G) * I) W = B. Throws rank_deficient when the
// regularized matrix is not positive definite.
Matrix solve_normal_eq(const NormalEq& eq, double lambda, double* lambda_scale = nullptr);

inline const std::vector<double>& default_lambda_grid() {
    static const std::vector<double> grid{1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6};
    return grid;
}

} // namespace aad
