#include "aad/linmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aad/kernels.hpp"

namespace aad {

namespace {

// Lower Cholesky factor in place (row-major); the inner products run through
// the vectorized dot kernel. Returns false when a pivot falls below the
// round-off floor of the working precision, i.e. the matrix is numerically
// semidefinite.
bool cholesky_in_place(Matrix& a) {
    const std::size_t n = a.rows();
    double max_diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) max_diag = std::max(max_diag, a(j, j));
    const double tol = static_cast<double>(n) * 1e-14 * max_diag;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j) - kernels::dot(a.row(j), a.row(j), j);
        if (!(d > tol)) return false;
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        const double inv = 1.0 / ljj;
        for (std::size_t i = j + 1; i < n; ++i)
            a(i, j) = (a(i, j) - kernels::dot(a.row(i), a.row(j), j)) * inv;
    }
    // Zero the strict upper triangle so the factor is self-contained.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
    return true;
}

// Solve L L^T X = B with B overwritten column by column.
void cholesky_solve(const Matrix& l, Matrix& b) {
    const std::size_t n = l.rows();
    const std::size_t m = b.cols();
    std::vector<double> col(n);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < n; ++i) col[i] = b(i, k);
        for (std::size_t i = 0; i < n; ++i)
            col[i] = (col[i] - kernels::dot(l.row(i), col.data(), i)) / l(i, i);
        for (std::size_t i = n; i-- > 0;) {
            double acc = col[i];
            for (std::size_t j = i + 1; j < n; ++j) acc -= l(j, i) * col[j];
            col[i] = acc / l(i, i);
        }
        for (std::size_t i = 0; i < n; ++i) b(i, k) = col[i];
    }
}

void fill_lag_columns(const double* x, std::size_t t_len, std::size_t stride,
                      Matrix& out, std::size_t col_base, const LagConfig& lags,
                      LagDirection dir) {
    const int tmin = lags.tau_min();
    const int tmax = lags.tau_max();
    for (int tau = tmin; tau <= tmax; ++tau) {
        const std::size_t col = col_base + static_cast<std::size_t>(tau - tmin);
        // forward: row t holds x(t - tau); backward: x(t + tau)
        const std::ptrdiff_t shift = dir == LagDirection::forward ? -tau : tau;
        for (std::size_t t = 0; t < t_len; ++t) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + shift;
            out(t, col) = (src >= 0 && src < static_cast<std::ptrdiff_t>(t_len))
                              ? x[static_cast<std::size_t>(src) * stride]
                              : 0.0;
        }
    }
}

double pearson_raw(const double* a, const double* b, std::size_t n) {
    const double ma = kernels::sum(a, n) / static_cast<double>(n);
    const double mb = kernels::sum(b, n) / static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

} // namespace

int LagConfig::tau_min() const {
    return static_cast<int>(std::lround(lag_min_ms * fs / 1000.0));
}

int LagConfig::tau_max() const {
    return static_cast<int>(std::lround(lag_max_ms * fs / 1000.0));
}

std::vector<double> LagConfig::lag_axis_ms() const {
    std::vector<double> axis;
    for (int tau = tau_min(); tau <= tau_max(); ++tau)
        axis.push_back(1000.0 * tau / fs);
    return axis;
}

void LagConfig::check() const {
    if (!(fs > 0.0)) fail(ErrorCode::invalid_spec, "LagConfig: fs must be positive");
    if (!(lag_min_ms < lag_max_ms))
        fail(ErrorCode::invalid_spec, "LagConfig: lag_min_ms must be below lag_max_ms");
    if (tau_min() > tau_max())
        fail(ErrorCode::invalid_spec, "LagConfig: empty lag range after rounding");
}

DesignMatrix build_lag_matrix(const MonoSeries& x, const LagConfig& lags, LagDirection dir) {
    lags.check();
    if (x.fs != lags.fs)
        fail(ErrorCode::config_error, "build_lag_matrix: series fs " + std::to_string(x.fs) +
                                          " does not match lag config fs " +
                                          std::to_string(lags.fs));
    DesignMatrix d;
    d.lags = lags;
    d.direction = dir;
    d.n_inputs = 1;
    d.input_labels = {"x"};
    d.values = Matrix(x.samples.size(), static_cast<std::size_t>(lags.n_lags()));
    fill_lag_columns(x.samples.data(), x.samples.size(), 1, d.values, 0, lags, dir);
    return d;
}

DesignMatrix build_lag_matrix(const MultiSeries& x, const LagConfig& lags, LagDirection dir) {
    lags.check();
    if (x.fs != lags.fs)
        fail(ErrorCode::config_error, "build_lag_matrix: series fs does not match lag config");
    const std::size_t n_lags = static_cast<std::size_t>(lags.n_lags());
    DesignMatrix d;
    d.lags = lags;
    d.direction = dir;
    d.n_inputs = x.n_channels();
    d.input_labels = x.channels;
    d.values = Matrix(x.length(), n_lags * x.n_channels());
    for (std::size_t c = 0; c < x.n_channels(); ++c)
        fill_lag_columns(x.samples.data() + c, x.length(), x.n_channels(), d.values,
                         c * n_lags, lags, dir);
    return d;
}

void NormalEq::subtract(const NormalEq& other) {
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] -= other.g.data()[i];
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] -= other.b.data()[i];
    rows -= other.rows;
}

NormalEq build_normal_eq(const Matrix& x, const Matrix& y,
                         std::size_t row_begin, std::size_t row_end) {
    const std::size_t cols = x.cols();
    NormalEq eq;
    eq.g = Matrix(cols, cols);
    eq.b = Matrix(cols, y.cols());
    eq.rows = row_end - row_begin;
    kernels::gram_upper(x.row(row_begin), eq.rows, cols, eq.g.data());
    kernels::symmetrize(eq.g.data(), cols);
    kernels::xty(x.row(row_begin), y.row(row_begin), eq.rows, cols, y.cols(), eq.b.data());
    return eq;
}

Matrix solve_normal_eq(const NormalEq& eq, double lambda, double* lambda_scale) {
    const std::size_t n = eq.g.rows();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += eq.g(i, i);
    scale /= static_cast<double>(n);
    if (lambda_scale) *lambda_scale = scale;

    Matrix a = eq.g;
    const double ridge = lambda * scale;
    for (std::size_t i = 0; i < n; ++i) a(i, i) += ridge;

    if (!cholesky_in_place(a))
        fail(ErrorCode::rank_deficient,
             "ridge: normal equations are singular; increase lambda");
    Matrix w = eq.b;
    cholesky_solve(a, w);
    return w;
}

RidgeSolution ridge_solve(const DesignMatrix& x, const Matrix& y, double lambda) {
    if (x.values.rows() != y.rows())
        fail(ErrorCode::config_error, "ridge_solve: X and Y row counts differ");
    if (lambda < 0.0) fail(ErrorCode::invalid_spec, "ridge_solve: lambda must be >= 0");
    const NormalEq eq = build_normal_eq(x.values, y, 0, x.values.rows());
    RidgeSolution sol;
    sol.lambda = lambda;
    sol.weights = solve_normal_eq(eq, lambda, &sol.lambda_scale);
    return sol;
}

LambdaChoice select_lambda(const DesignMatrix& x, const Matrix& y,
                           std::span<const double> grid, int k_folds) {
    const std::size_t rows = x.values.rows();
    if (grid.empty()) fail(ErrorCode::invalid_spec, "select_lambda: empty grid");
    if (k_folds < 2) fail(ErrorCode::invalid_spec, "select_lambda: need at least 2 folds");
    if (rows < static_cast<std::size_t>(k_folds))
        fail(ErrorCode::invalid_spec, "select_lambda: fewer samples than folds");
    if (x.values.rows() != y.rows())
        fail(ErrorCode::config_error, "select_lambda: X and Y row counts differ");

    const std::size_t k = static_cast<std::size_t>(k_folds);
    std::vector<std::size_t> bounds(k + 1);
    for (std::size_t f = 0; f <= k; ++f) bounds[f] = rows * f / k;

    std::vector<NormalEq> blocks;
    blocks.reserve(k);
    NormalEq total;
    for (std::size_t f = 0; f < k; ++f) {
        blocks.push_back(build_normal_eq(x.values, y, bounds[f], bounds[f + 1]));
        if (f == 0) {
            total = blocks[0];
        } else {
            for (std::size_t i = 0; i < total.g.size(); ++i)
                total.g.data()[i] += blocks[f].g.data()[i];
            for (std::size_t i = 0; i < total.b.size(); ++i)
                total.b.data()[i] += blocks[f].b.data()[i];
            total.rows += blocks[f].rows;
        }
    }

    const std::size_t n_out = y.cols();
    std::vector<double> score_sum(grid.size(), 0.0);
    std::vector<std::size_t> score_cnt(grid.size(), 0);
    std::vector<double> yhat;

    for (std::size_t f = 0; f < k; ++f) {
        NormalEq train = total;
        train.subtract(blocks[f]);
        const std::size_t t0 = bounds[f], t1 = bounds[f + 1];
        const std::size_t t_len = t1 - t0;
        yhat.assign(t_len * n_out, 0.0);

        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            const Matrix w = solve_normal_eq(train, grid[gi], nullptr);
            // Held-out prediction, one output at a time.
            for (std::size_t o = 0; o < n_out; ++o) {
                std::vector<double> wcol(w.rows());
                for (std::size_t c = 0; c < w.rows(); ++c) wcol[c] = w(c, o);
                for (std::size_t t = 0; t < t_len; ++t)
                    yhat[t * n_out + o] =
                        kernels::dot(x.values.row(t0 + t), wcol.data(), w.rows());
            }
            for (std::size_t o = 0; o < n_out; ++o) {
                std::vector<double> pred(t_len), obs(t_len);
                for (std::size_t t = 0; t < t_len; ++t) {
                    pred[t] = yhat[t * n_out + o];
                    obs[t] = y(t0 + t, o);
                }
                const double r = pearson_raw(pred.data(), obs.data(), t_len);
                if (std::isfinite(r)) {
                    score_sum[gi] += r;
                    ++score_cnt[gi];
                }
            }
        }
    }

    LambdaChoice choice;
    choice.mean_scores.resize(grid.size());
    bool any = false;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        choice.mean_scores[gi] = score_cnt[gi] > 0
                                     ? score_sum[gi] / static_cast<double>(score_cnt[gi])
                                     : std::numeric_limits<double>::quiet_NaN();
        any = any || score_cnt[gi] > 0;
    }
    if (!any)
        fail(ErrorCode::degenerate_target,
             "select_lambda: all validation correlations are undefined");

    // Scan in ascending-lambda order so ties keep the smaller value.
    std::vector<std::size_t> order(grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });
    std::size_t best = order[0];
    for (std::size_t oi = 1; oi < order.size(); ++oi) {
        const std::size_t gi = order[oi];
        const double s = choice.mean_scores[gi];
        const double cur = choice.mean_scores[best];
        if (std::isnan(cur) || (std::isfinite(s) && s > cur + 1e-12)) best = gi;
    }
    choice.lambda = grid[best];
    return choice;
}

} // namespace aad
