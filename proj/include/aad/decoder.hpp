#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aad/linmodel.hpp"
#include "aad/trial.hpp"

namespace aad {

// Backward model: maps multichannel EEG to an estimate of the attended
// envelope. Channel labels must match the EEG it is applied to, in order.
struct Decoder {
    Matrix weights; // n_lags x n_channels
    std::vector<double> lag_axis_ms;
    std::vector<std::string> channels;
    double lambda = 0.0;
    std::string subject;
    int cv_folds = 0; // folds used for the lambda search
};

struct DecoderTraining {
    LagConfig lags;
    std::vector<double> lambda_grid = default_lambda_grid();
    int k_folds = 5;
    std::optional<double> fixed_lambda; // bypasses the grid search when set
};

Decoder train_decoder(std::span<const Trial> trials, const DecoderTraining& cfg);

MonoSeries reconstruct(const Decoder& decoder, const MultiSeries& eeg);

// Sample Pearson correlation; throws undefined_correlation on constant input.
double pearson(const MonoSeries& a, const MonoSeries& b);
double pearson(std::span<const double> a, std::span<const double> b);

struct WindowDecision {
    int chosen = 0;
    std::array<double, kNumSpeakers> scores{};
};

// Reconstruct over [start_s, start_s + length_s) and pick the candidate whose
// envelope correlates best; exact ties resolve to the lowest index.
WindowDecision classify_window(const Decoder& decoder, const Trial& trial,
                               double start_s, double length_s);

struct AccuracyRow {
    std::string subject;
    int fold = 0; // index of the held-out trial within the subject
    double window_s = 0.0;
    int n_windows = 0;
    int n_correct = 0;
    int skipped_windows = 0; // undefined-correlation windows, not scored

    double accuracy() const {
        return n_windows > 0 ? static_cast<double>(n_correct) / n_windows : 0.0;
    }
};

struct WindowSummary {
    double window_s = 0.0;
    double mean_accuracy = 0.0; // mean of per-subject accuracies
    double sd_accuracy = 0.0;   // sample SD across subjects
    long pooled_windows = 0;
    long pooled_correct = 0;
    double p_value_vs_chance = 1.0;
};

struct AccuracyTable {
    std::vector<AccuracyRow> rows; // sorted by (subject, fold, window_s)
    std::vector<WindowSummary> summaries;
};

struct EvalOptions {
    std::vector<double> window_lengths_s{1, 2, 5, 10, 20, 30, 60};
    LagConfig lags;
    std::vector<double> lambda_grid = default_lambda_grid();
    int k_folds = 5;
    std::optional<double> fixed_lambda;
    std::vector<std::string> layout_channels; // empty: use every channel
    double chance = 0.25;
    int threads = 0; // 0: hardware concurrency
};

// Leave-one-trial-out evaluation per subject: train on the remaining trials,
// split the held-out trial into non-overlapping windows of each length
// (discarding the final partial one) and classify each.
AccuracyTable evaluate(std::span<const Trial> trials, const EvalOptions& opts);

// Exact one-sided binomial upper tail P[X >= n_correct], X ~ B(n_windows, chance).
double binomial_significance(long n_correct, long n_windows, double chance);

} // namespace aad
