#pragma once

#include <array>
#include <vector>

#include "aad/linmodel.hpp"
#include "aad/trial.hpp"

namespace aad {

// Forward model: channel-specific filters mapping the stimulus envelope to
// the EEG response, one column per channel, one row per lag.
struct Trf {
    Matrix weights; // n_lags x n_channels
    std::vector<double> lag_axis_ms;
    std::vector<std::string> channels;
    double lambda = 0.0;
};

Trf estimate_trf(const MonoSeries& envelope, const MultiSeries& eeg,
                 const LagConfig& lags, double lambda);

// Forward convolution of the TRF with an envelope; zero-padded edges.
MultiSeries predict_response(const Trf& trf, const MonoSeries& envelope);

// Same, plus per-channel Pearson correlations against an observed recording.
struct PredictScore {
    MultiSeries predicted;
    std::vector<double> channel_r;
};
PredictScore predict_response_scored(const Trf& trf, const MonoSeries& envelope,
                                     const MultiSeries& observed);

// Per-trial TRFs for all four streams, estimated with a shared lambda.
struct TrialTrfs {
    int attended_index = 0;
    std::array<Trf, kNumSpeakers> streams;
};

// Attended-vs-unattended grand averages. The peak statistic is the maximum
// absolute weight inside the 50-300 ms lag window.
struct TrfContrast {
    Trf attended;
    Trf unattended;               // mean over the three unattended streams
    std::vector<Trf> unattended_streams; // 3 entries, relative stream order
    double attended_peak = 0.0;
    double unattended_peak = 0.0;
};

TrfContrast contrast_trfs(const std::vector<TrialTrfs>& trials);

double trf_peak(const Trf& trf, double window_lo_ms = 50.0, double window_hi_ms = 300.0);

} // namespace aad
