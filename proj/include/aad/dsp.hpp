#pragma once

#include <vector>

#include "aad/series.hpp"

namespace aad {

// Band edges and order of the recursive band-pass applied in each direction.
// `order` is the analog prototype order; the digital band-pass has 2*order poles.
struct BandpassSpec {
    double low_hz = 2.0;
    double high_hz = 8.0;
    int order = 4;
};

struct Biquad {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0; // numerator
    double a1 = 0.0, a2 = 0.0;           // denominator (a0 == 1)
};

struct FilterCoeffs {
    std::vector<double> b; // expanded numerator, b[0] first
    std::vector<double> a; // expanded denominator, a[0] == 1
    // Filtering runs through the cascade; the expanded polynomials above are
    // kept for response evaluation, where narrow bands make the direct form
    // numerically unusable.
    std::vector<Biquad> sections;
    double max_pole_radius = 0.0;

    int order() const noexcept { return static_cast<int>(a.size()) - 1; }
    // Reflection padding long enough that the slowest pole decays below ~1e-12,
    // so the zero-phase pass commutes with time reversal at that level.
    int pad_length() const noexcept;
};

// Butterworth band-pass via the bilinear transform, unit gain at the
// geometric-mean frequency sqrt(low*high).
FilterCoeffs design_bandpass(const BandpassSpec& spec, double fs);

// |H(e^{i 2 pi f / fs})| for a single pass of the filter.
double filter_gain_at(const FilterCoeffs& coeffs, double freq_hz, double fs);

// Forward-backward (zero net phase) application with odd-symmetric edge
// padding and steady-state initial conditions on each pass.
MonoSeries filtfilt(const MonoSeries& x, const FilterCoeffs& coeffs);
MultiSeries filtfilt(const MultiSeries& x, const FilterCoeffs& coeffs);

// Rational-ratio polyphase resampler (Kaiser-windowed sinc, per-phase DC
// normalization). Output length = round(T * target_fs / fs).
MonoSeries resample(const MonoSeries& x, double target_fs);
MultiSeries resample(const MultiSeries& x, double target_fs);

MultiSeries common_average_reference(const MultiSeries& eeg);

// Whole-record per-channel mean subtraction.
MultiSeries baseline_correct(const MultiSeries& eeg);

// Magnitude of the frequency-domain analytic signal.
MonoSeries hilbert_envelope(const MonoSeries& audio);

// EEG path: CAR (optional) -> zero-phase band-pass -> baseline -> resample.
MultiSeries preprocess_chain(const MultiSeries& eeg, const BandpassSpec& band,
                             double target_fs, bool car);

// Envelope path: analytic-signal magnitude -> optional power-law compression
// -> same band-pass -> resample. No CAR.
MonoSeries preprocess_envelope(const MonoSeries& audio, const BandpassSpec& band,
                               double target_fs, double power_exponent = 1.0);

} // namespace aad
