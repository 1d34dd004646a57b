#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "aad/linmodel.hpp"
#include "aad/trial.hpp"

namespace aad {

// SplitMix64: the fixed, named generator behind every synthetic draw, so a
// (seed, subject, trial) triple reproduces the same bytes on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1].
    double uniform() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

    // Standard normal via the Marsaglia polar transform.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        SplitMix64 rng(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
        return rng.next();
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct SynthConfig {
    int n_subjects = 16;
    int trials_per_subject = 6;
    double trial_length_s = 60.0;
    double fs = 64.0;
    int n_channels = 20;
    int noise_channels = 0;       // extra signal-free channels appended after
                                  // the informative ones
    double attended_gain = 1.5;
    double unattended_gain = 1.0;
    double kernel_latency_ms = 150.0;
    double kernel_width_ms = 60.0;
    double snr_db = 0.0;
    std::uint64_t seed = 1;
    bool pink_noise = false;

    void check() const;
    int total_channels() const { return n_channels + noise_channels; }
    std::vector<std::string> channel_labels() const;
};

// Surrogate speech envelope: half-wave-rectified white noise, band-passed to
// 1-10 Hz, shifted to min 0 and scaled to unit RMS. Deterministic per seed.
MonoSeries generate_envelope(double length_s, double fs, std::uint64_t seed);

// Ground-truth forward kernels for one trial (per stream, n_lags x channels).
struct TrialTruth {
    std::array<Matrix, kNumSpeakers> kernels;
    LagConfig lags;
};

std::pair<Trial, TrialTruth> generate_trial(const SynthConfig& config, int subject,
                                            int trial_id);

std::vector<Trial> generate_dataset(const SynthConfig& config);

std::string synth_subject_name(int subject);

} // namespace aad
