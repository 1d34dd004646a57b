#include "aad/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "aad/dsp.hpp"

namespace aad {

namespace {

constexpr std::uint64_t kEnvelopeStream = 0x1;
constexpr std::uint64_t kKernelStream = 0x2;
constexpr std::uint64_t kNoiseStream = 0x3;
constexpr std::uint64_t kAttendedStream = 0x4;

std::uint64_t trial_seed(const SynthConfig& c, int subject, int trial_id,
                         std::uint64_t stream) {
    const std::uint64_t a = SplitMix64::mix(c.seed, static_cast<std::uint64_t>(subject) + 1);
    const std::uint64_t b = SplitMix64::mix(a, static_cast<std::uint64_t>(trial_id) + 1);
    return SplitMix64::mix(b, stream);
}

std::uint64_t subject_seed(const SynthConfig& c, int subject, std::uint64_t stream) {
    const std::uint64_t a = SplitMix64::mix(c.seed, static_cast<std::uint64_t>(subject) + 1);
    return SplitMix64::mix(a, stream);
}

// Gabor-like bump over the lag axis: Gaussian of width kernel_width_ms
// centered at the latency, with a slow cosine carrier.
double kernel_shape(double lag_ms, double latency_ms, double width_ms) {
    const double sigma = width_ms / 2.0;
    const double u = (lag_ms - latency_ms) / sigma;
    return std::exp(-0.5 * u * u) *
           std::cos(2.0 * std::numbers::pi * (lag_ms - latency_ms) / (4.0 * width_ms));
}

// The envelopes only excite the 1-10 Hz band (plus DC), so ground-truth
// kernels must live in that band for forward-model estimates to be able to
// recover them. Render the bump on a long buffer, band-limit it with the
// same zero-phase filter the envelopes use, and cut out the lag window.
std::vector<double> bandlimited_kernel_taps(const LagConfig& lags, double latency_ms,
                                            double width_ms) {
    const double fs = lags.fs;
    const int n_lags = lags.n_lags();
    const int pad = 256;
    MonoSeries buf{std::vector<double>(static_cast<std::size_t>(n_lags + 2 * pad), 0.0), fs};
    for (int i = 0; i < n_lags; ++i) {
        const double lag_ms = 1000.0 * (lags.tau_min() + i) / fs;
        buf.samples[static_cast<std::size_t>(pad + i)] =
            kernel_shape(lag_ms, latency_ms, width_ms);
    }
    buf = filtfilt(buf, design_bandpass({1.0, 10.0, 4}, fs));
    return {buf.samples.begin() + pad, buf.samples.begin() + pad + n_lags};
}

// Economy pink-noise shaping (Kellet): three leaky integrators over white input.
struct PinkFilter {
    double b0 = 0, b1 = 0, b2 = 0;
    double operator()(double white) {
        b0 = 0.99765 * b0 + white * 0.0990460;
        b1 = 0.96300 * b1 + white * 0.2965164;
        b2 = 0.57000 * b2 + white * 1.0526913;
        return b0 + b1 + b2 + white * 0.1848;
    }
};

} // namespace

void SynthConfig::check() const {
    if (n_subjects < 1 || trials_per_subject < 1)
        fail(ErrorCode::invalid_spec, "synth: need at least one subject and trial");
    if (!(fs > 0.0) || trial_length_s < 1.0)
        fail(ErrorCode::invalid_spec, "synth: invalid fs or trial length");
    if (n_channels < 1 || noise_channels < 0)
        fail(ErrorCode::invalid_spec, "synth: invalid channel counts");
    if (!(attended_gain > 0.0) || !(unattended_gain > 0.0))
        fail(ErrorCode::invalid_spec, "synth: gains must be positive");
    if (!std::isfinite(snr_db)) fail(ErrorCode::invalid_spec, "synth: snr_db must be finite");
}

std::vector<std::string> SynthConfig::channel_labels() const {
    std::vector<std::string> labels;
    if (n_channels == 20) {
        // cEEGrid-style naming: two 10-electrode arrays around the ears.
        for (int i = 1; i <= 10; ++i) labels.push_back("L" + std::to_string(i));
        for (int i = 1; i <= 10; ++i) labels.push_back("R" + std::to_string(i));
    } else {
        for (int i = 1; i <= n_channels; ++i) labels.push_back("C" + std::to_string(i));
    }
    for (int i = 1; i <= noise_channels; ++i) labels.push_back("N" + std::to_string(i));
    return labels;
}

std::string synth_subject_name(int subject) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "S%02d", subject + 1);
    return buf;
}

MonoSeries generate_envelope(double length_s, double fs, std::uint64_t seed) {
    if (length_s < 1.0)
        fail(ErrorCode::invalid_spec, "generate_envelope: length must be at least 1 s");
    const std::size_t n = static_cast<std::size_t>(std::llround(length_s * fs));
    SplitMix64 rng(seed);

    MonoSeries env{std::vector<double>(n), fs};
    for (double& v : env.samples) v = std::max(rng.gaussian(), 0.0);

    const FilterCoeffs band = design_bandpass({1.0, 10.0, 4}, fs);
    env = filtfilt(env, band);

    // Shift up by a fixed four standard deviations (clipping the rare deeper
    // dips) rather than by the sample minimum: an extreme-value shift would
    // make the envelope's mean/sd ratio fluctuate strongly across seeds,
    // which in turn would scramble the attended/unattended gain ratio in the
    // generated mixtures.
    double mean = 0.0;
    for (double v : env.samples) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : env.samples) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));

    double power = 0.0;
    for (double& v : env.samples) {
        v = std::max(v - mean + 4.0 * sd, 0.0);
        power += v * v;
    }
    const double rms = std::sqrt(power / static_cast<double>(n));
    if (rms > 0.0)
        for (double& v : env.samples) v /= rms;
    return env;
}

std::pair<Trial, TrialTruth> generate_trial(const SynthConfig& config, int subject,
                                            int trial_id) {
    config.check();
    const double fs = config.fs;
    const std::size_t t_len = static_cast<std::size_t>(std::llround(config.trial_length_s * fs));
    const int n_info = config.n_channels;
    const int n_total = config.total_channels();

    TrialTruth truth;
    truth.lags = LagConfig{-50.0, 450.0, fs};
    const std::vector<double> lag_axis = truth.lags.lag_axis_ms();
    const std::size_t n_lags = lag_axis.size();

    // One kernel per channel, a per-subject property shared by all four
    // streams; attention only scales it. Each channel gets its own sign and
    // +-20% amplitude jitter.
    SplitMix64 kernel_rng(subject_seed(config, subject, kKernelStream));
    const std::vector<double> taps =
        bandlimited_kernel_taps(truth.lags, config.kernel_latency_ms, config.kernel_width_ms);
    Matrix base_kernel(n_lags, static_cast<std::size_t>(n_total));
    for (int c = 0; c < n_info; ++c) {
        const double sign = kernel_rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double amp = sign * (1.0 + 0.4 * (kernel_rng.uniform() - 0.5));
        for (std::size_t li = 0; li < n_lags; ++li)
            base_kernel(li, static_cast<std::size_t>(c)) = amp * taps[li];
    }

    Trial trial;
    trial.meta.subject = synth_subject_name(subject);
    trial.meta.trial_id = trial_id;
    trial.meta.azimuth_deg = kSpeakerAzimuthsDeg;

    for (int s = 0; s < kNumSpeakers; ++s)
        trial.candidates[static_cast<std::size_t>(s)] = generate_envelope(
            config.trial_length_s, fs,
            trial_seed(config, subject, trial_id,
                       kEnvelopeStream + 16 * static_cast<std::uint64_t>(s)));

    SplitMix64 attended_rng(trial_seed(config, subject, trial_id, kAttendedStream));
    trial.attended_index = static_cast<int>(attended_rng.next() % kNumSpeakers);

    for (int s = 0; s < kNumSpeakers; ++s) {
        const double gain =
            s == trial.attended_index ? config.attended_gain : config.unattended_gain;
        Matrix k = base_kernel;
        for (std::size_t i = 0; i < k.size(); ++i) k.data()[i] *= gain;
        truth.kernels[static_cast<std::size_t>(s)] = std::move(k);
    }

    // EEG = sum of forward convolutions (Eq. 1 as the generative model); with
    // a shared kernel the gain-weighted envelope mix convolves once.
    std::vector<double> mix(t_len, 0.0);
    for (int s = 0; s < kNumSpeakers; ++s) {
        const double gain =
            s == trial.attended_index ? config.attended_gain : config.unattended_gain;
        const auto& env = trial.candidates[static_cast<std::size_t>(s)].samples;
        for (std::size_t t = 0; t < t_len; ++t) mix[t] += gain * env[t];
    }

    Matrix eeg(t_len, static_cast<std::size_t>(n_total));
    const int tau_min = truth.lags.tau_min();
    for (std::size_t li = 0; li < n_lags; ++li) {
        const int tau = tau_min + static_cast<int>(li);
        const double* krow = base_kernel.row(li);
        for (std::size_t t = 0; t < t_len; ++t) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) - tau;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
            const double sv = mix[static_cast<std::size_t>(src)];
            double* row = eeg.row(t);
            for (int c = 0; c < n_info; ++c) row[c] += sv * krow[c];
        }
    }

    // White (or optionally pink) observation noise scaled to snr_db relative
    // to the per-channel mean power of the signal mixture.
    double signal_power = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        const double* row = eeg.row(t);
        for (int c = 0; c < n_info; ++c) signal_power += row[c] * row[c];
    }
    signal_power /= static_cast<double>(t_len * static_cast<std::size_t>(n_info));
    const double noise_sigma = std::sqrt(signal_power * std::pow(10.0, -config.snr_db / 10.0));

    SplitMix64 noise_rng(trial_seed(config, subject, trial_id, kNoiseStream));
    if (config.pink_noise) {
        std::vector<PinkFilter> filters(static_cast<std::size_t>(n_total));
        // Normalize the shaping gain so the noise power still matches snr_db.
        double ref = 0.0;
        {
            PinkFilter f;
            SplitMix64 probe(0x9e3779b97f4a7c15ULL);
            for (int i = 0; i < 4096; ++i) {
                const double v = f(probe.gaussian());
                ref += v * v;
            }
            ref = std::sqrt(ref / 4096.0);
        }
        for (std::size_t t = 0; t < t_len; ++t) {
            double* row = eeg.row(t);
            for (int c = 0; c < n_total; ++c)
                row[c] += noise_sigma / ref *
                          filters[static_cast<std::size_t>(c)](noise_rng.gaussian());
        }
    } else {
        for (std::size_t t = 0; t < t_len; ++t) {
            double* row = eeg.row(t);
            for (int c = 0; c < n_total; ++c) row[c] += noise_sigma * noise_rng.gaussian();
        }
    }

    trial.eeg = MultiSeries{std::move(eeg), fs, config.channel_labels()};
    return {std::move(trial), std::move(truth)};
}

std::vector<Trial> generate_dataset(const SynthConfig& config) {
    config.check();
    std::vector<Trial> trials;
    trials.reserve(static_cast<std::size_t>(config.n_subjects) *
                   static_cast<std::size_t>(config.trials_per_subject));
    for (int s = 0; s < config.n_subjects; ++s)
        for (int t = 0; t < config.trials_per_subject; ++t)
            trials.push_back(generate_trial(config, s, t).first);
    return trials;
}

} // namespace aad
