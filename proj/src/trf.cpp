#include "aad/trf.hpp"

#include <cmath>
#include <limits>

#include "aad/kernels.hpp"

namespace aad {

namespace {

double pearson_or_nan(const double* a, const double* b, std::size_t n) {
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

Trf average_trfs(const std::vector<const Trf*>& parts) {
    Trf out;
    out.lag_axis_ms = parts.front()->lag_axis_ms;
    out.channels = parts.front()->channels;
    out.lambda = parts.front()->lambda;
    out.weights = Matrix(parts.front()->weights.rows(), parts.front()->weights.cols());
    const double inv = 1.0 / static_cast<double>(parts.size());
    for (const Trf* t : parts)
        for (std::size_t i = 0; i < out.weights.size(); ++i)
            out.weights.data()[i] += t->weights.data()[i] * inv;
    return out;
}

} // namespace

Trf estimate_trf(const MonoSeries& envelope, const MultiSeries& eeg,
                 const LagConfig& lags, double lambda) {
    if (envelope.fs != eeg.fs)
        fail(ErrorCode::config_error, "estimate_trf: envelope and EEG fs differ");
    if (envelope.samples.size() != eeg.length())
        fail(ErrorCode::config_error, "estimate_trf: envelope and EEG lengths differ");

    const DesignMatrix x = build_lag_matrix(envelope, lags, LagDirection::forward);
    const RidgeSolution sol = ridge_solve(x, eeg.samples, lambda);

    Trf trf;
    trf.lag_axis_ms = lags.lag_axis_ms();
    trf.channels = eeg.channels;
    trf.lambda = lambda;
    // Solution rows are lag-ordered for the single input; one output column
    // per channel.
    trf.weights = sol.weights;
    return trf;
}

MultiSeries predict_response(const Trf& trf, const MonoSeries& envelope) {
    const std::size_t n_lags = trf.weights.rows();
    const std::size_t n_ch = trf.weights.cols();
    const std::size_t t_len = envelope.samples.size();
    if (trf.lag_axis_ms.size() != n_lags)
        fail(ErrorCode::config_error, "predict_response: inconsistent lag axis");

    MultiSeries out{Matrix(t_len, n_ch), envelope.fs, trf.channels};
    for (std::size_t li = 0; li < n_lags; ++li) {
        const int tau = static_cast<int>(std::lround(trf.lag_axis_ms[li] * envelope.fs / 1000.0));
        for (std::size_t t = 0; t < t_len; ++t) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) - tau;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
            const double s = envelope.samples[static_cast<std::size_t>(src)];
            if (s == 0.0) continue;
            kernels::axpy(s, trf.weights.row(li), out.samples.row(t), n_ch);
        }
    }
    return out;
}

PredictScore predict_response_scored(const Trf& trf, const MonoSeries& envelope,
                                     const MultiSeries& observed) {
    if (observed.fs != envelope.fs)
        fail(ErrorCode::config_error, "predict_response: fs mismatch");
    if (observed.length() != envelope.samples.size())
        fail(ErrorCode::config_error, "predict_response: length mismatch");

    PredictScore score;
    score.predicted = predict_response(trf, envelope);
    const std::size_t t_len = observed.length();
    std::vector<double> a(t_len), b(t_len);
    for (std::size_t c = 0; c < observed.n_channels(); ++c) {
        for (std::size_t t = 0; t < t_len; ++t) {
            a[t] = score.predicted.samples(t, c);
            b[t] = observed.samples(t, c);
        }
        score.channel_r.push_back(pearson_or_nan(a.data(), b.data(), t_len));
    }
    return score;
}

double trf_peak(const Trf& trf, double window_lo_ms, double window_hi_ms) {
    double peak = 0.0;
    for (std::size_t li = 0; li < trf.lag_axis_ms.size(); ++li) {
        if (trf.lag_axis_ms[li] < window_lo_ms || trf.lag_axis_ms[li] > window_hi_ms)
            continue;
        for (std::size_t c = 0; c < trf.weights.cols(); ++c)
            peak = std::max(peak, std::abs(trf.weights(li, c)));
    }
    return peak;
}

TrfContrast contrast_trfs(const std::vector<TrialTrfs>& trials) {
    if (trials.empty()) fail(ErrorCode::empty_input, "contrast_trfs: no trials");

    const Trf& ref = trials.front().streams.front();
    for (const TrialTrfs& t : trials)
        for (const Trf& s : t.streams) {
            if (s.lag_axis_ms != ref.lag_axis_ms)
                fail(ErrorCode::schema_error, "contrast_trfs: lag axes differ");
            if (s.channels != ref.channels)
                fail(ErrorCode::schema_error, "contrast_trfs: channel sets differ");
        }

    std::vector<const Trf*> attended;
    std::array<std::vector<const Trf*>, kNumSpeakers - 1> unatt_by_pos;
    std::vector<Trf> unatt_means; // per-trial mean of the three unattended
    unatt_means.reserve(trials.size());

    for (const TrialTrfs& t : trials) {
        attended.push_back(&t.streams[static_cast<std::size_t>(t.attended_index)]);
        std::vector<const Trf*> others;
        for (int s = 0; s < kNumSpeakers; ++s)
            if (s != t.attended_index) others.push_back(&t.streams[static_cast<std::size_t>(s)]);
        for (std::size_t p = 0; p < others.size(); ++p) unatt_by_pos[p].push_back(others[p]);
        unatt_means.push_back(average_trfs(others));
    }

    TrfContrast contrast;
    contrast.attended = average_trfs(attended);
    std::vector<const Trf*> unatt_ptrs;
    for (const Trf& t : unatt_means) unatt_ptrs.push_back(&t);
    contrast.unattended = average_trfs(unatt_ptrs);
    for (const auto& pos : unatt_by_pos)
        contrast.unattended_streams.push_back(average_trfs(pos));
    contrast.attended_peak = trf_peak(contrast.attended);
    contrast.unattended_peak = trf_peak(contrast.unattended);
    return contrast;
}

} // namespace aad
