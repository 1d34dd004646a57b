#include "aad/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>

namespace aad {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Expand prod (z - roots[k]) into monic polynomial coefficients.
std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots) {
    std::vector<cplx> coeffs{1.0};
    for (const cplx& r : roots) {
        coeffs.push_back(0.0);
        for (std::size_t i = coeffs.size() - 1; i > 0; --i)
            coeffs[i] -= r * coeffs[i - 1];
    }
    return coeffs;
}

cplx polyval(const std::vector<double>& coeffs, cplx z) {
    cplx acc = 0.0;
    for (double c : coeffs) acc = acc * z + c;
    return acc;
}

// One transposed-direct-form-II biquad pass, in place. Narrow analysis bands
// at high sampling rates make the expanded direct form lose ~5 digits, so all
// filtering runs through the section cascade.
void biquad_pass(const Biquad& s, double* x, std::size_t n, double z0, double z1) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double yi = s.b0 * xi + z0;
        z0 = s.b1 * xi + z1 - s.a1 * yi;
        z1 = s.b2 * xi - s.a2 * yi;
        x[i] = yi;
    }
}

// Steady-state unit-step state of one section, the 2x2 analogue of the
// classic lfilter_zi; scaling it by the edge sample suppresses step
// transients at the padded boundaries.
struct BiquadZi {
    double z0 = 0.0, z1 = 0.0;
};

BiquadZi section_steady_state(const Biquad& s) {
    // Solve (I - A^T) zi = B for the transposed direct form II.
    const double m00 = 1.0 + s.a1, m01 = -1.0;
    const double m10 = s.a2, m11 = 1.0;
    const double r0 = s.b1 - s.a1 * s.b0;
    const double r1 = s.b2 - s.a2 * s.b0;
    const double det = m00 * m11 - m01 * m10;
    return {(r0 * m11 - m01 * r1) / det, (m00 * r1 - r0 * m10) / det};
}

void sos_pass(const FilterCoeffs& coeffs, double* x, std::size_t n) {
    double level = x[0]; // steady input level seen by each section in turn
    for (const Biquad& s : coeffs.sections) {
        const BiquadZi zi = section_steady_state(s);
        biquad_pass(s, x, n, zi.z0 * level, zi.z1 * level);
        level *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2); // section DC gain
    }
}

void filtfilt_column(const FilterCoeffs& coeffs, const double* x, double* out,
                     std::size_t n) {
    const std::size_t pad =
        std::min<std::size_t>(static_cast<std::size_t>(coeffs.pad_length()), n - 1);

    std::vector<double> ext(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
    std::copy(x, x + n, ext.begin() + pad);
    for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

    sos_pass(coeffs, ext.data(), ext.size());
    std::reverse(ext.begin(), ext.end());
    sos_pass(coeffs, ext.data(), ext.size());
    std::reverse(ext.begin(), ext.end());

    std::copy(ext.begin() + pad, ext.begin() + pad + n, out);
}

double bessel_i0(double x) {
    // Power series; converges quickly for the beta values used here.
    double term = 1.0, acc = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        acc += term;
        if (term < 1e-18 * acc) break;
    }
    return acc;
}

struct ResampleDesign {
    std::size_t up = 1;
    std::size_t down = 1;
    std::vector<double> taps; // odd length, symmetric, at the upsampled rate
};

bool rationalize(double ratio, std::size_t max_den, std::size_t& up, std::size_t& down) {
    for (std::size_t m = 1; m <= max_den; ++m) {
        const double l = ratio * static_cast<double>(m);
        const double lr = std::round(l);
        if (lr >= 1.0 && std::abs(l - lr) < 1e-9 * std::max(1.0, lr)) {
            up = static_cast<std::size_t>(lr);
            down = m;
            const std::size_t g = std::gcd(up, down);
            up /= g;
            down /= g;
            return true;
        }
    }
    return false;
}

ResampleDesign design_resampler(double fs, double target_fs) {
    if (!(target_fs > 0.0)) fail(ErrorCode::invalid_spec, "resample: target fs must be positive");
    ResampleDesign d;
    if (!rationalize(target_fs / fs, 1024, d.up, d.down))
        fail(ErrorCode::unsupported_ratio,
             "resample: ratio " + std::to_string(target_fs) + "/" + std::to_string(fs) +
                 " is not a small rational");
    if (d.up == d.down) return d;

    const std::size_t half = 10 * std::max(d.up, d.down);
    const std::size_t ntaps = 2 * half + 1;
    const double beta = 5.0;
    // Cutoff at the lower of the two Nyquist rates, normalized to the
    // upsampled rate.
    const double fc = 0.5 * std::min(1.0, static_cast<double>(d.up) / d.down) /
                      static_cast<double>(d.up) * 2.0; // cycles per upsampled sample * 2
    const double i0b = bessel_i0(beta);
    d.taps.resize(ntaps);
    for (std::size_t i = 0; i < ntaps; ++i) {
        const double t = static_cast<double>(i) - static_cast<double>(half);
        const double sinc = t == 0.0 ? 1.0 : std::sin(kPi * fc * t) / (kPi * fc * t);
        const double w = bessel_i0(beta * std::sqrt(std::max(
                             0.0, 1.0 - (t / half) * (t / half)))) / i0b;
        d.taps[i] = fc * sinc * w;
    }
    // Normalize each polyphase branch to unit DC gain so constants pass
    // through exactly away from the edges.
    for (std::size_t phase = 0; phase < d.up; ++phase) {
        double s = 0.0;
        for (std::size_t i = phase; i < ntaps; i += d.up) s += d.taps[i];
        if (s != 0.0)
            for (std::size_t i = phase; i < ntaps; i += d.up) d.taps[i] /= s;
    }
    return d;
}

void resample_column(const ResampleDesign& d, const double* x, std::size_t n,
                     double* y, std::size_t out_n) {
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(d.taps.size() / 2);
    const std::ptrdiff_t up = static_cast<std::ptrdiff_t>(d.up);
    const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(n);
    for (std::size_t k = 0; k < out_n; ++k) {
        // Output sample k sits at upsampled-grid position k*down; the tap at
        // offset (c - m*up) weights input sample m. Valid tap offsets are
        // [0, 2*half]; samples outside the signal are treated as zero.
        const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(k * d.down) + half;
        const std::ptrdiff_t lo_num = c - 2 * half;
        std::ptrdiff_t m_lo = lo_num >= 0 ? (lo_num + up - 1) / up : -((-lo_num) / up);
        std::ptrdiff_t m_hi = c / up;
        if (m_lo < 0) m_lo = 0;
        if (m_hi >= len) m_hi = len - 1;
        double acc = 0.0;
        for (std::ptrdiff_t m = m_lo; m <= m_hi; ++m) acc += d.taps[c - m * up] * x[m];
        y[k] = acc;
    }
}

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

int FilterCoeffs::pad_length() const noexcept {
    const int base = 3 * order();
    if (!(max_pole_radius > 0.0) || max_pole_radius >= 1.0) return base;
    const int decay = static_cast<int>(std::ceil(std::log(1e-12) / std::log(max_pole_radius)));
    return std::max(base, decay);
}

FilterCoeffs design_bandpass(const BandpassSpec& spec, double fs) {
    if (!(fs > 0.0)) fail(ErrorCode::invalid_spec, "design_bandpass: fs must be positive");
    if (spec.order < 1) fail(ErrorCode::invalid_spec, "design_bandpass: order must be >= 1");
    if (!(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz && spec.high_hz < fs / 2.0))
        fail(ErrorCode::invalid_spec,
             "design_bandpass: band edges must satisfy 0 < low < high < fs/2 (got " +
                 std::to_string(spec.low_hz) + ", " + std::to_string(spec.high_hz) +
                 " at fs " + std::to_string(fs) + ")");

    const int n = spec.order;
    const double w1 = 2.0 * fs * std::tan(kPi * spec.low_hz / fs);
    const double w2 = 2.0 * fs * std::tan(kPi * spec.high_hz / fs);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;

    // Analog prototype poles on the unit circle, transformed low-pass ->
    // band-pass: each prototype pole yields the two roots of
    // s^2 - p*bw*s + w0^2.
    std::vector<cplx> apoles;
    apoles.reserve(2 * n);
    for (int k = 1; k <= n; ++k) {
        const double theta = kPi * (2.0 * k - 1.0) / (2.0 * n) + kPi / 2.0;
        const cplx p = std::exp(cplx(0.0, theta));
        const cplx half = p * bw * 0.5;
        const cplx disc = std::sqrt(half * half - w0sq);
        apoles.push_back(half + disc);
        apoles.push_back(half - disc);
    }

    // Bilinear transform; the n zeros at s=0 map to z=1 and the n at
    // infinity to z=-1.
    const double fs2 = 2.0 * fs;
    std::vector<cplx> zpoles, zzeros;
    cplx gain = std::pow(cplx(bw), n);
    for (const cplx& p : apoles) {
        zpoles.push_back((fs2 + p) / (fs2 - p));
        gain /= (fs2 - p);
    }
    for (int k = 0; k < n; ++k) {
        zzeros.push_back(1.0);
        gain *= fs2;
        zzeros.push_back(-1.0);
    }

    const std::vector<cplx> bc = poly_from_roots(zzeros);
    const std::vector<cplx> ac = poly_from_roots(zpoles);

    FilterCoeffs out;
    out.b.resize(bc.size());
    out.a.resize(ac.size());
    for (std::size_t i = 0; i < bc.size(); ++i) out.b[i] = (gain * bc[i]).real();
    for (std::size_t i = 0; i < ac.size(); ++i) out.a[i] = ac[i].real();
    for (const cplx& p : zpoles) out.max_pole_radius = std::max(out.max_pole_radius, std::abs(p));

    // Second-order sections: prototype poles come in conjugate pairs, so each
    // prototype pole with Im > 0 contributes two digital conjugate-pair
    // sections; a real prototype pole (odd order) contributes one. Every
    // section takes one zero at z=1 and one at z=-1: b ~ (1, 0, -1).
    auto digital = [fs2](cplx s) { return (fs2 + s) / (fs2 - s); };
    auto push_conjugate_section = [&](cplx pole) {
        Biquad s;
        s.b0 = 1.0;
        s.b2 = -1.0;
        s.a1 = -2.0 * pole.real();
        s.a2 = std::norm(pole);
        out.sections.push_back(s);
    };
    for (int k = 1; k <= n; ++k) {
        const double theta = kPi * (2.0 * k - 1.0) / (2.0 * n) + kPi / 2.0;
        const cplx p = std::exp(cplx(0.0, theta));
        if (p.imag() < -1e-12) continue; // conjugate of an earlier prototype pole
        const cplx half = p * bw * 0.5;
        const cplx disc = std::sqrt(half * half - w0sq);
        if (p.imag() > 1e-12) {
            push_conjugate_section(digital(half + disc));
            push_conjugate_section(digital(half - disc));
        } else if (std::abs(disc.imag()) > std::abs(disc.real())) {
            // real prototype pole with complex band-pass roots
            push_conjugate_section(digital(half + disc));
        } else {
            // two real band-pass roots share one section
            const double r1 = digital(half + disc).real();
            const double r2 = digital(half - disc).real();
            Biquad s;
            s.b0 = 1.0;
            s.b2 = -1.0;
            s.a1 = -(r1 + r2);
            s.a2 = r1 * r2;
            out.sections.push_back(s);
        }
    }

    // Pin unit gain at the geometric-mean frequency, for the cascade and the
    // expanded polynomials alike.
    const double fc = std::sqrt(spec.low_hz * spec.high_hz);
    const cplx z = std::exp(cplx(0.0, 2.0 * kPi * fc / fs));
    double cascade_gain = 1.0;
    for (const Biquad& s : out.sections)
        cascade_gain *= std::abs((s.b0 * z * z + s.b1 * z + s.b2) /
                                 (z * z + s.a1 * z + s.a2));
    const double per_section =
        std::pow(cascade_gain, -1.0 / static_cast<double>(out.sections.size()));
    for (Biquad& s : out.sections) {
        s.b0 *= per_section;
        s.b1 *= per_section;
        s.b2 *= per_section;
    }

    const double g = filter_gain_at(out, fc, fs);
    for (double& c : out.b) c /= g;
    return out;
}

double filter_gain_at(const FilterCoeffs& coeffs, double freq_hz, double fs) {
    const cplx z = std::exp(cplx(0.0, 2.0 * kPi * freq_hz / fs));
    // Evaluate in z^{-1}: H(z) = sum b_k z^-k / sum a_k z^-k.
    const cplx zi = 1.0 / z;
    return std::abs(polyval({coeffs.b.rbegin(), coeffs.b.rend()}, zi) /
                    polyval({coeffs.a.rbegin(), coeffs.a.rend()}, zi));
}

MonoSeries filtfilt(const MonoSeries& x, const FilterCoeffs& coeffs) {
    const std::size_t order = coeffs.a.size() - 1;
    if (x.samples.size() <= 3 * order)
        fail(ErrorCode::length_error, "filtfilt: signal length " +
                                          std::to_string(x.samples.size()) +
                                          " must exceed 3x filter order");
    MonoSeries out{std::vector<double>(x.samples.size()), x.fs};
    filtfilt_column(coeffs, x.samples.data(), out.samples.data(), x.samples.size());
    return out;
}

MultiSeries filtfilt(const MultiSeries& x, const FilterCoeffs& coeffs) {
    const std::size_t order = coeffs.a.size() - 1;
    const std::size_t n = x.length();
    if (n <= 3 * order)
        fail(ErrorCode::length_error, "filtfilt: signal length must exceed 3x filter order");
    MultiSeries out{Matrix(n, x.n_channels()), x.fs, x.channels};
    std::vector<double> col(n), res(n);
    for (std::size_t c = 0; c < x.n_channels(); ++c) {
        for (std::size_t t = 0; t < n; ++t) col[t] = x.samples(t, c);
        filtfilt_column(coeffs, col.data(), res.data(), n);
        for (std::size_t t = 0; t < n; ++t) out.samples(t, c) = res[t];
    }
    return out;
}

MonoSeries resample(const MonoSeries& x, double target_fs) {
    const ResampleDesign d = design_resampler(x.fs, target_fs);
    if (d.up == d.down) return {x.samples, target_fs};
    const std::size_t out_n = static_cast<std::size_t>(
        std::llround(static_cast<double>(x.samples.size()) * target_fs / x.fs));
    MonoSeries out{std::vector<double>(out_n), target_fs};
    resample_column(d, x.samples.data(), x.samples.size(), out.samples.data(), out_n);
    return out;
}

MultiSeries resample(const MultiSeries& x, double target_fs) {
    const ResampleDesign d = design_resampler(x.fs, target_fs);
    if (d.up == d.down) return {x.samples, target_fs, x.channels};
    const std::size_t out_n = static_cast<std::size_t>(
        std::llround(static_cast<double>(x.length()) * target_fs / x.fs));
    MultiSeries out{Matrix(out_n, x.n_channels()), target_fs, x.channels};
    std::vector<double> col(x.length()), res(out_n);
    for (std::size_t c = 0; c < x.n_channels(); ++c) {
        for (std::size_t t = 0; t < x.length(); ++t) col[t] = x.samples(t, c);
        resample_column(d, col.data(), col.size(), res.data(), out_n);
        for (std::size_t t = 0; t < out_n; ++t) out.samples(t, c) = res[t];
    }
    return out;
}

MultiSeries common_average_reference(const MultiSeries& eeg) {
    if (eeg.n_channels() < 2)
        fail(ErrorCode::degenerate_reference,
             "common_average_reference: need at least 2 channels");
    MultiSeries out{Matrix(eeg.length(), eeg.n_channels()), eeg.fs, eeg.channels};
    const double inv = 1.0 / static_cast<double>(eeg.n_channels());
    for (std::size_t t = 0; t < eeg.length(); ++t) {
        const double* src = eeg.samples.row(t);
        double mean = 0.0;
        for (std::size_t c = 0; c < eeg.n_channels(); ++c) mean += src[c];
        mean *= inv;
        double* dst = out.samples.row(t);
        for (std::size_t c = 0; c < eeg.n_channels(); ++c) dst[c] = src[c] - mean;
    }
    return out;
}

MultiSeries baseline_correct(const MultiSeries& eeg) {
    if (eeg.length() == 0 || eeg.n_channels() == 0)
        fail(ErrorCode::empty_input, "baseline_correct: empty input");
    MultiSeries out{Matrix(eeg.length(), eeg.n_channels()), eeg.fs, eeg.channels};
    const double inv = 1.0 / static_cast<double>(eeg.length());
    for (std::size_t c = 0; c < eeg.n_channels(); ++c) {
        double mean = 0.0;
        for (std::size_t t = 0; t < eeg.length(); ++t) mean += eeg.samples(t, c);
        mean *= inv;
        for (std::size_t t = 0; t < eeg.length(); ++t)
            out.samples(t, c) = eeg.samples(t, c) - mean;
    }
    return out;
}

MonoSeries hilbert_envelope(const MonoSeries& audio) {
    const std::size_t n = audio.samples.size();
    if (n < 16) fail(ErrorCode::length_error, "hilbert_envelope: need at least 16 samples");

    std::vector<cplx> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = audio.samples[i];

    fftw_plan fwd, inv;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fwd = fftw_plan_dft_1d(static_cast<int>(n),
                               reinterpret_cast<fftw_complex*>(buf.data()),
                               reinterpret_cast<fftw_complex*>(buf.data()),
                               FFTW_FORWARD, FFTW_ESTIMATE);
        inv = fftw_plan_dft_1d(static_cast<int>(n),
                               reinterpret_cast<fftw_complex*>(buf.data()),
                               reinterpret_cast<fftw_complex*>(buf.data()),
                               FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(fwd);

    // Analytic signal: keep DC (and Nyquist for even n), double the positive
    // frequencies, zero the negative ones.
    const std::size_t half = n / 2;
    for (std::size_t k = 1; k < (n + 1) / 2; ++k) buf[k] *= 2.0;
    for (std::size_t k = half + 1; k < n; ++k) buf[k] = 0.0;

    fftw_execute(inv);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }

    MonoSeries out{std::vector<double>(n), audio.fs};
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = std::abs(buf[i]) * scale;
    return out;
}

MultiSeries preprocess_chain(const MultiSeries& eeg, const BandpassSpec& band,
                             double target_fs, bool car) {
    if (eeg.n_channels() == 0 || eeg.channels.empty())
        fail(ErrorCode::empty_input, "preprocess_chain: no channels");
    const FilterCoeffs coeffs = design_bandpass(band, eeg.fs);
    MultiSeries work = car ? common_average_reference(eeg) : eeg;
    work = filtfilt(work, coeffs);
    work = baseline_correct(work);
    return resample(work, target_fs);
}

MonoSeries preprocess_envelope(const MonoSeries& audio, const BandpassSpec& band,
                               double target_fs, double power_exponent) {
    MonoSeries env = hilbert_envelope(audio);
    if (power_exponent != 1.0)
        for (double& v : env.samples) v = std::pow(v, power_exponent);
    const FilterCoeffs coeffs = design_bandpass(band, env.fs);
    env = filtfilt(env, coeffs);
    return resample(env, target_fs);
}

} // namespace aad
