#include "aad/decoder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "aad/kernels.hpp"

namespace aad {

namespace {

MultiSeries concat_eeg(std::span<const Trial> trials) {
    std::size_t total = 0;
    for (const Trial& t : trials) total += t.eeg.length();
    MultiSeries out{Matrix(total, trials.front().eeg.n_channels()),
                    trials.front().eeg.fs, trials.front().eeg.channels};
    std::size_t row = 0;
    for (const Trial& t : trials) {
        std::copy(t.eeg.samples.data(), t.eeg.samples.data() + t.eeg.samples.size(),
                  out.samples.row(row));
        row += t.eeg.length();
    }
    return out;
}

Matrix concat_attended(std::span<const Trial> trials) {
    std::size_t total = 0;
    for (const Trial& t : trials) total += t.eeg.length();
    Matrix y(total, 1);
    std::size_t row = 0;
    for (const Trial& t : trials) {
        const auto& env = t.candidates[static_cast<std::size_t>(t.attended_index)].samples;
        for (std::size_t i = 0; i < env.size(); ++i) y(row + i, 0) = env[i];
        row += env.size();
    }
    return y;
}

struct PearsonSums {
    double r = 0.0;
    bool defined = false;
};

PearsonSums pearson_sums(const double* a, const double* b, std::size_t n) {
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
    if (saa <= 0.0 || sbb <= 0.0) return {};
    return {sab / std::sqrt(saa * sbb), true};
}

// Eq. 2 over an EEG row range with edges zero-padded inside the range.
void reconstruct_range(const Decoder& decoder, const MultiSeries& eeg,
                       std::size_t t0, std::size_t t1, double* out) {
    const std::size_t n_ch = eeg.n_channels();
    const std::size_t n_lags = decoder.weights.rows();
    const std::size_t t_len = t1 - t0;
    std::vector<int> taus(n_lags);
    for (std::size_t li = 0; li < n_lags; ++li)
        taus[li] = static_cast<int>(std::lround(decoder.lag_axis_ms[li] * eeg.fs / 1000.0));

    for (std::size_t t = 0; t < t_len; ++t) {
        double acc = 0.0;
        for (std::size_t li = 0; li < n_lags; ++li) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + taus[li];
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
            acc += kernels::dot(eeg.samples.row(t0 + static_cast<std::size_t>(src)),
                                decoder.weights.row(li), n_ch);
        }
        out[t] = acc;
    }
}

struct SubjectResult {
    std::vector<AccuracyRow> rows;
};

SubjectResult evaluate_subject(const std::string& subject,
                               const std::vector<const Trial*>& trials,
                               const EvalOptions& opts) {
    SubjectResult result;
    const double fs = trials.front()->eeg.fs;

    for (std::size_t held = 0; held < trials.size(); ++held) {
        std::vector<Trial> train_set;
        for (std::size_t i = 0; i < trials.size(); ++i)
            if (i != held) {
                Trial t = *trials[i];
                if (!opts.layout_channels.empty())
                    t.eeg = select_channels(t.eeg, opts.layout_channels);
                train_set.push_back(std::move(t));
            }

        DecoderTraining cfg;
        cfg.lags = opts.lags;
        cfg.lambda_grid = opts.lambda_grid;
        cfg.k_folds = opts.k_folds;
        cfg.fixed_lambda = opts.fixed_lambda;
        Decoder decoder = train_decoder(train_set, cfg);
        decoder.subject = subject;

        Trial held_trial = *trials[held];
        if (!opts.layout_channels.empty())
            held_trial.eeg = select_channels(held_trial.eeg, opts.layout_channels);

        const double trial_s = static_cast<double>(held_trial.eeg.length()) / fs;
        for (double window_s : opts.window_lengths_s) {
            AccuracyRow row;
            row.subject = subject;
            row.fold = static_cast<int>(held);
            row.window_s = window_s;
            const int n_win = static_cast<int>(std::floor(trial_s / window_s + 1e-9));
            for (int w = 0; w < n_win; ++w) {
                try {
                    const WindowDecision d =
                        classify_window(decoder, held_trial, w * window_s, window_s);
                    ++row.n_windows;
                    if (d.chosen == held_trial.attended_index) ++row.n_correct;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::undefined_correlation) throw;
                    ++row.skipped_windows;
                }
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

} // namespace

Decoder train_decoder(std::span<const Trial> trials, const DecoderTraining& cfg) {
    // A single trial is a valid (if weak) training set; leave-one-trial-out
    // evaluation with two trials per subject produces exactly that.
    if (trials.empty())
        fail(ErrorCode::empty_input, "train_decoder: no training trials");
    const auto& ref = trials.front().eeg;
    for (const Trial& t : trials) {
        t.check();
        if (t.eeg.channels != ref.channels)
            fail(ErrorCode::schema_error, "train_decoder: trial channel sets differ");
        if (t.eeg.fs != ref.fs)
            fail(ErrorCode::schema_error, "train_decoder: trial sampling rates differ");
    }
    cfg.lags.check();
    if (cfg.lags.fs != ref.fs)
        fail(ErrorCode::config_error, "train_decoder: lag config fs does not match EEG");

    const MultiSeries eeg = concat_eeg(trials);
    const Matrix y = concat_attended(trials);
    const DesignMatrix x = build_lag_matrix(eeg, cfg.lags, LagDirection::backward);

    double lambda;
    int folds_used = 0;
    if (cfg.fixed_lambda) {
        lambda = *cfg.fixed_lambda;
    } else {
        const LambdaChoice choice = select_lambda(x, y, cfg.lambda_grid, cfg.k_folds);
        lambda = choice.lambda;
        folds_used = cfg.k_folds;
    }

    const RidgeSolution sol = ridge_solve(x, y, lambda);

    Decoder d;
    d.lag_axis_ms = cfg.lags.lag_axis_ms();
    d.channels = ref.channels;
    d.lambda = lambda;
    d.cv_folds = folds_used;
    d.subject = trials.front().meta.subject;
    // Rows of the solution are (channel-major, lag-minor); regroup as
    // n_lags x n_channels.
    const std::size_t n_lags = static_cast<std::size_t>(cfg.lags.n_lags());
    const std::size_t n_ch = ref.n_channels();
    d.weights = Matrix(n_lags, n_ch);
    for (std::size_t c = 0; c < n_ch; ++c)
        for (std::size_t li = 0; li < n_lags; ++li)
            d.weights(li, c) = sol.weights(c * n_lags + li, 0);
    return d;
}

MonoSeries reconstruct(const Decoder& decoder, const MultiSeries& eeg) {
    if (decoder.channels != eeg.channels)
        fail(ErrorCode::schema_error,
             "reconstruct: EEG channels do not match the decoder (no implicit reordering)");
    if (decoder.weights.cols() != eeg.n_channels())
        fail(ErrorCode::schema_error, "reconstruct: channel count mismatch");
    MonoSeries out{std::vector<double>(eeg.length()), eeg.fs};
    reconstruct_range(decoder, eeg, 0, eeg.length(), out.samples.data());
    return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        fail(ErrorCode::config_error, "pearson: length mismatch");
    if (a.size() < 2) fail(ErrorCode::length_error, "pearson: need at least 2 samples");
    const PearsonSums s = pearson_sums(a.data(), b.data(), a.size());
    if (!s.defined)
        fail(ErrorCode::undefined_correlation, "pearson: constant input");
    return s.r;
}

double pearson(const MonoSeries& a, const MonoSeries& b) {
    return pearson(std::span<const double>(a.samples), std::span<const double>(b.samples));
}

WindowDecision classify_window(const Decoder& decoder, const Trial& trial,
                               double start_s, double length_s) {
    const double fs = trial.eeg.fs;
    if (length_s < 1.0)
        fail(ErrorCode::invalid_spec, "classify_window: window must be at least 1 s");
    const std::size_t t0 = static_cast<std::size_t>(std::llround(start_s * fs));
    const std::size_t t_len = static_cast<std::size_t>(std::llround(length_s * fs));
    if (start_s < 0.0 || t0 + t_len > trial.eeg.length())
        fail(ErrorCode::range_error, "classify_window: window exceeds trial bounds");
    if (decoder.channels != trial.eeg.channels)
        fail(ErrorCode::schema_error, "classify_window: channel mismatch");

    std::vector<double> recon(t_len);
    reconstruct_range(decoder, trial.eeg, t0, t0 + t_len, recon.data());

    WindowDecision decision;
    for (int cand = 0; cand < kNumSpeakers; ++cand) {
        const double* env = trial.candidates[static_cast<std::size_t>(cand)].samples.data() + t0;
        const PearsonSums s = pearson_sums(recon.data(), env, t_len);
        // A constant reconstruction or envelope leaves the window unscored
        // rather than silently contributing a zero.
        if (!s.defined)
            fail(ErrorCode::undefined_correlation,
                 "classify_window: undefined correlation for candidate " +
                     std::to_string(cand));
        decision.scores[static_cast<std::size_t>(cand)] = s.r;
    }

    int best = 0;
    for (int cand = 1; cand < kNumSpeakers; ++cand)
        if (decision.scores[static_cast<std::size_t>(cand)] >
            decision.scores[static_cast<std::size_t>(best)])
            best = cand;
    decision.chosen = best;
    return decision;
}

double binomial_significance(long n_correct, long n_windows, double chance) {
    if (n_windows < 0 || n_correct < 0 || n_correct > n_windows)
        fail(ErrorCode::invalid_spec, "binomial_significance: invalid counts");
    if (!(chance > 0.0 && chance < 1.0))
        fail(ErrorCode::invalid_spec, "binomial_significance: chance must be in (0,1)");
    if (n_correct == 0) return 1.0;

    // Upper tail via log-gamma pmf terms; summed smallest-first.
    const double logp = std::log(chance);
    const double logq = std::log1p(-chance);
    const double lgn = std::lgamma(static_cast<double>(n_windows) + 1.0);
    double tail = 0.0;
    for (long k = n_windows; k >= n_correct; --k) {
        const double logpmf = lgn - std::lgamma(static_cast<double>(k) + 1.0) -
                              std::lgamma(static_cast<double>(n_windows - k) + 1.0) +
                              static_cast<double>(k) * logp +
                              static_cast<double>(n_windows - k) * logq;
        tail += std::exp(logpmf);
    }
    return std::min(tail, 1.0);
}

AccuracyTable evaluate(std::span<const Trial> trials, const EvalOptions& opts) {
    if (trials.empty()) fail(ErrorCode::empty_input, "evaluate: no trials");
    for (double w : opts.window_lengths_s)
        if (w < 1.0) fail(ErrorCode::invalid_spec, "evaluate: windows must be at least 1 s");

    std::map<std::string, std::vector<const Trial*>> by_subject;
    for (const Trial& t : trials) by_subject[t.meta.subject].push_back(&t);

    for (const auto& [subject, list] : by_subject) {
        if (list.size() < 2)
            fail(ErrorCode::invalid_spec,
                 "evaluate: subject " + subject + " needs at least 2 trials");
        for (const Trial* t : list) {
            const double trial_s = static_cast<double>(t->eeg.length()) / t->eeg.fs;
            for (double w : opts.window_lengths_s)
                if (w > trial_s + 1e-9)
                    fail(ErrorCode::invalid_spec,
                         "evaluate: window length exceeds shortest trial");
        }
    }

    std::vector<std::pair<std::string, std::vector<const Trial*>>> subjects(
        by_subject.begin(), by_subject.end());
    std::vector<SubjectResult> results(subjects.size());

    unsigned n_threads = opts.threads > 0 ? static_cast<unsigned>(opts.threads)
                                          : std::thread::hardware_concurrency();
    n_threads = std::max(1u, std::min<unsigned>(n_threads, subjects.size()));

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= subjects.size()) return;
            try {
                results[i] = evaluate_subject(subjects[i].first, subjects[i].second, opts);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    AccuracyTable table;
    for (SubjectResult& r : results)
        for (AccuracyRow& row : r.rows) table.rows.push_back(std::move(row));
    std::sort(table.rows.begin(), table.rows.end(), [](const AccuracyRow& a, const AccuracyRow& b) {
        return std::tie(a.subject, a.fold, a.window_s) < std::tie(b.subject, b.fold, b.window_s);
    });

    // Per-window-length mean and SD across subjects (fold-pooled per subject),
    // plus an exact binomial test of the pooled counts against chance.
    for (double window_s : opts.window_lengths_s) {
        WindowSummary s;
        s.window_s = window_s;
        std::map<std::string, std::pair<long, long>> per_subject; // correct, windows
        for (const AccuracyRow& row : table.rows) {
            if (row.window_s != window_s) continue;
            per_subject[row.subject].first += row.n_correct;
            per_subject[row.subject].second += row.n_windows;
            s.pooled_correct += row.n_correct;
            s.pooled_windows += row.n_windows;
        }
        std::vector<double> acc;
        for (const auto& [subject, counts] : per_subject)
            if (counts.second > 0)
                acc.push_back(static_cast<double>(counts.first) / counts.second);
        if (!acc.empty()) {
            double mean = 0.0;
            for (double a : acc) mean += a;
            mean /= static_cast<double>(acc.size());
            s.mean_accuracy = mean;
            if (acc.size() > 1) {
                double var = 0.0;
                for (double a : acc) var += (a - mean) * (a - mean);
                s.sd_accuracy = std::sqrt(var / static_cast<double>(acc.size() - 1));
            }
        }
        s.p_value_vs_chance = s.pooled_windows > 0
                                  ? binomial_significance(s.pooled_correct, s.pooled_windows,
                                                          opts.chance)
                                  : 1.0;
        table.summaries.push_back(s);
    }
    return table;
}

} // namespace aad
