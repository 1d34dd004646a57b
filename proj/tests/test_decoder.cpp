#include <doctest.h>

#include <cmath>
#include <random>

#include "aad/decoder.hpp"
#include "aad/synth.hpp"
#include "test_util.hpp"

using namespace aad;

namespace {

// Brute-force Eq. 2 oracle: s_hat(t) = sum_n sum_tau r(t+tau, n) g(tau, n).
std::vector<double> reconstruct_oracle(const Decoder& d, const MultiSeries& eeg) {
    const std::size_t t_len = eeg.length();
    std::vector<double> out(t_len, 0.0);
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t li = 0; li < d.lag_axis_ms.size(); ++li) {
            const int tau = static_cast<int>(std::lround(d.lag_axis_ms[li] * eeg.fs / 1000.0));
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + tau;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
            for (std::size_t n = 0; n < eeg.n_channels(); ++n)
                out[t] += eeg.samples(static_cast<std::size_t>(src), n) * d.weights(li, n);
        }
    return out;
}

Decoder random_decoder(std::mt19937_64& rng, const LagConfig& lags,
                       const std::vector<std::string>& channels) {
    Decoder d;
    d.lag_axis_ms = lags.lag_axis_ms();
    d.channels = channels;
    d.weights = Matrix(d.lag_axis_ms.size(), channels.size());
    const auto v = testutil::random_normal(rng, d.weights.size());
    std::copy(v.begin(), v.end(), d.weights.data());
    return d;
}

MultiSeries random_eeg(std::mt19937_64& rng, std::size_t t_len,
                       const std::vector<std::string>& channels, double fs = 64.0) {
    MultiSeries eeg{Matrix(t_len, channels.size()), fs, channels};
    const auto v = testutil::random_normal(rng, eeg.samples.size());
    std::copy(v.begin(), v.end(), eeg.samples.data());
    return eeg;
}

Trial synthetic_copy_channel_trial(std::mt19937_64& rng, int attended, std::size_t t_len,
                                   int trial_id) {
    // The attended envelope is wired straight into channel 0.
    Trial trial;
    trial.meta.subject = "S01";
    trial.meta.trial_id = trial_id;
    trial.attended_index = attended;
    const std::vector<std::string> channels{"e0", "e1", "e2"};
    trial.eeg = random_eeg(rng, t_len, channels);
    for (int c = 0; c < kNumSpeakers; ++c)
        trial.candidates[static_cast<std::size_t>(c)] =
            MonoSeries{testutil::random_normal(rng, t_len), 64.0};
    for (std::size_t t = 0; t < t_len; ++t)
        trial.eeg.samples(t, 0) =
            trial.candidates[static_cast<std::size_t>(attended)].samples[t];
    return trial;
}

} // namespace

TEST_SUITE("decoder") {

TEST_CASE("pearson basics and the two-pass oracle") {
    CHECK(pearson(MonoSeries{{1, 2, 3}, 1}, MonoSeries{{2, 4, 6}, 1}) ==
          doctest::Approx(1.0));
    CHECK(pearson(MonoSeries{{1, -2, 3}, 1}, MonoSeries{{-1, 2, -3}, 1}) ==
          doctest::Approx(-1.0));

    std::mt19937_64 rng(12345); // seed recorded per the contract
    const std::vector<double> a = testutil::random_normal(rng, 100);
    const std::vector<double> b = testutil::random_normal(rng, 100);
    const double r = pearson(std::span<const double>(a), std::span<const double>(b));
    CHECK(r == doctest::Approx(testutil::pearson_ref(a, b)).epsilon(1e-12));

    CHECK_THROWS_AS(pearson(MonoSeries{{1, 1, 1}, 1}, MonoSeries{{1, 2, 3}, 1}), Error);
    CHECK_THROWS_AS(pearson(MonoSeries{{1}, 1}, MonoSeries{{1}, 1}), Error);
}

TEST_CASE("reconstruct with a unit selector returns that channel") {
    const LagConfig lags{-15.625, 15.625, 64.0}; // taps -1..1
    std::mt19937_64 rng(1);
    const std::vector<std::string> channels{"a", "b", "c"};
    const MultiSeries eeg = random_eeg(rng, 200, channels);

    Decoder d;
    d.lag_axis_ms = lags.lag_axis_ms();
    d.channels = channels;
    d.weights = Matrix(3, 3);
    d.weights(1, 1) = 1.0; // tau = 0, channel b

    const MonoSeries out = reconstruct(d, eeg);
    for (std::size_t t = 0; t < 200; ++t)
        CHECK(out.samples[t] == doctest::Approx(eeg.samples(t, 1)));
}

TEST_CASE("all-zero decoder reconstructs zeros") {
    const LagConfig lags{-50.0, 450.0, 64.0};
    std::mt19937_64 rng(2);
    const std::vector<std::string> channels{"a", "b"};
    const MultiSeries eeg = random_eeg(rng, 300, channels);
    Decoder d;
    d.lag_axis_ms = lags.lag_axis_ms();
    d.channels = channels;
    d.weights = Matrix(d.lag_axis_ms.size(), 2);
    const MonoSeries out = reconstruct(d, eeg);
    for (double v : out.samples) CHECK(v == 0.0);
}

TEST_CASE("reconstruct matches the brute-force double-sum oracle") {
    const LagConfig lags{-50.0, 450.0, 64.0};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(900 + seed);
        const std::vector<std::string> channels{"a", "b", "c", "d", "e"};
        const Decoder d = random_decoder(rng, lags, channels);
        const MultiSeries eeg = random_eeg(rng, 150, channels);

        const MonoSeries fast = reconstruct(d, eeg);
        const std::vector<double> slow = reconstruct_oracle(d, eeg);
        double scale = 0.0;
        for (double v : slow) scale = std::max(scale, std::abs(v));
        for (std::size_t t = 0; t < slow.size(); ++t)
            CHECK(std::abs(fast.samples[t] - slow[t]) < 1e-10 * std::max(1.0, scale));
    }
}

TEST_CASE("reconstruct refuses mismatched channels") {
    const LagConfig lags{-50.0, 450.0, 64.0};
    std::mt19937_64 rng(3);
    const Decoder d = random_decoder(rng, lags, {"a", "b"});
    const MultiSeries eeg = random_eeg(rng, 100, {"b", "a"});
    CHECK_THROWS_AS(reconstruct(d, eeg), Error);
}

TEST_CASE("channel permutation equivariance") {
    const LagConfig lags{-50.0, 450.0, 64.0};
    std::mt19937_64 rng(4);
    const std::vector<std::string> channels{"a", "b", "c", "d"};
    const Decoder d = random_decoder(rng, lags, channels);
    const MultiSeries eeg = random_eeg(rng, 256, channels);
    const MonoSeries base = reconstruct(d, eeg);

    const std::vector<std::size_t> perm{2, 0, 3, 1};
    Decoder dp = d;
    MultiSeries ep = eeg;
    for (std::size_t j = 0; j < perm.size(); ++j) {
        dp.channels[j] = d.channels[perm[j]];
        ep.channels[j] = eeg.channels[perm[j]];
        for (std::size_t li = 0; li < d.weights.rows(); ++li)
            dp.weights(li, j) = d.weights(li, perm[j]);
        for (std::size_t t = 0; t < eeg.length(); ++t)
            ep.samples(t, j) = eeg.samples(t, perm[j]);
    }
    const MonoSeries permuted = reconstruct(dp, ep);
    for (std::size_t t = 0; t < base.samples.size(); ++t)
        CHECK(std::abs(base.samples[t] - permuted.samples[t]) <= 1e-12);
}

TEST_CASE("train_decoder on copy-channel trials reconstructs the target") {
    std::mt19937_64 rng(5);
    std::vector<Trial> trials;
    for (int i = 0; i < 3; ++i)
        trials.push_back(synthetic_copy_channel_trial(rng, i % kNumSpeakers, 640, i));

    DecoderTraining cfg;
    cfg.lags = LagConfig{-50.0, 450.0, 64.0};
    cfg.fixed_lambda = 1e-6;
    const Decoder d = train_decoder(trials, cfg);

    for (const Trial& trial : trials) {
        const MonoSeries recon = reconstruct(d, trial.eeg);
        const double r = pearson(
            recon, trial.candidates[static_cast<std::size_t>(trial.attended_index)]);
        CHECK(r > 0.999);
    }
}

TEST_CASE("train_decoder validates its inputs") {
    std::mt19937_64 rng(6);
    DecoderTraining cfg;
    cfg.lags = LagConfig{-50.0, 450.0, 64.0};

    const std::vector<Trial> empty;
    CHECK_THROWS_AS(train_decoder(empty, cfg), Error);

    std::vector<Trial> mixed;
    mixed.push_back(synthetic_copy_channel_trial(rng, 0, 320, 0));
    mixed.push_back(synthetic_copy_channel_trial(rng, 1, 320, 1));
    mixed[1].eeg.channels = {"x0", "x1", "x2"};
    CHECK_THROWS_AS(train_decoder(mixed, cfg), Error);
}

TEST_CASE("classify_window picks the candidate equal to the reconstruction") {
    std::mt19937_64 rng(7);
    const LagConfig lags{-15.625, 15.625, 64.0};
    Decoder d;
    d.lag_axis_ms = lags.lag_axis_ms();
    d.channels = {"a", "b"};
    d.weights = Matrix(3, 2);
    d.weights(1, 0) = 1.0; // selector for channel a

    Trial trial;
    trial.meta.subject = "S01";
    trial.attended_index = 2;
    trial.eeg = random_eeg(rng, 320, {"a", "b"});
    for (int c = 0; c < kNumSpeakers; ++c)
        trial.candidates[static_cast<std::size_t>(c)] =
            MonoSeries{testutil::random_normal(rng, 320), 64.0};
    for (std::size_t t = 0; t < 320; ++t)
        trial.candidates[2].samples[t] = trial.eeg.samples(t, 0);

    const WindowDecision decision = classify_window(d, trial, 0.0, 5.0);
    CHECK(decision.chosen == 2);
    CHECK(decision.scores[2] == doctest::Approx(1.0));
}

TEST_CASE("classify_window ties resolve to the lowest index") {
    std::mt19937_64 rng(8);
    const LagConfig lags{-15.625, 15.625, 64.0};
    Decoder d;
    d.lag_axis_ms = lags.lag_axis_ms();
    d.channels = {"a"};
    d.weights = Matrix(3, 1);
    d.weights(1, 0) = 1.0;

    Trial trial;
    trial.attended_index = 3;
    trial.eeg = random_eeg(rng, 128, {"a"});
    const MonoSeries env{testutil::random_normal(rng, 128), 64.0};
    for (int c = 0; c < kNumSpeakers; ++c) trial.candidates[static_cast<std::size_t>(c)] = env;

    const WindowDecision decision = classify_window(d, trial, 0.0, 2.0);
    CHECK(decision.chosen == 0);
    for (int c = 1; c < kNumSpeakers; ++c)
        CHECK(decision.scores[static_cast<std::size_t>(c)] == decision.scores[0]);
}

TEST_CASE("classify_window argmax is invariant to affine candidate changes") {
    std::mt19937_64 rng(9);
    const LagConfig lags{-50.0, 450.0, 64.0};
    const std::vector<std::string> channels{"a", "b", "c"};
    const Decoder d = random_decoder(rng, lags, channels);

    Trial trial;
    trial.attended_index = 0;
    trial.eeg = random_eeg(rng, 640, channels);
    for (int c = 0; c < kNumSpeakers; ++c)
        trial.candidates[static_cast<std::size_t>(c)] =
            MonoSeries{testutil::random_normal(rng, 640), 64.0};

    const WindowDecision before = classify_window(d, trial, 1.0, 5.0);
    for (int c = 0; c < kNumSpeakers; ++c)
        for (double& v : trial.candidates[static_cast<std::size_t>(c)].samples)
            v = 2.5 * v + 10.0 * (c + 1);
    const WindowDecision after = classify_window(d, trial, 1.0, 5.0);
    CHECK(before.chosen == after.chosen);
    for (int c = 0; c < kNumSpeakers; ++c)
        CHECK(before.scores[static_cast<std::size_t>(c)] ==
              doctest::Approx(after.scores[static_cast<std::size_t>(c)]).epsilon(1e-9));
}

TEST_CASE("classify_window rejects out-of-range and short windows") {
    std::mt19937_64 rng(10);
    const LagConfig lags{-50.0, 450.0, 64.0};
    const Decoder d = random_decoder(rng, lags, {"a"});
    Trial trial;
    trial.eeg = random_eeg(rng, 128, {"a"});
    for (int c = 0; c < kNumSpeakers; ++c)
        trial.candidates[static_cast<std::size_t>(c)] =
            MonoSeries{testutil::random_normal(rng, 128), 64.0};

    CHECK_THROWS_AS(classify_window(d, trial, 1.5, 1.0), Error); // past the end
    CHECK_THROWS_AS(classify_window(d, trial, 0.0, 0.5), Error); // too short
}

TEST_CASE("synthetic trials classify correctly at a long window") {
    SynthConfig config;
    config.n_subjects = 1;
    config.trials_per_subject = 8;
    config.trial_length_s = 60.0;
    config.snr_db = 0.0;
    config.seed = 2025;

    std::vector<Trial> trials = generate_dataset(config);
    std::vector<Trial> train(trials.begin(), trials.begin() + 6);
    DecoderTraining cfg;
    cfg.lags = LagConfig{-50.0, 450.0, 64.0};
    cfg.fixed_lambda = 1e-2;
    const Decoder d = train_decoder(train, cfg);

    for (std::size_t i = 6; i < trials.size(); ++i) {
        const WindowDecision decision = classify_window(d, trials[i], 0.0, 60.0);
        CHECK(decision.chosen == trials[i].attended_index);
    }
}

TEST_CASE("held-out attended reconstruction beats the unattended streams") {
    SynthConfig config;
    config.n_subjects = 1;
    config.trials_per_subject = 11;
    config.trial_length_s = 60.0;
    config.snr_db = 0.0;
    config.seed = 31337;

    std::vector<Trial> trials = generate_dataset(config);
    std::vector<Trial> train(trials.begin(), trials.begin() + 10);
    DecoderTraining cfg;
    cfg.lags = LagConfig{-50.0, 450.0, 64.0};
    cfg.fixed_lambda = 1e-2;
    const Decoder d = train_decoder(train, cfg);

    const Trial& held = trials.back();
    const MonoSeries recon = reconstruct(d, held.eeg);
    const double r_att =
        pearson(recon, held.candidates[static_cast<std::size_t>(held.attended_index)]);
    for (int c = 0; c < kNumSpeakers; ++c) {
        if (c == held.attended_index) continue;
        CHECK(r_att > pearson(recon, held.candidates[static_cast<std::size_t>(c)]));
    }
}

TEST_CASE("evaluate never trains on the held-out trial") {
    // removing any training trial must change the fitted weights
    std::mt19937_64 rng(11);
    std::vector<Trial> trials;
    for (int i = 0; i < 4; ++i)
        trials.push_back(synthetic_copy_channel_trial(rng, i % kNumSpeakers, 512, i));

    DecoderTraining cfg;
    cfg.lags = LagConfig{-50.0, 450.0, 64.0};
    cfg.fixed_lambda = 1e-3;

    const Decoder full = train_decoder(trials, cfg);
    std::vector<Trial> reduced(trials.begin(), trials.end() - 1);
    const Decoder partial = train_decoder(reduced, cfg);

    double diff = 0.0;
    for (std::size_t i = 0; i < full.weights.size(); ++i)
        diff += std::abs(full.weights.data()[i] - partial.weights.data()[i]);
    CHECK(diff > 0.0);
}

TEST_CASE("evaluate produces sane tables on a small synthetic dataset") {
    SynthConfig config;
    config.n_subjects = 2;
    config.trials_per_subject = 4;
    config.trial_length_s = 30.0;
    config.snr_db = 10.0;
    config.seed = 11;

    const std::vector<Trial> trials = generate_dataset(config);
    EvalOptions opts;
    opts.window_lengths_s = {5.0, 30.0};
    opts.lags = LagConfig{-50.0, 450.0, 64.0};
    opts.fixed_lambda = 1e-2;
    opts.threads = 2;

    const AccuracyTable table = evaluate(trials, opts);
    // 2 subjects x 4 folds x 2 window lengths
    CHECK(table.rows.size() == 16);
    for (const AccuracyRow& row : table.rows) {
        CHECK(row.n_correct <= row.n_windows);
        if (row.window_s == 5.0) CHECK(row.n_windows == 6);
        if (row.window_s == 30.0) CHECK(row.n_windows == 1);
    }
    REQUIRE(table.summaries.size() == 2);
    // high SNR, long window: essentially perfect
    CHECK(table.summaries[1].window_s == 30.0);
    CHECK(table.summaries[1].mean_accuracy >= 0.95);

    // summaries pool the same counts the rows carry
    long pooled = 0;
    for (const AccuracyRow& row : table.rows)
        if (row.window_s == 5.0) pooled += row.n_windows;
    CHECK(table.summaries[0].pooled_windows == pooled);
}

TEST_CASE("evaluate enforces per-subject trial counts and window bounds") {
    SynthConfig config;
    config.n_subjects = 1;
    config.trials_per_subject = 1;
    config.trial_length_s = 10.0;
    config.seed = 3;
    const std::vector<Trial> single = generate_dataset(config);

    EvalOptions opts;
    opts.lags = LagConfig{-50.0, 450.0, 64.0};
    opts.window_lengths_s = {5.0};
    CHECK_THROWS_AS(evaluate(single, opts), Error);

    config.trials_per_subject = 2;
    const std::vector<Trial> pair = generate_dataset(config);
    opts.window_lengths_s = {30.0}; // longer than the 10 s trials
    CHECK_THROWS_AS(evaluate(pair, opts), Error);
}

TEST_CASE("accuracy degrades monotonically as test noise grows") {
    SynthConfig config;
    config.n_subjects = 1;
    config.trials_per_subject = 6;
    config.trial_length_s = 60.0;
    config.snr_db = 10.0;
    config.seed = 99;

    std::vector<Trial> trials = generate_dataset(config);
    std::vector<Trial> train(trials.begin(), trials.begin() + 4);
    DecoderTraining cfg;
    cfg.lags = LagConfig{-50.0, 450.0, 64.0};
    cfg.fixed_lambda = 1e-2;
    const Decoder d = train_decoder(train, cfg);

    double rms = 0.0;
    for (std::size_t i = 0; i < trials[4].eeg.samples.size(); ++i)
        rms += trials[4].eeg.samples.data()[i] * trials[4].eeg.samples.data()[i];
    rms = std::sqrt(rms / static_cast<double>(trials[4].eeg.samples.size()));

    std::vector<double> accuracies;
    std::mt19937_64 noise_rng(7);
    for (double snr_db : {10.0, 0.0, -10.0}) {
        const double sigma = rms * std::pow(10.0, -snr_db / 20.0);
        int correct = 0, total = 0;
        for (std::size_t ti = 4; ti < trials.size(); ++ti) {
            Trial noisy = trials[ti];
            for (std::size_t i = 0; i < noisy.eeg.samples.size(); ++i)
                noisy.eeg.samples.data()[i] += testutil::random_normal(noise_rng, 1, sigma)[0];
            for (int w = 0; w < 30; ++w) {
                const WindowDecision decision = classify_window(d, noisy, w * 2.0, 2.0);
                ++total;
                if (decision.chosen == noisy.attended_index) ++correct;
            }
        }
        accuracies.push_back(static_cast<double>(correct) / total);
    }
    // allow one inversion of up to 2 percentage points
    CHECK(accuracies[1] <= accuracies[0] + 0.02);
    CHECK(accuracies[2] <= accuracies[1] + 0.02);
}

TEST_CASE("binomial significance closed forms") {
    CHECK(binomial_significance(0, 10, 0.25) == 1.0);
    CHECK(binomial_significance(10, 10, 0.25) ==
          doctest::Approx(std::pow(0.25, 10)).epsilon(1e-12));
    CHECK_THROWS_AS(binomial_significance(11, 10, 0.25), Error);
    CHECK_THROWS_AS(binomial_significance(-1, 10, 0.25), Error);
    CHECK_THROWS_AS(binomial_significance(1, 10, 0.0), Error);
}

TEST_CASE("binomial significance matches the pmf-summation oracle") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<long> n_dist(1, 200);
    std::uniform_real_distribution<double> p_dist(0.05, 0.95);
    for (int rep = 0; rep < 50; ++rep) {
        const long n = n_dist(rng);
        const long k = std::uniform_int_distribution<long>(0, n)(rng);
        const double p = p_dist(rng);

        // oracle: multiplicative pmf recurrence summed over the upper tail
        double pmf = std::pow(1.0 - p, static_cast<double>(n)); // P[X = 0]
        double tail = 0.0;
        for (long j = 0; j <= n; ++j) {
            if (j >= k) tail += pmf;
            pmf *= static_cast<double>(n - j) / static_cast<double>(j + 1) * p / (1.0 - p);
        }
        const double got = binomial_significance(k, n, p);
        CHECK(got == doctest::Approx(tail).epsilon(1e-12));
    }
}

} // TEST_SUITE
