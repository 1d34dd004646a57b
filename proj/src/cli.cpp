#include "aad/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "aad/dataio.hpp"
#include "aad/dsp.hpp"
#include "aad/synth.hpp"

namespace aad {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct BandOption {
    double low = 2.0;
    double high = 8.0;
};

BandOption parse_band(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        fail(ErrorCode::config_error, "--band expects LO:HI, got '" + text + "'");
    try {
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        fail(ErrorCode::config_error, "--band expects numbers, got '" + text + "'");
    }
}

LagConfig parse_lags(const std::string& text, double fs) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        fail(ErrorCode::config_error, "--lags expects MIN:MAX in ms, got '" + text + "'");
    try {
        LagConfig lags{std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1)), fs};
        lags.check();
        return lags;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail(ErrorCode::config_error, "--lags expects numbers, got '" + text + "'");
    }
}

std::optional<double> parse_lambda(const std::string& text) {
    if (text == "auto") return std::nullopt;
    try {
        const double v = std::stod(text);
        if (v < 0.0) fail(ErrorCode::config_error, "--lambda must be >= 0");
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail(ErrorCode::config_error, "--lambda expects 'auto' or a number");
    }
}

int cmd_synth(const std::string& out_dir, int subjects, int trials, double length_s,
              double snr_db, std::uint64_t seed, int channels, int noise_channels) {
    SynthConfig config;
    config.n_subjects = subjects;
    config.trials_per_subject = trials;
    config.trial_length_s = length_s;
    config.snr_db = snr_db;
    config.seed = seed;
    config.n_channels = channels;
    config.noise_channels = noise_channels;
    config.check();

    const std::vector<Trial> dataset = generate_dataset(config);
    write_dataset(dataset, out_dir);
    std::cout << "wrote " << dataset.size() << " trials to " << out_dir << "\n";
    return kExitOk;
}

int cmd_preprocess(const std::string& manifest_path, const std::string& band_text,
                   double target_fs, const std::string& car, const std::string& out_dir) {
    if (car != "on" && car != "off")
        fail(ErrorCode::config_error, "--car expects on|off");
    const BandOption band = parse_band(band_text);
    const BandpassSpec spec{band.low, band.high, 4};

    const Manifest manifest = load_manifest(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    std::vector<Trial> processed;
    for (const TrialRecord& rec : manifest.trials) {
        Trial trial;
        trial.meta.subject = rec.subject;
        trial.meta.trial_id = rec.trial_id;
        trial.meta.azimuth_deg = rec.azimuth_deg;
        trial.attended_index = rec.attended_index;

        const MultiSeries raw = load_eeg(base / rec.eeg_path, rec.rows, rec.cols, rec.dtype,
                                         manifest.channels, manifest.fs_raw);
        trial.eeg = preprocess_chain(raw, spec, target_fs, car == "on");

        for (int c = 0; c < kNumSpeakers; ++c) {
            if (!rec.audio_paths.empty()) {
                const MonoSeries audio =
                    load_audio_wav(base / rec.audio_paths[static_cast<std::size_t>(c)]);
                trial.candidates[static_cast<std::size_t>(c)] =
                    preprocess_envelope(audio, spec, target_fs);
            } else {
                MonoSeries env = load_mono_f32(
                    base / rec.envelope_paths[static_cast<std::size_t>(c)], rec.rows,
                    manifest.fs_raw);
                env = filtfilt(env, design_bandpass(spec, env.fs));
                trial.candidates[static_cast<std::size_t>(c)] = resample(env, target_fs);
            }
            // Envelope extraction can differ from the EEG resampling by a
            // sample; trim both to the common length.
            auto& env = trial.candidates[static_cast<std::size_t>(c)];
            const std::size_t n = std::min(env.samples.size(), trial.eeg.length());
            env.samples.resize(n);
        }
        std::size_t n = trial.eeg.length();
        for (const auto& env : trial.candidates) n = std::min(n, env.samples.size());
        if (n < trial.eeg.length()) {
            Matrix trimmed(n, trial.eeg.n_channels());
            std::copy(trial.eeg.samples.data(), trial.eeg.samples.data() + trimmed.size(),
                      trimmed.data());
            trial.eeg.samples = std::move(trimmed);
        }
        for (auto& env : trial.candidates) env.samples.resize(n);

        trial.check();
        processed.push_back(std::move(trial));
    }
    write_dataset(processed, out_dir);
    std::cout << "wrote " << processed.size() << " preprocessed trials to " << out_dir << "\n";
    return kExitOk;
}

int cmd_trf(const std::string& manifest_path, const std::string& lags_text,
            const std::string& lambda_text, const std::string& out_path,
            const std::string& curves_csv) {
    const Manifest manifest = load_manifest(manifest_path);
    const std::vector<Trial> trials =
        load_trials(manifest, fs::path(manifest_path).parent_path());
    if (trials.empty()) fail(ErrorCode::config_error, "manifest lists no trials");

    const LagConfig lags = parse_lags(lags_text, manifest.fs_raw);
    const std::optional<double> fixed_lambda = parse_lambda(lambda_text);

    std::vector<TrialTrfs> per_trial;
    for (const Trial& trial : trials) {
        double lambda;
        if (fixed_lambda) {
            lambda = *fixed_lambda;
        } else {
            const auto& env =
                trial.candidates[static_cast<std::size_t>(trial.attended_index)];
            const DesignMatrix x = build_lag_matrix(env, lags, LagDirection::forward);
            lambda = select_lambda(x, trial.eeg.samples, default_lambda_grid(), 5).lambda;
        }
        TrialTrfs t;
        t.attended_index = trial.attended_index;
        for (int s = 0; s < kNumSpeakers; ++s)
            t.streams[static_cast<std::size_t>(s)] = estimate_trf(
                trial.candidates[static_cast<std::size_t>(s)], trial.eeg, lags, lambda);
        per_trial.push_back(std::move(t));
    }

    const TrfContrast contrast = contrast_trfs(per_trial);
    write_trf_contrast_json(contrast, out_path);
    if (!curves_csv.empty()) write_trf_curves_csv(contrast, curves_csv);
    std::printf("attended peak %.6g, unattended peak %.6g (%zu trials)\n",
                contrast.attended_peak, contrast.unattended_peak, per_trial.size());
    return kExitOk;
}

int cmd_decode(const std::string& manifest_path, const std::string& windows_text,
               const std::string& layout_text, const std::string& lambda_text,
               const std::string& lags_text, const std::string& out_path,
               const std::string& summary_path, int threads) {
    EvalOptions opts;
    opts.window_lengths_s.clear();
    {
        std::stringstream ss(windows_text);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                opts.window_lengths_s.push_back(std::stod(cell));
            } catch (const std::exception&) {
                fail(ErrorCode::config_error, "--windows expects a comma-separated list");
            }
        }
        if (opts.window_lengths_s.empty())
            fail(ErrorCode::config_error, "--windows lists no lengths");
    }

    const Manifest manifest = load_manifest(manifest_path);
    const std::vector<Trial> trials =
        load_trials(manifest, fs::path(manifest_path).parent_path());
    if (trials.empty()) fail(ErrorCode::config_error, "manifest lists no trials");

    opts.lags = parse_lags(lags_text, manifest.fs_raw);
    opts.fixed_lambda = parse_lambda(lambda_text);
    opts.threads = threads;
    if (!layout_text.empty() && layout_text != "full")
        opts.layout_channels = resolve_layout(layout_text).channels;

    const AccuracyTable table = evaluate(trials, opts);
    write_results_csv(table, out_path);
    if (!summary_path.empty()) write_summary_json(table, opts.chance, summary_path);

    for (const WindowSummary& s : table.summaries)
        std::printf("window %5.1fs: accuracy %.3f (SD %.3f), p=%.3g vs chance\n", s.window_s,
                    s.mean_accuracy, s.sd_accuracy, s.p_value_vs_chance);
    return kExitOk;
}

int cmd_layout(bool list, const std::string& show) {
    if (list) {
        for (const Layout& l : builtin_layouts())
            std::cout << l.name << " (" << l.channels.size() << " channels)\n";
        return kExitOk;
    }
    if (!show.empty()) {
        const Layout l = resolve_layout(show);
        for (const std::string& ch : l.channels) std::cout << ch << "\n";
        return kExitOk;
    }
    fail(ErrorCode::config_error, "layout: pass --list or --show NAME");
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Auditory attention decoding pipeline (TRF + stimulus reconstruction)"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic four-speaker dataset");
    std::string synth_out;
    int synth_subjects = 16, synth_trials = 6;
    double synth_length = 60.0, synth_snr = 0.0;
    std::uint64_t synth_seed = 1;
    int synth_channels = 20, synth_noise_channels = 0;
    synth->add_option("--out", synth_out, "Output dataset directory")->required();
    synth->add_option("--subjects", synth_subjects, "Number of subjects");
    synth->add_option("--trials", synth_trials, "Trials per subject");
    synth->add_option("--length-s", synth_length, "Trial length in seconds");
    synth->add_option("--snr-db", synth_snr, "EEG SNR in dB");
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--channels", synth_channels, "Informative channel count");
    synth->add_option("--noise-channels", synth_noise_channels,
                      "Signal-free channels appended after the informative ones");

    // preprocess
    auto* prep = app.add_subcommand("preprocess", "Band-pass, re-reference and resample a dataset");
    std::string prep_manifest, prep_band = "2:8", prep_car = "on", prep_out;
    double prep_fs = 64.0;
    prep->add_option("--manifest", prep_manifest, "Input manifest")->required();
    prep->add_option("--band", prep_band, "Band edges LO:HI in Hz");
    prep->add_option("--target-fs", prep_fs, "Output sampling rate");
    prep->add_option("--car", prep_car, "Common average reference on|off");
    prep->add_option("--out", prep_out, "Output dataset directory")->required();

    // trf
    auto* trf = app.add_subcommand("trf", "Estimate forward TRFs and the attended contrast");
    std::string trf_manifest, trf_lags = "-50:450", trf_lambda = "auto",
                trf_out = "trf.json", trf_curves;
    trf->add_option("--manifest", trf_manifest, "Input manifest")->required();
    trf->add_option("--lags", trf_lags, "Lag range MIN:MAX in ms");
    trf->add_option("--lambda", trf_lambda, "Ridge parameter, 'auto' for CV");
    trf->add_option("--out", trf_out, "Output JSON path");
    trf->add_option("--curves-csv", trf_curves, "Optional plot-ready CSV of the curves");

    // decode
    auto* dec = app.add_subcommand("decode", "Train decoders and score decision windows");
    std::string dec_manifest, dec_windows = "1,2,5,10,20,30,60", dec_layout,
                dec_lambda = "auto", dec_lags = "-50:450", dec_out = "results.csv",
                dec_summary;
    int dec_threads = 0;
    dec->add_option("--manifest", dec_manifest, "Input manifest")->required();
    dec->add_option("--windows", dec_windows, "Decision window lengths in seconds");
    dec->add_option("--layout", dec_layout, "Channel layout: builtin name or file");
    dec->add_option("--lambda", dec_lambda, "Ridge parameter, 'auto' for CV");
    dec->add_option("--lags", dec_lags, "Decoder lag range MIN:MAX in ms");
    dec->add_option("--out", dec_out, "Results CSV path");
    dec->add_option("--summary", dec_summary, "Summary JSON path");
    dec->add_option("--threads", dec_threads, "Worker threads (0 = auto)");

    // layout
    auto* lay = app.add_subcommand("layout", "List or show channel layouts");
    bool lay_list = false;
    std::string lay_show;
    lay->add_flag("--list", lay_list, "List builtin layouts");
    lay->add_option("--show", lay_show, "Print the channels of a layout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, synth_subjects, synth_trials, synth_length, synth_snr,
                             synth_seed, synth_channels, synth_noise_channels);
        if (prep->parsed())
            return cmd_preprocess(prep_manifest, prep_band, prep_fs, prep_car, prep_out);
        if (trf->parsed()) return cmd_trf(trf_manifest, trf_lags, trf_lambda, trf_out, trf_curves);
        if (dec->parsed())
            return cmd_decode(dec_manifest, dec_windows, dec_layout, dec_lambda, dec_lags,
                              dec_out, dec_summary, dec_threads);
        if (lay->parsed()) return cmd_layout(lay_list, lay_show);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_data_error() ? kExitData : kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

} // namespace aad
