#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aad/decoder.hpp"
#include "aad/trf.hpp"
#include "aad/trial.hpp"

namespace aad {

// One trial's on-disk record. Either four envelope files (raw float32 at the
// manifest rate) or four WAV files still needing envelope extraction.
struct TrialRecord {
    std::string subject;
    int trial_id = 0;
    int attended_index = 0;
    std::string eeg_path;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string dtype = "float32";
    std::vector<std::string> envelope_paths;
    std::vector<std::string> audio_paths;
    std::array<double, kNumSpeakers> azimuth_deg = kSpeakerAzimuthsDeg;
};

struct Manifest {
    int version = 1;
    double fs_raw = 64.0;
    std::vector<std::string> channels;
    std::vector<TrialRecord> trials;
};

Manifest load_manifest(const std::filesystem::path& path);
// Canonical serialization: alphabetical keys, shortest round-trip floats.
// write -> load -> write is byte-identical.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Raw little-endian float32, time-major. The declared shape must match the
// file size exactly; NaN/Inf raise data_error naming the first offending cell.
MultiSeries load_eeg(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                     const std::string& dtype, std::vector<std::string> channels, double fs);
void save_eeg_f32(const Matrix& samples, const std::filesystem::path& path);

MonoSeries load_mono_f32(const std::filesystem::path& path, std::size_t n, double fs);
void save_mono_f32(const std::vector<double>& samples, const std::filesystem::path& path);

// CSV with a header row of channel labels.
MultiSeries load_eeg_csv(const std::filesystem::path& path,
                         const std::vector<std::string>& expected_channels, double fs);

// RIFF/WAVE, PCM 16-bit mono; samples scaled to [-1, 1) by 1/32768.
MonoSeries load_audio_wav(const std::filesystem::path& path);

struct Layout {
    std::string name;
    std::vector<std::string> channels;
};

MultiSeries select_layout(const MultiSeries& eeg, const Layout& layout);

// Built-ins cover the synthetic channel naming; real-data layouts come from
// files with one label per line.
std::vector<Layout> builtin_layouts();
std::optional<Layout> find_builtin_layout(const std::string& name);
Layout load_layout_file(const std::filesystem::path& path);

// Resolve --layout NAME|FILE: builtin name first, then a layout file path.
Layout resolve_layout(const std::string& name_or_path);

std::vector<Trial> load_trials(const Manifest& manifest, const std::filesystem::path& base_dir);

// Writes EEG + envelope files and the manifest for a synthetic dataset.
void write_dataset(const std::vector<Trial>& trials, const std::filesystem::path& dir);

void write_results_csv(const AccuracyTable& table, const std::filesystem::path& path);
void write_summary_json(const AccuracyTable& table, double chance,
                        const std::filesystem::path& path);

void write_trf_contrast_json(const TrfContrast& contrast, const std::filesystem::path& path);
void write_trf_curves_csv(const TrfContrast& contrast, const std::filesystem::path& path);

} // namespace aad
