#include "aad/dataio.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aad/dsp.hpp"

namespace aad {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw float32 I/O assumes a little-endian host");

std::vector<char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<char> buf(static_cast<std::size_t>(size));
    if (size > 0) in.read(buf.data(), size);
    if (!in) fail(ErrorCode::io_error, "short read from " + path.string());
    return buf;
}

std::uint32_t le_u32(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

std::uint16_t le_u16(const char* p) {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
}

json manifest_to_json(const Manifest& m) {
    json root;
    root["version"] = m.version;
    root["fs_raw"] = m.fs_raw;
    root["channels"] = m.channels;
    json trials = json::array();
    for (const TrialRecord& t : m.trials) {
        json jt;
        jt["subject"] = t.subject;
        jt["trial_id"] = t.trial_id;
        jt["attended_index"] = t.attended_index;
        jt["eeg"] = {{"path", t.eeg_path},
                     {"rows", t.rows},
                     {"cols", t.cols},
                     {"dtype", t.dtype}};
        if (!t.envelope_paths.empty()) jt["envelopes"] = t.envelope_paths;
        if (!t.audio_paths.empty()) jt["audio"] = t.audio_paths;
        jt["azimuths_deg"] = t.azimuth_deg;
        trials.push_back(std::move(jt));
    }
    root["trials"] = std::move(trials);
    return root;
}

} // namespace

Manifest load_manifest(const fs::path& path) {
    if (!fs::exists(path))
        fail(ErrorCode::config_error, "manifest not found: " + path.string());
    std::ifstream in(path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        fail(ErrorCode::format_error, "manifest parse error: " + std::string(e.what()));
    }
    try {
        Manifest m;
        m.version = root.at("version").get<int>();
        if (m.version != 1)
            fail(ErrorCode::format_error,
                 "unsupported manifest version " + std::to_string(m.version));
        m.fs_raw = root.at("fs_raw").get<double>();
        m.channels = root.at("channels").get<std::vector<std::string>>();
        for (const json& jt : root.at("trials")) {
            TrialRecord t;
            t.subject = jt.at("subject").get<std::string>();
            t.trial_id = jt.at("trial_id").get<int>();
            t.attended_index = jt.at("attended_index").get<int>();
            const json& eeg = jt.at("eeg");
            t.eeg_path = eeg.at("path").get<std::string>();
            t.rows = eeg.at("rows").get<std::size_t>();
            t.cols = eeg.at("cols").get<std::size_t>();
            t.dtype = eeg.at("dtype").get<std::string>();
            if (jt.contains("envelopes"))
                t.envelope_paths = jt.at("envelopes").get<std::vector<std::string>>();
            if (jt.contains("audio"))
                t.audio_paths = jt.at("audio").get<std::vector<std::string>>();
            if (t.envelope_paths.empty() == t.audio_paths.empty())
                fail(ErrorCode::format_error,
                     "manifest trial needs exactly one of 'envelopes' or 'audio'");
            const std::size_t n_cand =
                t.envelope_paths.empty() ? t.audio_paths.size() : t.envelope_paths.size();
            if (n_cand != kNumSpeakers)
                fail(ErrorCode::format_error, "manifest trial must list exactly 4 candidates");
            if (jt.contains("azimuths_deg")) {
                const auto az = jt.at("azimuths_deg").get<std::vector<double>>();
                if (az.size() != kNumSpeakers)
                    fail(ErrorCode::format_error, "manifest trial needs 4 azimuths");
                std::copy(az.begin(), az.end(), t.azimuth_deg.begin());
            }
            if (t.attended_index < 0 || t.attended_index >= kNumSpeakers)
                fail(ErrorCode::format_error, "manifest attended_index out of range");
            m.trials.push_back(std::move(t));
        }
        return m;
    } catch (const json::exception& e) {
        fail(ErrorCode::format_error, "manifest schema error: " + std::string(e.what()));
    }
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    out << manifest_to_json(manifest).dump(2) << "\n";
}

MultiSeries load_eeg(const fs::path& path, std::size_t rows, std::size_t cols,
                     const std::string& dtype, std::vector<std::string> channels, double fs) {
    if (path.extension() == ".csv") return load_eeg_csv(path, channels, fs);
    if (dtype != "float32")
        fail(ErrorCode::format_error, "unsupported EEG dtype '" + dtype + "'");
    const std::vector<char> bytes = read_file(path);
    const std::size_t expected = rows * cols * 4;
    if (bytes.size() != expected)
        fail(ErrorCode::format_error,
             path.string() + ": expected " + std::to_string(expected) + " bytes for " +
                 std::to_string(rows) + "x" + std::to_string(cols) + " float32, found " +
                 std::to_string(bytes.size()));

    MultiSeries out;
    out.fs = fs;
    out.channels = std::move(channels);
    out.samples = Matrix(rows, cols);
    const float* src = reinterpret_cast<const float*>(bytes.data());
    for (std::size_t i = 0; i < rows * cols; ++i) {
        const double v = static_cast<double>(src[i]);
        if (!std::isfinite(v))
            fail(ErrorCode::data_error,
                 path.string() + ": non-finite value at row " + std::to_string(i / cols) +
                     ", column " + std::to_string(i % cols));
        out.samples.data()[i] = v;
    }
    if (out.channels.size() != cols)
        fail(ErrorCode::schema_error, path.string() + ": channel label count mismatch");
    return out;
}

void save_eeg_f32(const Matrix& samples, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    std::vector<float> buf(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        buf[i] = static_cast<float>(samples.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * 4));
}

MonoSeries load_mono_f32(const fs::path& path, std::size_t n, double fs) {
    const std::vector<char> bytes = read_file(path);
    if (bytes.size() != n * 4)
        fail(ErrorCode::format_error,
             path.string() + ": expected " + std::to_string(n * 4) + " bytes, found " +
                 std::to_string(bytes.size()));
    MonoSeries out{std::vector<double>(n), fs};
    const float* src = reinterpret_cast<const float*>(bytes.data());
    for (std::size_t i = 0; i < n; ++i) {
        out.samples[i] = static_cast<double>(src[i]);
        if (!std::isfinite(out.samples[i]))
            fail(ErrorCode::data_error,
                 path.string() + ": non-finite value at sample " + std::to_string(i));
    }
    return out;
}

void save_mono_f32(const std::vector<double>& samples, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    std::vector<float> buf(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) buf[i] = static_cast<float>(samples[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * 4));
}

MultiSeries load_eeg_csv(const fs::path& path, const std::vector<std::string>& expected_channels,
                         double fs) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorCode::format_error, path.string() + ": empty CSV");

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (!expected_channels.empty() && header != expected_channels)
        fail(ErrorCode::format_error, path.string() + ": CSV header does not match channel list");

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            double v;
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                fail(ErrorCode::format_error,
                     path.string() + ": bad number '" + cell + "' at row " +
                         std::to_string(rows) + ", column " + std::to_string(col));
            }
            if (!std::isfinite(v))
                fail(ErrorCode::data_error, path.string() + ": non-finite value at row " +
                                                std::to_string(rows) + ", column " +
                                                std::to_string(col));
            values.push_back(v);
            ++col;
        }
        if (col != header.size())
            fail(ErrorCode::format_error,
                 path.string() + ": row " + std::to_string(rows) + " has " +
                     std::to_string(col) + " cells, header has " +
                     std::to_string(header.size()));
        ++rows;
    }

    MultiSeries out;
    out.fs = fs;
    out.channels = header;
    out.samples = Matrix(rows, header.size());
    std::copy(values.begin(), values.end(), out.samples.data());
    return out;
}

MonoSeries load_audio_wav(const fs::path& path) {
    const std::vector<char> bytes = read_file(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        fail(ErrorCode::format_error, path.string() + ": not a RIFF/WAVE file");

    std::size_t pos = 12;
    std::uint16_t format = 0, n_channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    bool have_fmt = false;
    const char* data = nullptr;
    std::uint32_t data_size = 0;

    while (pos + 8 <= bytes.size()) {
        const char* id = bytes.data() + pos;
        const std::uint32_t size = le_u32(bytes.data() + pos + 4);
        pos += 8;
        if (pos + size > bytes.size())
            fail(ErrorCode::format_error, path.string() + ": truncated chunk");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16) fail(ErrorCode::format_error, path.string() + ": short fmt chunk");
            format = le_u16(bytes.data() + pos);
            n_channels = le_u16(bytes.data() + pos + 2);
            sample_rate = le_u32(bytes.data() + pos + 4);
            bits = le_u16(bytes.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + pos;
            data_size = size;
        }
        pos += size + (size % 2); // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr)
        fail(ErrorCode::format_error, path.string() + ": missing fmt or data chunk");
    if (format != 1 || bits != 16)
        fail(ErrorCode::format_error,
             path.string() + ": only 16-bit PCM is supported (format " +
                 std::to_string(format) + ", " + std::to_string(bits) + " bits)");
    if (n_channels != 1)
        fail(ErrorCode::format_error, path.string() + ": only mono is supported (" +
                                          std::to_string(n_channels) + " channels)");

    const std::size_t n = data_size / 2;
    MonoSeries out{std::vector<double>(n), static_cast<double>(sample_rate)};
    for (std::size_t i = 0; i < n; ++i) {
        std::int16_t sample;
        std::memcpy(&sample, data + 2 * i, 2);
        out.samples[i] = static_cast<double>(sample) / 32768.0;
    }
    return out;
}

MultiSeries select_layout(const MultiSeries& eeg, const Layout& layout) {
    return select_channels(eeg, layout.channels);
}

std::vector<Layout> builtin_layouts() {
    std::vector<Layout> layouts;
    Layout ear20{"ear20", {}};
    for (int i = 1; i <= 10; ++i) ear20.channels.push_back("L" + std::to_string(i));
    for (int i = 1; i <= 10; ++i) ear20.channels.push_back("R" + std::to_string(i));
    layouts.push_back(std::move(ear20));
    Layout noise20{"noise20", {}};
    for (int i = 1; i <= 20; ++i) noise20.channels.push_back("N" + std::to_string(i));
    layouts.push_back(std::move(noise20));
    return layouts;
}

std::optional<Layout> find_builtin_layout(const std::string& name) {
    for (Layout& l : builtin_layouts())
        if (l.name == name) return std::move(l);
    return std::nullopt;
}

Layout load_layout_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open layout file " + path.string());
    Layout layout;
    layout.name = path.stem().string();
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        layout.channels.push_back(line);
    }
    if (layout.channels.empty())
        fail(ErrorCode::layout_error, "layout file " + path.string() + " lists no channels");
    return layout;
}

Layout resolve_layout(const std::string& name_or_path) {
    if (auto builtin = find_builtin_layout(name_or_path)) return *builtin;
    if (fs::exists(name_or_path)) return load_layout_file(name_or_path);
    fail(ErrorCode::layout_error,
         "layout '" + name_or_path + "' is neither a builtin name nor a file");
}

std::vector<Trial> load_trials(const Manifest& manifest, const fs::path& base_dir) {
    std::vector<Trial> trials;
    for (const TrialRecord& rec : manifest.trials) {
        Trial trial;
        trial.meta.subject = rec.subject;
        trial.meta.trial_id = rec.trial_id;
        trial.meta.azimuth_deg = rec.azimuth_deg;
        trial.attended_index = rec.attended_index;
        trial.eeg = load_eeg(base_dir / rec.eeg_path, rec.rows, rec.cols, rec.dtype,
                             manifest.channels, manifest.fs_raw);
        if (!rec.envelope_paths.empty()) {
            for (int c = 0; c < kNumSpeakers; ++c)
                trial.candidates[static_cast<std::size_t>(c)] = load_mono_f32(
                    base_dir / rec.envelope_paths[static_cast<std::size_t>(c)], rec.rows,
                    manifest.fs_raw);
        } else {
            for (int c = 0; c < kNumSpeakers; ++c) {
                const MonoSeries audio =
                    load_audio_wav(base_dir / rec.audio_paths[static_cast<std::size_t>(c)]);
                trial.candidates[static_cast<std::size_t>(c)] =
                    preprocess_envelope(audio, BandpassSpec{}, manifest.fs_raw);
            }
        }
        trial.check();
        trials.push_back(std::move(trial));
    }
    return trials;
}

void write_dataset(const std::vector<Trial>& trials, const fs::path& dir) {
    fs::create_directories(dir);
    Manifest manifest;
    if (!trials.empty()) {
        manifest.fs_raw = trials.front().eeg.fs;
        manifest.channels = trials.front().eeg.channels;
    }
    for (const Trial& trial : trials) {
        TrialRecord rec;
        rec.subject = trial.meta.subject;
        rec.trial_id = trial.meta.trial_id;
        rec.attended_index = trial.attended_index;
        rec.azimuth_deg = trial.meta.azimuth_deg;
        rec.rows = trial.eeg.length();
        rec.cols = trial.eeg.n_channels();
        const std::string stem = rec.subject + "_t" + std::to_string(rec.trial_id);
        rec.eeg_path = stem + "_eeg.f32";
        save_eeg_f32(trial.eeg.samples, dir / rec.eeg_path);
        for (int c = 0; c < kNumSpeakers; ++c) {
            const std::string env_path = stem + "_env" + std::to_string(c) + ".f32";
            save_mono_f32(trial.candidates[static_cast<std::size_t>(c)].samples,
                          dir / env_path);
            rec.envelope_paths.push_back(env_path);
        }
        manifest.trials.push_back(std::move(rec));
    }
    save_manifest(manifest, dir / "manifest.json");
}

void write_results_csv(const AccuracyTable& table, const fs::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    out << "subject,fold,window_s,n_windows,n_correct,accuracy,skipped_windows\n";
    char buf[64];
    for (const AccuracyRow& row : table.rows) {
        std::snprintf(buf, sizeof(buf), "%.6f", row.accuracy());
        out << row.subject << ',' << row.fold << ',' << row.window_s << ','
            << row.n_windows << ',' << row.n_correct << ',' << buf << ','
            << row.skipped_windows << '\n';
    }
}

void write_summary_json(const AccuracyTable& table, double chance, const fs::path& path) {
    json root;
    root["chance_level"] = chance;
    json windows = json::array();
    for (const WindowSummary& s : table.summaries) {
        windows.push_back({{"window_s", s.window_s},
                           {"mean_accuracy", s.mean_accuracy},
                           {"sd_accuracy", s.sd_accuracy},
                           {"pooled_windows", s.pooled_windows},
                           {"pooled_correct", s.pooled_correct},
                           {"p_value_vs_chance", s.p_value_vs_chance}});
    }
    root["windows"] = std::move(windows);
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    out << root.dump(2) << "\n";
}

namespace {

json trf_to_json(const Trf& trf) {
    json jt;
    jt["lag_axis_ms"] = trf.lag_axis_ms;
    jt["channels"] = trf.channels;
    jt["lambda"] = trf.lambda;
    json weights = json::array();
    for (std::size_t li = 0; li < trf.weights.rows(); ++li) {
        json row = json::array();
        for (std::size_t c = 0; c < trf.weights.cols(); ++c) row.push_back(trf.weights(li, c));
        weights.push_back(std::move(row));
    }
    jt["weights"] = std::move(weights);
    return jt;
}

} // namespace

void write_trf_contrast_json(const TrfContrast& contrast, const fs::path& path) {
    json root;
    root["attended"] = trf_to_json(contrast.attended);
    root["unattended"] = trf_to_json(contrast.unattended);
    json streams = json::array();
    for (const Trf& t : contrast.unattended_streams) streams.push_back(trf_to_json(t));
    root["unattended_streams"] = std::move(streams);
    root["attended_peak"] = contrast.attended_peak;
    root["unattended_peak"] = contrast.unattended_peak;
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    out << root.dump(2) << "\n";
}

void write_trf_curves_csv(const TrfContrast& contrast, const fs::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    out << "condition,channel,lag_ms,weight\n";
    auto dump = [&](const std::string& condition, const Trf& trf) {
        for (std::size_t c = 0; c < trf.channels.size(); ++c)
            for (std::size_t li = 0; li < trf.lag_axis_ms.size(); ++li)
                out << condition << ',' << trf.channels[c] << ',' << trf.lag_axis_ms[li]
                    << ',' << trf.weights(li, c) << '\n';
    };
    dump("attended", contrast.attended);
    dump("unattended", contrast.unattended);
    for (std::size_t s = 0; s < contrast.unattended_streams.size(); ++s)
        dump("unattended_stream" + std::to_string(s + 1), contrast.unattended_streams[s]);
}

} // namespace aad
