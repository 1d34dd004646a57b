#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "aad/dataio.hpp"
#include "aad/synth.hpp"
#include "test_util.hpp"

using namespace aad;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("aad_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const void* data, std::size_t n) {
    std::ofstream out(p, std::ios::binary);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Independent WAV writer: header bytes assembled by hand.
void write_wav_pcm16(const fs::path& p, const std::vector<std::int16_t>& samples,
                     std::uint32_t rate, std::uint16_t channels) {
    const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
    std::vector<char> buf;
    auto push_u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    auto push_u16 = [&](std::uint16_t v) {
        buf.push_back(static_cast<char>(v & 0xff));
        buf.push_back(static_cast<char>((v >> 8) & 0xff));
    };
    buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
    push_u32(36 + data_size);
    buf.insert(buf.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    push_u32(16);
    push_u16(1); // PCM
    push_u16(channels);
    push_u32(rate);
    push_u32(rate * channels * 2);
    push_u16(static_cast<std::uint16_t>(channels * 2));
    push_u16(16);
    buf.insert(buf.end(), {'d', 'a', 't', 'a'});
    push_u32(data_size);
    buf.insert(buf.end(), reinterpret_cast<const char*>(samples.data()),
               reinterpret_cast<const char*>(samples.data()) + data_size);
    write_bytes(p, buf.data(), buf.size());
}

} // namespace

TEST_SUITE("dataio") {

TEST_CASE("raw float32 EEG follows the little-endian time-major layout") {
    TempDir tmp;
    const float payload[4] = {1.0f, 2.0f, 3.0f, 4.0f};
    write_bytes(tmp.path / "a.f32", payload, sizeof(payload));

    const MultiSeries eeg =
        load_eeg(tmp.path / "a.f32", 2, 2, "float32", {"c0", "c1"}, 64.0);
    CHECK(eeg.samples(0, 0) == 1.0);
    CHECK(eeg.samples(0, 1) == 2.0);
    CHECK(eeg.samples(1, 0) == 3.0);
    CHECK(eeg.samples(1, 1) == 4.0);
}

TEST_CASE("truncated or oversized raw files are format errors with byte counts") {
    TempDir tmp;
    const float payload[3] = {1.0f, 2.0f, 3.0f};
    write_bytes(tmp.path / "bad.f32", payload, sizeof(payload));
    try {
        load_eeg(tmp.path / "bad.f32", 2, 2, "float32", {"c0", "c1"}, 64.0);
        FAIL("expected a format error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format_error);
        CHECK(std::string(e.what()).find("16") != std::string::npos);
        CHECK(std::string(e.what()).find("12") != std::string::npos);
    }
}

TEST_CASE("non-finite values name the offending cell") {
    TempDir tmp;
    float payload[4] = {1.0f, 2.0f, std::numeric_limits<float>::quiet_NaN(), 4.0f};
    write_bytes(tmp.path / "nan.f32", payload, sizeof(payload));
    try {
        load_eeg(tmp.path / "nan.f32", 2, 2, "float32", {"c0", "c1"}, 64.0);
        FAIL("expected a data error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::data_error);
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
        CHECK(std::string(e.what()).find("column 0") != std::string::npos);
    }
}

TEST_CASE("raw round-trip of a random matrix is bit-identical") {
    TempDir tmp;
    std::mt19937_64 rng(4242);
    Matrix m(1000, 20);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<double>(static_cast<float>(
            testutil::random_normal(rng, 1)[0])); // representable in f32

    std::vector<std::string> channels;
    for (int c = 0; c < 20; ++c) channels.push_back("c" + std::to_string(c));
    save_eeg_f32(m, tmp.path / "rt.f32");
    const MultiSeries back = load_eeg(tmp.path / "rt.f32", 1000, 20, "float32", channels, 64.0);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(back.samples.data()[i] == m.data()[i]);
}

TEST_CASE("CSV EEG loads with an exact header match") {
    TempDir tmp;
    {
        std::ofstream out(tmp.path / "eeg.csv");
        out << "c0,c1\n1.5,2.5\n-3.0,4.0\n";
    }
    const MultiSeries eeg = load_eeg(tmp.path / "eeg.csv", 2, 2, "float32", {"c0", "c1"}, 64.0);
    CHECK(eeg.samples(1, 0) == -3.0);

    CHECK_THROWS_AS(load_eeg(tmp.path / "eeg.csv", 2, 2, "float32", {"x", "y"}, 64.0), Error);
}

TEST_CASE("wav loading scales 16-bit PCM by 1/32768") {
    TempDir tmp;
    std::vector<std::int16_t> samples(16000, 16384);
    write_wav_pcm16(tmp.path / "half.wav", samples, 16000, 1);
    const MonoSeries audio = load_audio_wav(tmp.path / "half.wav");
    CHECK(audio.fs == 16000.0);
    REQUIRE(audio.samples.size() == 16000);
    for (double v : audio.samples) CHECK(v == 0.5);
}

TEST_CASE("stereo and non-PCM wav files are rejected") {
    TempDir tmp;
    std::vector<std::int16_t> samples(64, 0);
    write_wav_pcm16(tmp.path / "stereo.wav", samples, 8000, 2);
    CHECK_THROWS_AS(load_audio_wav(tmp.path / "stereo.wav"), Error);

    write_bytes(tmp.path / "junk.wav", "NOTAWAVE", 8);
    CHECK_THROWS_AS(load_audio_wav(tmp.path / "junk.wav"), Error);
}

TEST_CASE("wav sine round-trips within quantization error") {
    TempDir tmp;
    const double freq = 440.0, rate = 16000.0;
    std::vector<std::int16_t> samples(1600);
    std::vector<double> expected(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double v = 0.8 * std::sin(2.0 * std::numbers::pi * freq * i / rate);
        const long q = std::lround(v * 32768.0);
        samples[i] = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
        expected[i] = v;
    }
    write_wav_pcm16(tmp.path / "sine.wav", samples, 16000, 1);
    const MonoSeries audio = load_audio_wav(tmp.path / "sine.wav");
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(std::abs(audio.samples[i] - expected[i]) < 1.0 / 32768.0);
}

TEST_CASE("layouts subset and reorder channels") {
    std::mt19937_64 rng(5);
    MultiSeries eeg{Matrix(10, 4), 64.0, {"a", "b", "c", "d"}};
    for (std::size_t i = 0; i < eeg.samples.size(); ++i)
        eeg.samples.data()[i] = testutil::random_normal(rng, 1)[0];

    const Layout full{"full", {"a", "b", "c", "d"}};
    const MultiSeries same = select_layout(eeg, full);
    for (std::size_t i = 0; i < eeg.samples.size(); ++i)
        CHECK(same.samples.data()[i] == eeg.samples.data()[i]);

    const Layout sub{"sub", {"d", "b"}};
    const MultiSeries two = select_layout(eeg, sub);
    REQUIRE(two.n_channels() == 2);
    CHECK(two.channels[0] == "d");
    for (std::size_t t = 0; t < 10; ++t) {
        CHECK(two.samples(t, 0) == eeg.samples(t, 3));
        CHECK(two.samples(t, 1) == eeg.samples(t, 1));
    }

    const Layout missing{"missing", {"a", "zz", "qq"}};
    try {
        select_layout(eeg, missing);
        FAIL("expected layout error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::layout_error);
        CHECK(std::string(e.what()).find("zz") != std::string::npos);
        CHECK(std::string(e.what()).find("qq") != std::string::npos);
    }
}

TEST_CASE("builtin layouts and layout files resolve") {
    CHECK(find_builtin_layout("ear20").has_value());
    CHECK(find_builtin_layout("ear20")->channels.size() == 20);
    CHECK(!find_builtin_layout("nope").has_value());

    TempDir tmp;
    {
        std::ofstream out(tmp.path / "custom.layout");
        out << "# comment\nL1\nR1\n\nR2\n";
    }
    const Layout l = load_layout_file(tmp.path / "custom.layout");
    CHECK(l.name == "custom");
    CHECK(l.channels == std::vector<std::string>{"L1", "R1", "R2"});

    CHECK_THROWS_AS(resolve_layout("definitely_not_a_layout"), Error);
}

TEST_CASE("manifest round-trip is byte-identical") {
    TempDir tmp;
    SynthConfig config;
    config.n_subjects = 2;
    config.trials_per_subject = 2;
    config.trial_length_s = 2.0;
    config.n_channels = 3;
    config.seed = 77;

    write_dataset(generate_dataset(config), tmp.path / "ds");
    const std::string first = read_text(tmp.path / "ds" / "manifest.json");

    const Manifest m = load_manifest(tmp.path / "ds" / "manifest.json");
    save_manifest(m, tmp.path / "ds" / "manifest2.json");
    const std::string second = read_text(tmp.path / "ds" / "manifest2.json");
    CHECK(first == second);
}

TEST_CASE("dataset round-trip preserves trials exactly at float32 precision") {
    TempDir tmp;
    SynthConfig config;
    config.n_subjects = 1;
    config.trials_per_subject = 2;
    config.trial_length_s = 3.0;
    config.n_channels = 4;
    config.seed = 3;

    const std::vector<Trial> trials = generate_dataset(config);
    write_dataset(trials, tmp.path / "ds");
    const Manifest manifest = load_manifest(tmp.path / "ds" / "manifest.json");
    const std::vector<Trial> loaded = load_trials(manifest, tmp.path / "ds");

    REQUIRE(loaded.size() == trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
        CHECK(loaded[i].attended_index == trials[i].attended_index);
        CHECK(loaded[i].meta.subject == trials[i].meta.subject);
        CHECK(loaded[i].eeg.channels == trials[i].eeg.channels);
        for (std::size_t j = 0; j < trials[i].eeg.samples.size(); ++j)
            CHECK(loaded[i].eeg.samples.data()[j] ==
                  static_cast<double>(static_cast<float>(trials[i].eeg.samples.data()[j])));
    }
}

TEST_CASE("manifests validate their schema") {
    TempDir tmp;
    {
        std::ofstream out(tmp.path / "bad.json");
        out << "{\"version\": 1, \"fs_raw\": 64.0, \"channels\": [\"a\"], \"trials\": "
               "[{\"subject\": \"S01\", \"trial_id\": 0, \"attended_index\": 9, "
               "\"eeg\": {\"path\": \"x.f32\", \"rows\": 1, \"cols\": 1, \"dtype\": "
               "\"float32\"}, \"envelopes\": [\"a\",\"b\",\"c\",\"d\"]}]}";
    }
    CHECK_THROWS_AS(load_manifest(tmp.path / "bad.json"), Error);

    {
        std::ofstream out(tmp.path / "bad2.json");
        out << "{not json";
    }
    CHECK_THROWS_AS(load_manifest(tmp.path / "bad2.json"), Error);

    CHECK_THROWS_AS(load_manifest(tmp.path / "missing.json"), Error);
}

} // TEST_SUITE
