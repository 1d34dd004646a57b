#pragma once

#include <array>
#include <string>

#include "aad/series.hpp"

namespace aad {

inline constexpr int kNumSpeakers = 4;
inline constexpr std::array<double, kNumSpeakers> kSpeakerAzimuthsDeg{+30.0, -30.0,
                                                                      +90.0, -90.0};

struct TrialMeta {
    std::string subject;
    int trial_id = 0;
    std::array<double, kNumSpeakers> azimuth_deg = kSpeakerAzimuthsDeg;
};

// One listening trial: preprocessed EEG plus the four candidate speech
// envelopes and the index of the attended one.
struct Trial {
    MultiSeries eeg;
    std::array<MonoSeries, kNumSpeakers> candidates;
    int attended_index = 0;
    TrialMeta meta;

    void check() const {
        if (attended_index < 0 || attended_index >= kNumSpeakers)
            fail(ErrorCode::invalid_spec, "Trial: attended_index out of range");
        for (const auto& env : candidates) {
            if (env.samples.size() != eeg.length())
                fail(ErrorCode::schema_error,
                     "Trial: candidate envelope length differs from EEG");
            if (env.fs != eeg.fs)
                fail(ErrorCode::schema_error, "Trial: candidate fs differs from EEG");
        }
    }
};

} // namespace aad
