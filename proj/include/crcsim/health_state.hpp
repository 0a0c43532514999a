#pragma once

#include <array>

namespace crcsim {

/// The nine health states of the colorectal cancer natural-history model.
enum class HealthState : int {
    Normal = 0,
    SmallAdenoma = 1,
    LargeAdenoma = 2,
    PreclinicalEarlyCrc = 3,
    PreclinicalLateCrc = 4,
    ClinicalEarlyCrc = 5,
    ClinicalLateCrc = 6,
    CrcDeath = 7,
    OtherDeath = 8,
};

inline constexpr int kNumStates = 9;

constexpr bool is_absorbing(HealthState s) {
    return s == HealthState::CrcDeath || s == HealthState::OtherDeath;
}

constexpr bool is_alive(HealthState s) { return !is_absorbing(s); }

constexpr bool is_clinical(HealthState s) {
    return s == HealthState::ClinicalEarlyCrc || s == HealthState::ClinicalLateCrc;
}

constexpr bool is_adenoma(HealthState s) {
    return s == HealthState::SmallAdenoma || s == HealthState::LargeAdenoma;
}

inline const char* to_string(HealthState s) {
    static constexpr std::array<const char*, kNumStates> names = {
        "normal",         "small_adenoma",      "large_adenoma",
        "preclin_early",  "preclin_late",       "clin_early",
        "clin_late",      "crc_death",          "other_death",
    };
    return names[static_cast<int>(s)];
}

}  // namespace crcsim
