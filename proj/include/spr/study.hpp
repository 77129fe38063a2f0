#pragma once

#include <array>
#include <vector>

namespace spr {

/// Treatment arms are indexed 0 (control) and 1 (treated).
inline constexpr std::array<int, 2> kArms{0, 1};

/// One arm of the completed trial: paired surrogate and primary outcome.
struct StudyAArm {
    std::vector<double> surrogates;
    std::vector<double> outcomes;
};

/// Completed trial with surrogate and primary outcome in both arms.
struct StudyAData {
    std::array<StudyAArm, 2> arms;
};

/// New trial. Only surrogates exist here: there is deliberately no outcome
/// field, so nothing downstream of ingestion can read Study B outcomes.
struct StudyBData {
    std::array<std::vector<double>, 2> surrogates;
};

} // namespace spr
