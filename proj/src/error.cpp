#include "zn/error.hpp"

#include <set>

namespace zn {

bool is_input_error(const std::string& code) {
    static const std::set<std::string> codes = {
        "DuplicateBranchPoint", "BadCount",    "InvalidIndex", "GenusZero",
        "NonClosedCycle",       "PoleHit",     "WrongN",       "BadIndices",
        "CoincidentProjection", "GenusTooSmall", "BadInput",   "PoleOnPath",
        "PoleAtBranchPoint",    "DegenerateVandermonde",
    };
    return codes.count(code) > 0;
}

bool is_convergence_error(const std::string& code) {
    static const std::set<std::string> codes = {
        "PathTooClose",  "PrecisionLoss",     "NonConvergent",     "NoConvergence",
        "RankDeficient", "SingularAMatrix",   "NotNegativeDefinite", "Underflow",
        "NoCandidate",   "Ambiguous",         "SingularCharacteristic",
        "StepTooLarge",  "Overflow",          "DegenerateSampling",
    };
    return codes.count(code) > 0;
}

} // namespace zn
