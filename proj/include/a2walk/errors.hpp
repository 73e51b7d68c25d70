#pragma once

#include <stdexcept>
#include <string>

namespace a2walk {

enum class errc {
    invalid_vector,
    zero_vector,
    empty_trajectory,
    singular_matrix,
    not_in_group,
    non_regular_type,
    not_in_residue,
    invalid_end_set,
    invalid_epsilon,
    empty_measure,
    too_few_atoms,
    invalid_depth,
    invalid_argument,
    config_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_vector: return "InvalidVector";
        case errc::zero_vector: return "ZeroVector";
        case errc::empty_trajectory: return "EmptyTrajectory";
        case errc::singular_matrix: return "SingularMatrix";
        case errc::not_in_group: return "NotInGroup";
        case errc::non_regular_type: return "NonRegularType";
        case errc::not_in_residue: return "NotInResidue";
        case errc::invalid_end_set: return "InvalidEndSet";
        case errc::invalid_epsilon: return "InvalidEpsilon";
        case errc::empty_measure: return "EmptyMeasure";
        case errc::too_few_atoms: return "TooFewAtoms";
        case errc::invalid_depth: return "InvalidDepth";
        case errc::invalid_argument: return "InvalidArgument";
        case errc::config_error: return "ConfigError";
    }
    return "UnknownError";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

}  // namespace a2walk
