#pragma once

#include "isac/core.hpp"

#include <string>
#include <vector>

namespace isac {

enum class Receiver { TypeI, TypeII };
enum class TargetModel { Point, Extended };

std::string to_string(Receiver r);
std::string to_string(TargetModel t);

/// Transmit covariances after (or before) rank-one extraction.
struct TransmitSolution {
    std::vector<std::vector<CMat>> info;   // W_{l,k}, M x M
    CMat sense;                            // R_0
    std::vector<std::vector<CVec>> beams;  // w_{l,k}; empty until extracted

    /// R_x = sum W_{l,k} + R_0.
    CMat total_covariance() const;
    double power() const { return total_covariance().trace().real(); }
    bool extracted() const { return !beams.empty(); }
};

/// Per-IRS unit-modulus reflection vectors; `lifted` holds the last SDP
/// solution for each IRS when one was computed.
struct ReflectSolution {
    std::vector<CVec> phases;
    std::vector<CMat> lifted;
};

}  // namespace isac
