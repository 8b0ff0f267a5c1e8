#pragma once

#include "isac/io.hpp"

namespace isac {

/// Scenario on the configured topology; `seed` drives the channel draws.
Scenario make_scenario(const ExperimentConfig& c, std::uint64_t seed);

/// One SchemeSet per sweep value, all on the same channel realization.
std::vector<SweepRow> run_sweep(const ExperimentConfig& c, std::uint64_t seed);

/// Monte-Carlo oracles on seeded phases. The waveforms are the transmit-only
/// sensing designs (no SINR constraints) for the point and extended targets;
/// sigma_s^2 is rescaled so the point-target bound has the configured std.
ValidateReport run_validate(const ExperimentConfig& c, std::uint64_t seed);

}  // namespace isac
