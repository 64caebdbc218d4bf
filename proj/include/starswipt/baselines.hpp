#pragma once

#include "starswipt/ao.hpp"

namespace starswipt::baselines {

// Comparison schemes. EsMode is the full optimizer; the others restrict the
// surface progressively further so sweeps can show what each degree of
// freedom is worth.
enum class Scheme {
  EsMode,            // per-element amplitude splits and phases, both sides
  EqualAmplitudeEs,  // amplitudes frozen at 1/2, phases still optimized
  ConventionalRis,   // reflect-only surface; transmission side served by the
                     // direct link alone
  WithoutRis,        // surface paths removed; beams and splits only
};

const char* to_string(Scheme scheme);

// Runs one scheme. Everything not pinned by the scheme (tolerances, budgets,
// randomization) is taken from opts; scheme-specific restrictions override
// the surface-related fields. WithoutRis runs on a copy of the channels with
// every surface path zeroed, which leaves results independent of the element
// count for a fixed seed.
ao::SolveReport run_baseline(Scheme scheme, const ChannelSet& channels,
                             const SystemConfig& config, const ao::AoOptions& opts,
                             RngStream& rng);

}  // namespace starswipt::baselines
