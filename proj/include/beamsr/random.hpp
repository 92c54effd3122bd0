#pragma once

#include <cstdint>
#include <random>

namespace beamsr {

using Engine = std::mt19937_64;

/// One SplitMix64 output for state `x`: mixes x + 0x9E3779B97F4A7C15.
std::uint64_t splitmix64_mix(std::uint64_t x);

/// Seed derivation for trajectory streams.
///
/// Stream s (0 = beam: arrivals, initial spins, cavity noise; 1 = local:
/// spontaneous-emission and dephasing noise) of trajectory k is the
/// mt19937_64 seeded through std::seed_seq with the eight 32-bit halves
/// (low word first) of
///   v_i = splitmix64_mix(key + (i + 1) * 0x9E3779B97F4A7C15),  i = 0..3,
/// where key = splitmix64_mix(master + (2k + s + 1) * 0x9E3779B97F4A7C15).
/// The rule depends only on (master, k, s), never on scheduling.
Engine make_stream(std::uint64_t master_seed, std::uint64_t trajectory,
                   int stream);

struct RngStreams {
  Engine beam;
  Engine local;

  static RngStreams for_trajectory(std::uint64_t master_seed,
                                   std::uint64_t trajectory);
};

}  // namespace beamsr
