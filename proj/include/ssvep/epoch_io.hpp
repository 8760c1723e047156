#pragma once

#include <string>

#include "ssvep/types.hpp"

namespace ssvep {

// SSVP1 epoch file: 8-byte magic "SSVP0001", little-endian u32 n_trials,
// n_channels, n_samples, sampling_rate_hz, u8 label per trial, u16
// length-prefixed UTF-8 channel names, then f32 samples in trial-major,
// channel-major, sample-minor order.
void write_ssvp(const std::string& path, const EpochSet& epochs);

// Rejects wrong magic and truncated payloads with DataError.
EpochSet read_ssvp(const std::string& path);

}  // namespace ssvep
