#pragma once

#include "slowfast/sde.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace slowfast {

// One row per recorded time: time, then state components.
void write_path_csv(const SdePath& path, std::ostream& os, const std::vector<std::string>& column_names = {});

// SFAV1 binary frame, all fields little-endian:
//   char[5]  "SFAV1"
//   u32      state_dim
//   u32      noise_dim
//   f64      step
//   u64      n_times
//   u64      n_increments (steps with retained increments, 0 if none)
//   i64      stopped_at (-1 when the path was not stopped)
//   f64[n_times]                 times
//   f64[n_times * state_dim]     states, row-major
//   f64[n_increments * noise_dim] increments, row-major
void write_path_binary(const SdePath& path, std::ostream& os);
SdePath read_path_binary(std::istream& is);

}  // namespace slowfast
