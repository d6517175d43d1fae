#pragma once

// Snapshot persistence.
//
// CSV: header `replica,time,particle_id,parent_id,position,birth_time`, one
// row per particle, parent_id empty for roots, doubles in shortest
// round-trip form. Empty snapshots have no rows and are not recovered.
//
// Binary (all integers and doubles little-endian):
//   magic "BBMSNAP1" (8 bytes), u32 version = 1, u64 snapshot_count
//   per snapshot: u64 replica, f64 time, u64 pruned_count, u8 annihilated,
//                 u64 particle_count
//   per particle: u64 id, u64 parent_id (all ones for roots), f64 birth_time,
//                 f64 position

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bbmlab/engine.hpp"

namespace bbmlab {

void write_snapshots_csv(std::ostream& out, std::span<const PopulationSnapshot> snapshots);
std::vector<PopulationSnapshot> read_snapshots_csv(std::istream& in);

void write_snapshots_binary(std::ostream& out, std::span<const PopulationSnapshot> snapshots);
std::vector<PopulationSnapshot> read_snapshots_binary(std::istream& in);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace bbmlab
