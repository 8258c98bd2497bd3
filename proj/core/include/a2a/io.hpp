#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "a2a/dynamics.hpp"
#include "a2a/geometry.hpp"

namespace a2a {

std::vector<std::vector<double>> matrix_to_rows(const Mat& m);
Mat rows_to_matrix(const std::vector<std::vector<double>>& rows);

/// Writes via a temp file in the same directory plus rename, so readers
/// never observe a partial file.
void atomic_write_text(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

/// FNV-1a over bytes; stable across platforms (std::hash is not). Used to
/// stamp every emitted artifact with the config that produced it.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

/// trajectory.csv: one row per recorded state, columns
///   turn, speaker, err_w, err_u, state_0..state_{d-1}
/// with both error columns evaluated at every state. A leading `#` comment
/// line carries the config hash.
std::string trajectory_to_csv(const Trajectory& traj, const ObjectivePair& pair,
                              const std::string& config_hash);

/// Same rows as the CSV, one JSON object per line.
std::string trajectory_to_jsonl(const Trajectory& traj, const ObjectivePair& pair,
                                const std::string& config_hash);

}  // namespace a2a
