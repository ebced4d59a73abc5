// SPDX-License-Identifier: Apache-2.0
//
// On-disk formats. Binary matrices are little-endian float64, row-major,
// behind a small header; CSV files carry "# key=value" metadata lines
// before the data rows. Doubles are written in shortest round-trip form.
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

#include "blockveil/channel.hpp"
#include "blockveil/eavesdrop.hpp"
#include "blockveil/linalg.hpp"
#include "blockveil/protocol.hpp"

namespace blockveil {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Metadata = std::map<std::string, std::string>;

std::string format_double(double v);

void write_matrix_binary(const std::filesystem::path& path, const Matrix& a, const Metadata& meta = {});
Matrix read_matrix_binary(const std::filesystem::path& path, Metadata* meta = nullptr);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& a, const Metadata& meta = {});
Matrix read_matrix_csv(const std::filesystem::path& path, Metadata* meta = nullptr);

/// Header carries m, n, seed and the generator tag.
void save_channel_binary(const std::filesystem::path& path, const ChannelMatrix& ch);
ChannelMatrix load_channel_binary(const std::filesystem::path& path);
void save_channel_csv(const std::filesystem::path& path, const ChannelMatrix& ch);
ChannelMatrix load_channel_csv(const std::filesystem::path& path);

/// {"n": n, "r": r, "labels": [1-based labels]}
nlohmann::json to_json(const BlockStructure& bs);
BlockStructure block_structure_from_json(const nlohmann::json& j);
void save_block_structure(const std::filesystem::path& path, const BlockStructure& bs);
BlockStructure load_block_structure(const std::filesystem::path& path);

/// One column per signal or snapshot.
void save_signals_csv(const std::filesystem::path& path, const Matrix& columns, const Metadata& meta);

/// Directory with sigma_hat.bin, b_tilde.bin, u_tilde.csv, b_hat.json
/// and manifest.json (attack parameters plus `extra`).
void save_moment_estimate(const std::filesystem::path& dir, const MomentEstimate& est, const AttackParams& params,
                          const nlohmann::json& extra = nlohmann::json::object());

}  // namespace blockveil
