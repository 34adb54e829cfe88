// Copyright 2026 The splab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary and text persistence.
//
// Checkpoint (all integers and floats little-endian):
//
//   offset  size  field
//   0       4     magic "SPLB"
//   4       4     u32 format version (= 1)
//   8       4     u32 kind: 0 = toy model, 1 = SAE
//   -- toy --
//   12      8     u64 n_features
//   20      8     u64 n_hidden
//   -- sae --
//   12      8     u64 input_dim
//   20      8     u64 dict_size
//   28      4     u32 variant: 0 = TopK, 1 = L1
//   32      24    TopK: u64 k, u64 k_aux, f64 aux_weight
//                 L1:   f64 lambda, 16 zero bytes
//   --
//   ..      8     u64 payload length in bytes
//   ..      N     payload, f64 parameters
//                   toy: W row-major (n_hidden × n_features), then b
//                   sae: W_enc (dict × input), b_enc, W_dec (input × dict), b_pre
//   ..      4     u32 CRC-32 (zlib polynomial) of the payload bytes
//
// Activation dump:
//
//   0  4  magic "SPAC"
//   4  4  u32 version (= 1)
//   8  8  u64 n_samples
//   16 8  u64 dim
//   24 .  f32 payload, row-major
//   .. 4  u32 CRC-32 of the payload bytes
//
// All writers go through write_file_atomic (temp file + rename).

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "splab/errors.hpp"
#include "splab/metrics.hpp"
#include "splab/sae.hpp"
#include "splab/toymodel.hpp"

namespace splab {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kActivationDumpVersion = 1;

class EmptyDatasetError : public CorruptFileError {
 public:
  using CorruptFileError::CorruptFileError;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_checkpoint(const ToyModel& model);
std::vector<std::uint8_t> encode_checkpoint(const SaeModel& sae);

using AnyModel = std::variant<ToyModel, SaeModel>;
AnyModel decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ToyModel& model);
void save_checkpoint(const std::filesystem::path& path, const SaeModel& sae);
AnyModel load_checkpoint(const std::filesystem::path& path);
/// Throws ContractError if the file holds a different model kind.
ToyModel load_toy_checkpoint(const std::filesystem::path& path);
SaeModel load_sae_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_activation_dump(const ActivationDataset& ds);
ActivationDataset decode_activation_dump(std::span<const std::uint8_t> bytes,
                                         std::string provenance = {});
void write_activation_dump(const std::filesystem::path& path, const ActivationDataset& ds);
ActivationDataset read_activation_dump(const std::filesystem::path& path);

/// {"n_features":n,"nodes":[{"id","norm2","highlight"}],"edges":[{"i","j","w"}]}
/// highlight is null when the graph has no overlay.
std::string graph_to_json(const InterferenceGraph& graph);
InterferenceGraph graph_from_json(std::string_view json);

/// Undirected DOT graph. Node label = feature id, fill intensity follows the
/// overlay, edge penwidth is proportional to the weight and edges touching
/// highlighted nodes are tinted by the larger endpoint overlay.
std::string graph_to_dot(const InterferenceGraph& graph, std::string_view name = "interference");

/// Square matrix as CSV with a leading header row of column indices.
std::string matrix_to_csv(const Matrix& m);

/// Shortest decimal form that round-trips the double.
std::string format_double(double v);

}  // namespace splab
