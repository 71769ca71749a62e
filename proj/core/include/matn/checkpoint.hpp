#pragma once

#include "matn/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace matn {

// Little-endian container:
//   "MATN" | u32 version | u32 x 9 config block | u32 tensor count |
//   per tensor: u16 name length, name, u8 rank, u64 dims, f64 payload |
//   u32 CRC32 of everything after the magic.
// The config block is (d, H, M, N, L, I, J, target_index, model code).
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelCode : std::uint32_t {
  kMatnRelu = 0,  // MATN, ReLU feature extractor
  kBiasMF = 1,
};

struct CheckpointHeader {
  std::uint32_t dim = 0;
  std::uint32_t heads = 0;
  std::uint32_t memories = 0;
  std::uint32_t depth = 0;
  std::uint32_t behaviors = 0;
  std::uint32_t users = 0;
  std::uint32_t items = 0;
  std::uint32_t target_index = 0;
  ModelCode model = ModelCode::kMatnRelu;

  bool operator==(const CheckpointHeader&) const = default;
};

struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  bool operator==(const NamedTensor&) const = default;
};

struct CheckpointData {
  CheckpointHeader header;
  std::vector<NamedTensor> tensors;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data);
// Throws FormatError (magic/version) or CorruptionError (truncation, CRC).
CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint_file(const std::filesystem::path& path,
                           const CheckpointData& data);
CheckpointData read_checkpoint_file(const std::filesystem::path& path);

// Peeks at the header of any checkpoint (MATN or BiasMF).
CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

struct LoadedModel {
  ModelParams params;
  TrainConfig config;  // shape and ablation switches; training knobs default
  std::size_t users = 0;
  std::size_t target_index = 0;
};

// MATN checkpoints carry the forward-pass switches in a "variant_flags"
// tensor so a reloaded model reproduces the saved forward pass.
void save_checkpoint(const ModelParams& params, const TrainConfig& config,
                     std::size_t users, std::size_t target_index,
                     const std::filesystem::path& path);
LoadedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace matn
