#pragma once

// Checkpoint file layout (little-endian):
//   "IMCK" | version u32
//   config:   m u32 | n u32 | h u32 | eps f64 | flags u32 (bit 0: identity residual)
//   metadata: epoch u32 | best validation nDCG f64
//   tensors:  count u32, then per tensor
//             name length u16 | name | rank u8 | dims u32 × rank | float32 payload
// A JSON sidecar (<path>.json) mirrors the config and metadata for humans.

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "imrnn/adapter.hpp"
#include "imrnn/error.hpp"

namespace imrnn {

inline constexpr char kCheckpointMagic[4] = {'I', 'M', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

class CheckpointFormatError : public Error {
  public:
    enum class Kind { BadMagic, VersionMismatch, Truncated, MissingTensor, ShapeMismatch, NonFinite, BadRecord };

    CheckpointFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

std::string serialize_checkpoint(const AdapterCheckpoint& ckpt);
AdapterCheckpoint deserialize_checkpoint(const std::string& bytes);

/// Human-readable summary written to the sidecar and printed by `inspect`.
nlohmann::ordered_json checkpoint_summary(const AdapterCheckpoint& ckpt);

/// Writes the binary checkpoint and its sidecar, both atomically. `extra` is
/// merged into the sidecar (e.g. the training configuration).
void save_checkpoint(const AdapterCheckpoint& ckpt, const std::filesystem::path& path,
                     const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());
AdapterCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Rounds every parameter to float32, i.e. what a save/load cycle yields.
AdapterCheckpoint round_to_storage_precision(AdapterCheckpoint ckpt);

}  // namespace imrnn
