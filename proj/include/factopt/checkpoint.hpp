#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "factopt/optimizer.hpp"

// Versioned binary container for the complete training state: the effective
// config text (so a run can be resumed from the file alone), the step
// counter, slot values and optimizer accumulators. Values are raw
// little-endian 64-bit floats, so a save/load round trip is bit-exact. The
// file ends with a checksum of everything before it; truncation or
// corruption fails the load.

namespace factopt {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointData {
  std::uint32_t version = 0;
  std::uint64_t config_hash = 0;
  std::string config_text;
  std::int64_t step = 0;
  std::vector<ParamSlot> slots;
  std::vector<SlotState> states;
  // Bytes of accumulator payload per slot (section data only) and of the
  // whole serialized state record including its headers.
  std::vector<std::size_t> state_payload_bytes;
  std::vector<std::size_t> state_total_bytes;
};

inline constexpr std::uint32_t checkpoint_version = 1;

std::string serialize_checkpoint(std::uint64_t config_hash,
                                 const std::string& config_text, std::int64_t step,
                                 std::span<const ParamSlot> slots,
                                 std::span<const SlotState> states);

CheckpointData parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, std::uint64_t config_hash,
                     const std::string& config_text, std::int64_t step,
                     std::span<const ParamSlot> slots,
                     std::span<const SlotState> states);

CheckpointData load_checkpoint(const std::string& path);

}  // namespace factopt
