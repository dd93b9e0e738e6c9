#pragma once

// Binary checkpoint container (all integers little-endian):
//
//   offset 0   8 bytes   magic "RALSTMCK"
//          8   u32       format version (currently 1)
//         12   u64       header length H
//         20   H bytes   header, UTF-8 JSON object
//       20+H   u32       tensor count K
//   then K records:
//              u32       name length, followed by the name bytes
//              u32 rows, u32 cols
//              rows*cols f64, row-major, IEEE-754 binary64 little-endian
//
// Tensors are written in ParameterSet order.

#include <cstdint>
#include <string>

#include "json.hpp"
#include "ralstm/autodiff.hpp"

namespace ralstm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json header;
  ParameterSet params;
};

std::string serialize_checkpoint(const nlohmann::json& header,
                                 const ParameterSet& params);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void write_checkpoint(const std::string& path, const nlohmann::json& header,
                      const ParameterSet& params);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace ralstm
