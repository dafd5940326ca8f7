#ifndef FCNCP_MESSAGE_HPP
#define FCNCP_MESSAGE_HPP

#include <cstdint>
#include <vector>

#include "fcncp/tensor.hpp"

namespace fcncp {

/// Wire protocol version.
inline constexpr std::uint8_t kProtocolVersion = 0x01;

/// Hard cap on a frame's declared length; anything larger is treated as a
/// corrupted length prefix.
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 30;

enum class MsgType : std::uint8_t {
  Hello = 0x01,         ///< client -> server: client index
  Factors = 0x02,       ///< client -> server: coupled-mode factor matrices (selection phase)
  Locations = 0x03,     ///< server -> client: selected component indices
  PublicUpload = 0x04,  ///< client -> server: round, rel_err, coupled columns
  GlobalBcast = 0x05,   ///< server -> client: round, done flag, global columns
  RoundStatus = 0x06,   ///< either way: round, flag, rel_err
  Shutdown = 0x07,
};

/// A decoded protocol message. Only the fields relevant to `type` are
/// meaningful. The schema deliberately has no representation for a tensor or
/// an uncoupled-mode factor matrix outside the selection phase.
struct Message {
  MsgType type = MsgType::Shutdown;
  std::uint32_t client = 0;           ///< Hello
  std::uint32_t round = 0;            ///< PublicUpload, GlobalBcast, RoundStatus
  std::uint8_t flag = 0;              ///< GlobalBcast done, RoundStatus flag
  double rel_err = 0.0;               ///< PublicUpload, RoundStatus
  std::vector<Matrix> matrices;       ///< Factors, PublicUpload, GlobalBcast
  std::vector<std::uint64_t> indices; ///< Locations

  bool operator==(const Message& o) const;
};

/// Full frame: 4-byte LE length of the rest, version byte, type byte,
/// payload (counted dims + row-major LE doubles).
std::vector<std::uint8_t> encode_message(const Message& m);

/// Decodes a full frame. Throws Error(protocol) on truncation, bad version,
/// unknown type, length overflow, or trailing bytes.
Message decode_message(const std::uint8_t* data, std::size_t len);

inline Message decode_message(const std::vector<std::uint8_t>& frame) {
  return decode_message(frame.data(), frame.size());
}

}  // namespace fcncp

#endif
