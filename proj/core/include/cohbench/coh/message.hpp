#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cohbench/coh/types.hpp"

namespace cohbench::coh {

enum class MsgKind : std::uint8_t {
  ReqShared,             // requester wants a readable copy
  ReqExclusive,          // requester wants a writable copy (with data)
  ReqUpgrade,            // requester holds S/O and wants M (no data needed)
  InvalidateToInvalid,   // home recalls a line, holder drops to Invalid
  DowngradeToShared,     // home recalls a line, holder drops to Shared/Owned
  RespData,              // data grant; carries payload and granted state
  RespAck,               // dataless completion (upgrade grant, clean recall)
  RetryLater,            // "not ready yet": requester should ask again
  WriteBack,             // holder returns a line to home (dirty or clean)
};

const char* to_string(MsgKind k);

struct Message {
  MsgKind kind{};
  LineId line{};
  std::uint64_t txn = 0;  // requester-chosen id, echoed in the reply
  NodeId src = 0;
  // RespData only: state granted to the requester (Shared or Exclusive).
  std::optional<CacheLineState> granted;
  // RespData always, WriteBack when dirty.
  std::optional<LineData> data;
};

}  // namespace cohbench::coh
