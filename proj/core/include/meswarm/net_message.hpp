#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "meswarm/gain_dynamics.hpp"
#include "meswarm/lie.hpp"
#include "meswarm/models.hpp"
#include "meswarm/types.hpp"

namespace meswarm {

/// Wire schema version written into every encoded message.
inline constexpr int kNetMessageVersion = 1;

/// Accumulated product of exp(A dt) over the ticks [span_begin, span_end).
struct PropagationFactor {
  int from = 0;
  Mat15 lambda = Mat15::Identity();
  Tick span_begin = 0;
  Tick span_end = 0;
};

enum class UpdateEncoding { kDense, kFactored };

/// Everything a node needs to apply one measurement update to its column.
struct UpdateBroadcast {
  int origin = 0;
  Tick tick = 0;
  ObservationKind kind = ObservationKind::kLandmark;
  int subject = 0;
  double dt = 0.0;
  VecX r;            // 15n residual
  UpdateMatrix S;    // I + dt K E
  UpdateEncoding encoding = UpdateEncoding::kDense;
};

struct PeerStateRequest {
  int from = 0;
  int to = 0;
  Tick tick = 0;
};

struct PeerStateReply {
  int from = 0;
  int to = 0;
  Tick tick = 0;
  VehicleState state;
  MatX k_column;  // 15n x 15
};

using NetMessage = std::variant<PropagationFactor, UpdateBroadcast, PeerStateRequest, PeerStateReply>;

std::string_view message_type(const NetMessage& msg);
int message_sender(const NetMessage& msg);

/// Single-line JSON: {"v":1,"type":...}. Matrices are {"rows","cols","data"}
/// with row-major data; ticks are integers. Throws DataError on non-finite
/// payloads.
std::string encode(const NetMessage& msg);

/// Inverse of encode. Throws DataError on malformed input or an unknown
/// version/type.
NetMessage decode(std::string_view text);

/// One bus-log line: {"tick":N,"msg":<encode(msg)>}.
std::string encode_bus_record(Tick tick, const NetMessage& msg);

}  // namespace meswarm
