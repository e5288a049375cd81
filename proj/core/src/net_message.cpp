#include "meswarm/net_message.hpp"

#include <json.hpp>

#include "meswarm/error.hpp"

namespace meswarm {

using json = nlohmann::ordered_json;

namespace {

template <typename Derived>
json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
  if (!m.allFinite()) throw DataError("refusing to encode a non-finite matrix");
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

MatX matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw DataError("matrix payload size does not match its shape");
  }
  MatX m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
  }
  return m;
}

template <int N>
Eigen::Matrix<double, N, 1> vector_from_json(const json& j) {
  const MatX m = matrix_from_json(j);
  if (m.rows() != N || m.cols() != 1) throw DataError("vector payload has the wrong length");
  return m;
}

json state_to_json(const VehicleState& X) {
  return json{{"R", matrix_to_json(X.R())},
              {"x", matrix_to_json(X.x())},
              {"v", matrix_to_json(X.v())},
              {"gyro_bias", matrix_to_json(X.gyro_bias)},
              {"accel_bias", matrix_to_json(X.accel_bias)}};
}

VehicleState state_from_json(const json& j) {
  VehicleState X;
  const MatX R = matrix_from_json(j.at("R"));
  if (R.rows() != 3 || R.cols() != 3) throw DataError("rotation payload must be 3x3");
  X.pose.R = R;
  X.pose.x = vector_from_json<3>(j.at("x"));
  X.pose.v = vector_from_json<3>(j.at("v"));
  X.gyro_bias = vector_from_json<3>(j.at("gyro_bias"));
  X.accel_bias = vector_from_json<3>(j.at("accel_bias"));
  return X;
}

std::string_view kind_name(ObservationKind kind) {
  return kind == ObservationKind::kLandmark ? "landmark" : "intervehicle";
}

ObservationKind kind_from_name(const std::string& s) {
  if (s == "landmark") return ObservationKind::kLandmark;
  if (s == "intervehicle") return ObservationKind::kInterVehicle;
  throw DataError("unknown observation kind '" + s + "'");
}

json to_json(const PropagationFactor& m) {
  return json{{"from", m.from}, {"span", {m.span_begin, m.span_end}}, {"lambda", matrix_to_json(m.lambda)}};
}

json to_json(const UpdateBroadcast& m) {
  json j{{"origin", m.origin},
         {"tick", m.tick},
         {"kind", kind_name(m.kind)},
         {"subject", m.subject},
         {"dt", m.dt},
         {"r", matrix_to_json(m.r)},
         {"involved", m.S.vehicles()}};
  if (m.encoding == UpdateEncoding::kDense) {
    j["encoding"] = "dense";
    j["S"] = matrix_to_json(m.S.dense());
  } else {
    j["encoding"] = "factored";
    j["S"] = matrix_to_json(m.S.columns());
  }
  return j;
}

json to_json(const PeerStateRequest& m) { return json{{"from", m.from}, {"to", m.to}, {"tick", m.tick}}; }

json to_json(const PeerStateReply& m) {
  return json{{"from", m.from},
              {"to", m.to},
              {"tick", m.tick},
              {"state", state_to_json(m.state)},
              {"k_column", matrix_to_json(m.k_column)}};
}

json message_to_json(const NetMessage& msg) {
  json body = std::visit([](const auto& m) { return to_json(m); }, msg);
  json out{{"v", kNetMessageVersion}, {"type", message_type(msg)}};
  out.update(body);
  return out;
}

}  // namespace

std::string_view message_type(const NetMessage& msg) {
  struct Visitor {
    std::string_view operator()(const PropagationFactor&) const { return "propagation_factor"; }
    std::string_view operator()(const UpdateBroadcast&) const { return "update"; }
    std::string_view operator()(const PeerStateRequest&) const { return "peer_state_request"; }
    std::string_view operator()(const PeerStateReply&) const { return "peer_state_reply"; }
  };
  return std::visit(Visitor{}, msg);
}

int message_sender(const NetMessage& msg) {
  struct Visitor {
    int operator()(const PropagationFactor& m) const { return m.from; }
    int operator()(const UpdateBroadcast& m) const { return m.origin; }
    int operator()(const PeerStateRequest& m) const { return m.from; }
    int operator()(const PeerStateReply& m) const { return m.from; }
  };
  return std::visit(Visitor{}, msg);
}

std::string encode(const NetMessage& msg) { return message_to_json(msg).dump(); }

std::string encode_bus_record(Tick tick, const NetMessage& msg) {
  return json{{"tick", tick}, {"msg", message_to_json(msg)}}.dump();
}

NetMessage decode(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed message: ") + e.what());
  }
  try {
    if (j.at("v").get<int>() != kNetMessageVersion) throw DataError("unsupported message version");
    const auto type = j.at("type").get<std::string>();
    if (type == "propagation_factor") {
      PropagationFactor m;
      m.from = j.at("from").get<int>();
      const auto& span = j.at("span");
      m.span_begin = span.at(0).get<Tick>();
      m.span_end = span.at(1).get<Tick>();
      const MatX lambda = matrix_from_json(j.at("lambda"));
      if (lambda.rows() != kDof || lambda.cols() != kDof) throw DataError("lambda must be 15x15");
      m.lambda = lambda;
      return m;
    }
    if (type == "update") {
      UpdateBroadcast m;
      m.origin = j.at("origin").get<int>();
      m.tick = j.at("tick").get<Tick>();
      m.kind = kind_from_name(j.at("kind").get<std::string>());
      m.subject = j.at("subject").get<int>();
      m.dt = j.at("dt").get<double>();
      const MatX r = matrix_from_json(j.at("r"));
      if (r.cols() != 1 || r.rows() % kDof != 0) throw DataError("residual must be a 15n vector");
      m.r = r;
      auto involved = j.at("involved").get<std::vector<int>>();
      const auto enc = j.at("encoding").get<std::string>();
      const MatX S = matrix_from_json(j.at("S"));
      const int n = static_cast<int>(m.r.size() / kDof);
      if (enc == "dense") {
        m.encoding = UpdateEncoding::kDense;
        m.S = UpdateMatrix::from_dense(S, std::move(involved));
      } else if (enc == "factored") {
        m.encoding = UpdateEncoding::kFactored;
        m.S = UpdateMatrix(n, std::move(involved), S);
      } else {
        throw DataError("unknown update encoding '" + enc + "'");
      }
      if (m.S.network_size() != n) throw DataError("update matrix and residual disagree on network size");
      return m;
    }
    if (type == "peer_state_request") {
      return PeerStateRequest{j.at("from").get<int>(), j.at("to").get<int>(), j.at("tick").get<Tick>()};
    }
    if (type == "peer_state_reply") {
      PeerStateReply m;
      m.from = j.at("from").get<int>();
      m.to = j.at("to").get<int>();
      m.tick = j.at("tick").get<Tick>();
      m.state = state_from_json(j.at("state"));
      m.k_column = matrix_from_json(j.at("k_column"));
      if (m.k_column.cols() != kDof || m.k_column.rows() % kDof != 0) throw DataError("K column must be 15n x 15");
      return m;
    }
    throw DataError("unknown message type '" + type + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed message: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed message: ") + e.what());
  }
}

}  // namespace meswarm
