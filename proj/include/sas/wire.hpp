#ifndef SAS_WIRE_HPP
#define SAS_WIRE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "sas/policy.hpp"

// Coordinator/worker wire protocol: every frame is a 4-byte big-endian
// length prefix followed by a versioned payload with little-endian
// numerics. docs/protocol.md spells out the byte layout.

namespace sas::wire {

inline constexpr uint32_t kProtocolVersion = 1;

enum class MessageType : uint8_t {
    params_broadcast = 1,
    params_ack = 2,
    task = 3,
    result = 4,
    nack = 5,
    shutdown = 6,
};

struct TaskMessage {
    uint64_t task_id = 0;
    uint64_t params_version = 0;
    uint64_t noise_seed = 0;
    int8_t sign = 1;
    double sigma = 0.0;
    uint64_t scenario_id = 0;
    uint32_t k = 1;
    uint32_t max_steps = 0;  // 0 = until scenario end

    bool operator==(const TaskMessage&) const = default;
};

struct ResultMessage {
    uint64_t task_id = 0;
    double episode_return = 0.0;
    uint32_t steps_survived = 0;
    double mean_risk = 0.0;
    uint32_t worker_id = 0;
    double wall_seconds = 0.0;

    bool operator==(const ResultMessage&) const = default;
};

struct ParamsBroadcast {
    uint64_t version = 0;
    std::vector<uint8_t> blob;  // policy checkpoint bytes
};

struct ParamsAck {
    uint64_t version = 0;
    uint32_t worker_id = 0;
};

struct Nack {
    uint64_t task_id = 0;
    uint64_t expected_version = 0;
    uint64_t held_version = 0;
    uint32_t worker_id = 0;
};

// frame builders (payload wrapped with the length prefix)
std::vector<uint8_t> encode_params(const ParamsBroadcast& msg);
std::vector<uint8_t> encode_ack(const ParamsAck& msg);
std::vector<uint8_t> encode_task(const TaskMessage& msg);
std::vector<uint8_t> encode_result(const ResultMessage& msg);
std::vector<uint8_t> encode_nack(const Nack& msg);
std::vector<uint8_t> encode_shutdown();

struct Frame {
    MessageType type;
    std::vector<uint8_t> body;  // payload after type + protocol version
};

// Splits one full frame's bytes (prefix included) into type + body.
// Throws ParseError on malformed input or protocol version mismatch.
Frame decode_frame(const std::vector<uint8_t>& frame);

ParamsBroadcast decode_params(const Frame& frame);
ParamsAck decode_ack(const Frame& frame);
TaskMessage decode_task(const Frame& frame);
ResultMessage decode_result(const Frame& frame);
Nack decode_nack(const Frame& frame);

// Incremental reassembly of frames from a byte stream.
class FrameReader {
public:
    void feed(const uint8_t* data, size_t n);
    // next complete frame (prefix included), if any
    std::optional<std::vector<uint8_t>> next();

private:
    std::vector<uint8_t> buffer_;
};

}  // namespace sas::wire

#endif
