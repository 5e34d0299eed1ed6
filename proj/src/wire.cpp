#include "sas/wire.hpp"

#include <cstring>

#include "sas/errors.hpp"

namespace sas::wire {

namespace {

template <typename T>
void put(std::vector<uint8_t>& out, T value) {
    uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T take(const std::vector<uint8_t>& in, size_t& offset) {
    if (offset + sizeof(T) > in.size()) throw ParseError("wire message truncated");
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    offset += sizeof(T);
    return value;
}

std::vector<uint8_t> finish(MessageType type, const std::vector<uint8_t>& body) {
    const size_t payload = 1 + 4 + body.size();
    std::vector<uint8_t> frame;
    frame.reserve(4 + payload);
    frame.push_back(static_cast<uint8_t>(payload >> 24));
    frame.push_back(static_cast<uint8_t>(payload >> 16));
    frame.push_back(static_cast<uint8_t>(payload >> 8));
    frame.push_back(static_cast<uint8_t>(payload));
    frame.push_back(static_cast<uint8_t>(type));
    put<uint32_t>(frame, kProtocolVersion);
    frame.insert(frame.end(), body.begin(), body.end());
    return frame;
}

}  // namespace

std::vector<uint8_t> encode_params(const ParamsBroadcast& msg) {
    std::vector<uint8_t> body;
    put<uint64_t>(body, msg.version);
    put<uint32_t>(body, static_cast<uint32_t>(msg.blob.size()));
    body.insert(body.end(), msg.blob.begin(), msg.blob.end());
    return finish(MessageType::params_broadcast, body);
}

std::vector<uint8_t> encode_ack(const ParamsAck& msg) {
    std::vector<uint8_t> body;
    put<uint64_t>(body, msg.version);
    put<uint32_t>(body, msg.worker_id);
    return finish(MessageType::params_ack, body);
}

std::vector<uint8_t> encode_task(const TaskMessage& msg) {
    std::vector<uint8_t> body;
    put<uint64_t>(body, msg.task_id);
    put<uint64_t>(body, msg.params_version);
    put<uint64_t>(body, msg.noise_seed);
    put<int8_t>(body, msg.sign);
    put<double>(body, msg.sigma);
    put<uint64_t>(body, msg.scenario_id);
    put<uint32_t>(body, msg.k);
    put<uint32_t>(body, msg.max_steps);
    return finish(MessageType::task, body);
}

std::vector<uint8_t> encode_result(const ResultMessage& msg) {
    std::vector<uint8_t> body;
    put<uint64_t>(body, msg.task_id);
    put<double>(body, msg.episode_return);
    put<uint32_t>(body, msg.steps_survived);
    put<double>(body, msg.mean_risk);
    put<uint32_t>(body, msg.worker_id);
    put<double>(body, msg.wall_seconds);
    return finish(MessageType::result, body);
}

std::vector<uint8_t> encode_nack(const Nack& msg) {
    std::vector<uint8_t> body;
    put<uint64_t>(body, msg.task_id);
    put<uint64_t>(body, msg.expected_version);
    put<uint64_t>(body, msg.held_version);
    put<uint32_t>(body, msg.worker_id);
    return finish(MessageType::nack, body);
}

std::vector<uint8_t> encode_shutdown() { return finish(MessageType::shutdown, {}); }

Frame decode_frame(const std::vector<uint8_t>& frame) {
    if (frame.size() < 9) throw ParseError("frame too short");
    const size_t payload = (static_cast<size_t>(frame[0]) << 24) |
                           (static_cast<size_t>(frame[1]) << 16) |
                           (static_cast<size_t>(frame[2]) << 8) | static_cast<size_t>(frame[3]);
    if (frame.size() != 4 + payload) throw ParseError("frame length mismatch");
    Frame out;
    out.type = static_cast<MessageType>(frame[4]);
    size_t offset = 5;
    const auto version = take<uint32_t>(frame, offset);
    if (version != kProtocolVersion)
        throw ParseError("protocol version " + std::to_string(version) + " unsupported");
    out.body.assign(frame.begin() + static_cast<long>(offset), frame.end());
    return out;
}

ParamsBroadcast decode_params(const Frame& frame) {
    if (frame.type != MessageType::params_broadcast) throw ParseError("not a params frame");
    size_t offset = 0;
    ParamsBroadcast msg;
    msg.version = take<uint64_t>(frame.body, offset);
    const auto len = take<uint32_t>(frame.body, offset);
    if (offset + len != frame.body.size()) throw ParseError("params blob length mismatch");
    msg.blob.assign(frame.body.begin() + static_cast<long>(offset), frame.body.end());
    return msg;
}

ParamsAck decode_ack(const Frame& frame) {
    if (frame.type != MessageType::params_ack) throw ParseError("not an ack frame");
    size_t offset = 0;
    ParamsAck msg;
    msg.version = take<uint64_t>(frame.body, offset);
    msg.worker_id = take<uint32_t>(frame.body, offset);
    return msg;
}

TaskMessage decode_task(const Frame& frame) {
    if (frame.type != MessageType::task) throw ParseError("not a task frame");
    size_t offset = 0;
    TaskMessage msg;
    msg.task_id = take<uint64_t>(frame.body, offset);
    msg.params_version = take<uint64_t>(frame.body, offset);
    msg.noise_seed = take<uint64_t>(frame.body, offset);
    msg.sign = take<int8_t>(frame.body, offset);
    msg.sigma = take<double>(frame.body, offset);
    msg.scenario_id = take<uint64_t>(frame.body, offset);
    msg.k = take<uint32_t>(frame.body, offset);
    msg.max_steps = take<uint32_t>(frame.body, offset);
    return msg;
}

ResultMessage decode_result(const Frame& frame) {
    if (frame.type != MessageType::result) throw ParseError("not a result frame");
    size_t offset = 0;
    ResultMessage msg;
    msg.task_id = take<uint64_t>(frame.body, offset);
    msg.episode_return = take<double>(frame.body, offset);
    msg.steps_survived = take<uint32_t>(frame.body, offset);
    msg.mean_risk = take<double>(frame.body, offset);
    msg.worker_id = take<uint32_t>(frame.body, offset);
    msg.wall_seconds = take<double>(frame.body, offset);
    return msg;
}

Nack decode_nack(const Frame& frame) {
    if (frame.type != MessageType::nack) throw ParseError("not a nack frame");
    size_t offset = 0;
    Nack msg;
    msg.task_id = take<uint64_t>(frame.body, offset);
    msg.expected_version = take<uint64_t>(frame.body, offset);
    msg.held_version = take<uint64_t>(frame.body, offset);
    msg.worker_id = take<uint32_t>(frame.body, offset);
    return msg;
}

void FrameReader::feed(const uint8_t* data, size_t n) { buffer_.insert(buffer_.end(), data, data + n); }

std::optional<std::vector<uint8_t>> FrameReader::next() {
    if (buffer_.size() < 4) return std::nullopt;
    const size_t payload = (static_cast<size_t>(buffer_[0]) << 24) |
                           (static_cast<size_t>(buffer_[1]) << 16) |
                           (static_cast<size_t>(buffer_[2]) << 8) | static_cast<size_t>(buffer_[3]);
    if (buffer_.size() < 4 + payload) return std::nullopt;
    std::vector<uint8_t> frame(buffer_.begin(), buffer_.begin() + static_cast<long>(4 + payload));
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<long>(4 + payload));
    return frame;
}

}  // namespace sas::wire
