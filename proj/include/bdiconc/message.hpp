#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "bdiconc/spec.hpp"
#include "bdiconc/term.hpp"

namespace bdiconc {

struct Message {
    std::string sender;
    std::string receiver;
    Performative performative = Performative::Tell;
    Term content;        // resolved
    std::uint64_t seq = 0;   // per (sender, receiver), from 0

    friend bool operator==(const Message&, const Message&) = default;
};

// Per-receiver FIFO. post() may be called from any thread; drain() only by
// the worker currently holding the receiver.
//
// The mailbox also carries the receiver's park state so that "post wakes a
// parked receiver" is decided atomically with the enqueue: a post racing a
// park always leaves the receiver runnable.
class Mailbox {
public:
    enum class PostResult { Queued, WokeReceiver };

    PostResult post(Message m);
    std::vector<Message> drain();

    bool empty() const;
    std::size_t size() const;

    // Park the receiver unless mail arrived. Returns true when parked.
    // A stopped receiver always parks and is never woken again.
    bool try_park();
    void mark_stopped();
    bool stopped() const;
    // Clears the parked flag without a post (initial scheduling).
    void unpark();

private:
    mutable std::mutex mu_;
    std::deque<Message> queue_;
    bool parked_ = false;
    bool stopped_ = false;
};

class UnknownReceiver : public std::runtime_error {
public:
    explicit UnknownReceiver(const std::string& name) : std::runtime_error("unknown receiver '" + name + "'") {}
};

// The mailboxes of one run, addressed by instance name. post() is safe from
// any thread; the roster is fixed at construction.
class MessageBus {
public:
    explicit MessageBus(const std::vector<std::string>& roster);

    struct Posted {
        std::size_t receiver;
        Mailbox::PostResult result;
    };

    // Throws UnknownReceiver for a name outside the roster.
    Posted post(Message m);
    std::vector<Message> drain(std::string_view receiver);

    std::optional<std::size_t> index_of(std::string_view name) const;
    std::size_t size() const { return boxes_.size(); }
    Mailbox& mailbox(std::size_t i) { return *boxes_[i]; }
    const Mailbox& mailbox(std::size_t i) const { return *boxes_[i]; }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::unique_ptr<Mailbox>> boxes_;
};

class DecodeError : public std::runtime_error {
public:
    DecodeError(std::size_t offset, const std::string& reason);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Wire frame: u32 big-endian payload length, then the UTF-8 payload
// `sender|receiver|performative|seq|canonical-term`.
std::string encode_wire(const Message& m);
// Exactly one frame; trailing bytes, truncation or a non-canonical payload
// raise DecodeError.
Message decode_wire(std::string_view frame);

std::string encode_payload(const Message& m);
Message decode_payload(std::string_view payload, std::size_t base_offset = 0);

// Control frames share the framing with messages; their payload starts with
// '!' which no sender name can.
struct ControlFrame {
    std::string verb;
    std::string body;
};

using Frame = std::variant<Message, ControlFrame>;

std::string encode_frame(std::string_view payload);
std::string encode_control(std::string_view verb, std::string_view body = {});

// Incremental frame splitter for byte streams.
class FrameReader {
public:
    static constexpr std::uint32_t kMaxFrame = 64u << 20;

    void feed(std::string_view bytes);
    // Next complete frame, if any. Throws DecodeError on malformed input.
    std::optional<Frame> next();
    std::size_t buffered() const { return buf_.size() - pos_; }

private:
    std::string buf_;
    std::size_t pos_ = 0;
    std::size_t consumed_ = 0;   // bytes discarded before buf_[0], for error offsets
};

} // namespace bdiconc
