#include "bdiconc/message.hpp"

#include <charconv>

#include "bdiconc/parser.hpp"

namespace bdiconc {

Mailbox::PostResult Mailbox::post(Message m)
{
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(m));
    if (parked_ && !stopped_) {
        parked_ = false;
        return PostResult::WokeReceiver;
    }
    return PostResult::Queued;
}

std::vector<Message> Mailbox::drain()
{
    std::lock_guard lock(mu_);
    std::vector<Message> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
}

bool Mailbox::empty() const
{
    std::lock_guard lock(mu_);
    return queue_.empty();
}

std::size_t Mailbox::size() const
{
    std::lock_guard lock(mu_);
    return queue_.size();
}

bool Mailbox::try_park()
{
    std::lock_guard lock(mu_);
    if (!stopped_ && !queue_.empty()) return false;
    parked_ = true;
    return true;
}

void Mailbox::mark_stopped()
{
    std::lock_guard lock(mu_);
    stopped_ = true;
}

bool Mailbox::stopped() const
{
    std::lock_guard lock(mu_);
    return stopped_;
}

void Mailbox::unpark()
{
    std::lock_guard lock(mu_);
    parked_ = false;
}

MessageBus::MessageBus(const std::vector<std::string>& roster)
{
    boxes_.reserve(roster.size());
    for (const auto& name : roster) {
        index_.emplace(name, boxes_.size());
        boxes_.push_back(std::make_unique<Mailbox>());
    }
}

std::optional<std::size_t> MessageBus::index_of(std::string_view name) const
{
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

MessageBus::Posted MessageBus::post(Message m)
{
    const auto i = index_of(m.receiver);
    if (!i) throw UnknownReceiver(m.receiver);
    return {*i, boxes_[*i]->post(std::move(m))};
}

std::vector<Message> MessageBus::drain(std::string_view receiver)
{
    const auto i = index_of(receiver);
    if (!i) throw UnknownReceiver(std::string(receiver));
    return boxes_[*i]->drain();
}

// --- wire ----------------------------------------------------------------

DecodeError::DecodeError(std::size_t offset, const std::string& reason)
    : std::runtime_error("decode error at byte " + std::to_string(offset) + ": " + reason)
    , offset_(offset)
{
}

namespace {

bool valid_instance_name(std::string_view s)
{
    const auto hash = s.find('#');
    if (hash == std::string_view::npos) return is_identifier(s);
    const auto idx = s.substr(hash + 1);
    if (idx.empty() || (idx.size() > 1 && idx[0] == '0')) return false;
    for (char c : idx)
        if (c < '0' || c > '9') return false;
    return is_identifier(s.substr(0, hash));
}

void put_u32_be(std::string& out, std::uint32_t v)
{
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

std::uint32_t get_u32_be(std::string_view b)
{
    return (std::uint32_t(static_cast<unsigned char>(b[0])) << 24) | (std::uint32_t(static_cast<unsigned char>(b[1])) << 16)
        | (std::uint32_t(static_cast<unsigned char>(b[2])) << 8) | std::uint32_t(static_cast<unsigned char>(b[3]));
}

} // namespace

std::string encode_payload(const Message& m)
{
    std::string out;
    out += m.sender;
    out.push_back('|');
    out += m.receiver;
    out.push_back('|');
    out += performative_name(m.performative);
    out.push_back('|');
    out += std::to_string(m.seq);
    out.push_back('|');
    m.content.write_canonical(out);
    return out;
}

std::string encode_frame(std::string_view payload)
{
    std::string out;
    out.reserve(4 + payload.size());
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    out += payload;
    return out;
}

std::string encode_wire(const Message& m)
{
    return encode_frame(encode_payload(m));
}

std::string encode_control(std::string_view verb, std::string_view body)
{
    std::string payload = "!";
    payload += verb;
    payload.push_back('|');
    payload += body;
    return encode_frame(payload);
}

Message decode_payload(std::string_view payload, std::size_t base)
{
    std::size_t fields[4];
    std::size_t from = 0;
    for (auto& f : fields) {
        f = payload.find('|', from);
        if (f == std::string_view::npos) throw DecodeError(base + payload.size(), "missing '|' separator");
        from = f + 1;
    }
    Message m;
    const auto sender = payload.substr(0, fields[0]);
    const auto receiver = payload.substr(fields[0] + 1, fields[1] - fields[0] - 1);
    const auto perf = payload.substr(fields[1] + 1, fields[2] - fields[1] - 1);
    const auto seq = payload.substr(fields[2] + 1, fields[3] - fields[2] - 1);
    const auto term = payload.substr(fields[3] + 1);

    if (!valid_instance_name(sender)) throw DecodeError(base, "invalid sender");
    if (!valid_instance_name(receiver)) throw DecodeError(base + fields[0] + 1, "invalid receiver");
    const auto p = performative_from_string(perf);
    if (!p) throw DecodeError(base + fields[1] + 1, "invalid performative");
    std::uint64_t seq_value = 0;
    auto [ptr, ec] = std::from_chars(seq.data(), seq.data() + seq.size(), seq_value);
    if (seq.empty() || ec != std::errc{} || ptr != seq.data() + seq.size() || (seq.size() > 1 && seq[0] == '0'))
        throw DecodeError(base + fields[2] + 1, "invalid seq");

    m.sender = std::string(sender);
    m.receiver = std::string(receiver);
    m.performative = *p;
    m.seq = seq_value;
    try {
        m.content = parse_term(term);
    } catch (const ParseError& e) {
        throw DecodeError(base + fields[3] + 1 + e.column() - 1, std::string("bad term: ") + e.what());
    }
    if (!m.content.is_resolved()) throw DecodeError(base + fields[3] + 1, "content is not a resolved term");
    if (m.content.canonical() != term) throw DecodeError(base + fields[3] + 1, "term is not in canonical form");
    return m;
}

Message decode_wire(std::string_view frame)
{
    if (frame.size() < 4) throw DecodeError(frame.size(), "truncated length prefix");
    const std::uint32_t len = get_u32_be(frame);
    if (frame.size() - 4 < len) throw DecodeError(frame.size(), "truncated payload");
    if (frame.size() - 4 > len) throw DecodeError(4 + len, "trailing bytes after frame");
    const auto payload = frame.substr(4);
    if (!payload.empty() && payload[0] == '!') throw DecodeError(4, "control frame where a message was expected");
    return decode_payload(payload, 4);
}

void FrameReader::feed(std::string_view bytes)
{
    if (pos_ > 0 && pos_ == buf_.size()) {
        consumed_ += pos_;
        buf_.clear();
        pos_ = 0;
    } else if (pos_ > (1u << 20)) {
        consumed_ += pos_;
        buf_.erase(0, pos_);
        pos_ = 0;
    }
    buf_.append(bytes);
}

std::optional<Frame> FrameReader::next()
{
    if (buf_.size() - pos_ < 4) return std::nullopt;
    const std::uint32_t len = get_u32_be(std::string_view(buf_).substr(pos_, 4));
    if (len > kMaxFrame) throw DecodeError(consumed_ + pos_, "frame length exceeds limit");
    if (buf_.size() - pos_ - 4 < len) return std::nullopt;
    const std::size_t start = pos_ + 4;
    const std::string_view payload(buf_.data() + start, len);
    pos_ = start + len;
    if (!payload.empty() && payload[0] == '!') {
        const auto bar = payload.find('|');
        if (bar == std::string_view::npos) throw DecodeError(consumed_ + start, "control frame without '|'");
        return Frame{ControlFrame{std::string(payload.substr(1, bar - 1)), std::string(payload.substr(bar + 1))}};
    }
    return Frame{decode_payload(payload, consumed_ + start)};
}

} // namespace bdiconc
