#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "bdiconc/message.hpp"
#include "bdiconc/parser.hpp"

using namespace bdiconc;

namespace {

Message msg(std::string from, std::string to, const char* content, std::uint64_t seq = 0,
            Performative p = Performative::Tell)
{
    return Message{std::move(from), std::move(to), p, parse_term(content), seq};
}

} // namespace

TEST(Mailbox, FifoDrain)
{
    Mailbox box;
    EXPECT_TRUE(box.empty());
    box.post(msg("a", "b", "x(1)", 0));
    box.post(msg("a", "b", "x(2)", 1));
    EXPECT_EQ(box.size(), 2u);
    const auto got = box.drain();
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].seq, 0u);
    EXPECT_EQ(got[1].seq, 1u);
    EXPECT_TRUE(box.empty());
    EXPECT_TRUE(box.drain().empty());
}

TEST(Mailbox, ParkAndWake)
{
    Mailbox box;
    EXPECT_TRUE(box.try_park());
    EXPECT_EQ(box.post(msg("a", "b", "x")), Mailbox::PostResult::WokeReceiver);
    // Awake now; a second post only queues.
    EXPECT_EQ(box.post(msg("a", "b", "y", 1)), Mailbox::PostResult::Queued);
    EXPECT_FALSE(box.try_park());   // mail pending
    box.drain();
    EXPECT_TRUE(box.try_park());
}

TEST(Mailbox, StoppedReceiverIsNeverWoken)
{
    Mailbox box;
    box.mark_stopped();
    EXPECT_TRUE(box.stopped());
    EXPECT_EQ(box.post(msg("a", "b", "x")), Mailbox::PostResult::Queued);
    EXPECT_TRUE(box.try_park());
    EXPECT_EQ(box.size(), 1u);
}

TEST(Mailbox, ConcurrentPostsWakeExactlyOnce)
{
    for (int round = 0; round < 200; ++round) {
        Mailbox box;
        ASSERT_TRUE(box.try_park());
        std::atomic<int> woke{0};
        std::vector<std::thread> ts;
        for (int i = 0; i < 4; ++i)
            ts.emplace_back([&, i] {
                if (box.post(msg("s" + std::to_string(i), "r", "x")) == Mailbox::PostResult::WokeReceiver) ++woke;
            });
        for (auto& t : ts) t.join();
        EXPECT_EQ(woke.load(), 1);
        EXPECT_EQ(box.size(), 4u);
    }
}

TEST(MessageBus, RoutesByName)
{
    MessageBus bus({"a", "b"});
    EXPECT_EQ(bus.size(), 2u);
    EXPECT_EQ(bus.index_of("b"), std::optional<std::size_t>(1));
    EXPECT_EQ(bus.index_of("zz"), std::nullopt);
    const auto posted = bus.post(msg("a", "b", "x"));
    EXPECT_EQ(posted.receiver, 1u);
    EXPECT_EQ(bus.drain("b").size(), 1u);
    EXPECT_THROW(bus.post(msg("a", "zz", "x")), UnknownReceiver);
}

TEST(Wire, FrameBytes)
{
    const std::string frame = encode_wire(msg("a", "b", "x(1)"));
    const std::string expected = std::string("\x00\x00\x00\x0f", 4) + "a|b|tell|0|x(1)";
    EXPECT_EQ(frame, expected);
    EXPECT_EQ(decode_wire(frame), msg("a", "b", "x(1)"));
    EXPECT_EQ(encode_payload(msg("w#1", "sink", "item(3)", 12, Performative::Achieve)), "w#1|sink|achieve|12|item(3)");
}

TEST(Wire, StringContentWithSeparatorRoundTrips)
{
    Message m = msg("a", "b", "x(\"p|q\")");
    EXPECT_EQ(decode_wire(encode_wire(m)), m);
    EXPECT_EQ(encode_payload(m).find("p|q"), std::string::npos);
}

TEST(Wire, RejectsMalformedFrames)
{
    const std::string good = encode_wire(msg("a", "b", "x(1)"));
    EXPECT_THROW(decode_wire(good.substr(0, 3)), DecodeError);
    EXPECT_THROW(decode_wire(good.substr(0, good.size() - 1)), DecodeError);
    EXPECT_THROW(decode_wire(good + "z"), DecodeError);
    for (const char* payload : {"a|b|tell|0", "a|b|ask|0|x", "a|b|tell|01|x", "a|b|tell|-1|x", "a|b|tell|0|x( 1 )",
                                "a|b|tell|0|x(N)", "a|b|tell|0|x(1+1)", "|b|tell|0|x", "a|b|tell|0|x("}) {
        EXPECT_THROW(decode_wire(encode_frame(payload)), DecodeError) << payload;
    }
    EXPECT_THROW(decode_wire(encode_control("stop")), DecodeError);
}

TEST(Wire, ErrorOffsetPointsIntoFrame)
{
    try {
        decode_wire(encode_frame("a|b|ask|0|x"));
        FAIL();
    } catch (const DecodeError& e) {
        EXPECT_EQ(e.offset(), 4u + 4u);
    }
}

TEST(Wire, RandomMessagesRoundTrip)
{
    std::mt19937_64 rng(99);
    const char* names[] = {"a", "ring0", "w#12", "producer#3", "sink"};
    for (int i = 0; i < 3000; ++i) {
        std::string s;
        const int len = static_cast<int>(rng() % 8);
        for (int k = 0; k < len; ++k) s.push_back(static_cast<char>(rng() % 256));
        Term content = Term::structure(
            "m", {Term::integer(static_cast<std::int64_t>(rng())), Term::string(s), Term::atom(rng() % 2 ? "z" : "y_1")});
        Message m{names[rng() % 5], names[rng() % 5], rng() % 2 ? Performative::Tell : Performative::Achieve, content,
                  rng() % 1000000};
        const auto frame = encode_wire(m);
        ASSERT_EQ(decode_wire(frame), m);
    }
}

TEST(FrameReader, SplitsByteStreamAtAnyBoundary)
{
    std::string stream;
    std::vector<Message> sent;
    for (int i = 0; i < 20; ++i) {
        sent.push_back(msg("a", "b", ("x(" + std::to_string(i) + ")").c_str(), static_cast<std::uint64_t>(i)));
        stream += encode_wire(sent.back());
    }
    stream += encode_control("idle", "20");

    for (std::size_t chunk : {1u, 3u, 7u, 64u}) {
        FrameReader reader;
        std::vector<Frame> got;
        for (std::size_t off = 0; off < stream.size(); off += chunk) {
            reader.feed(std::string_view(stream).substr(off, chunk));
            while (auto f = reader.next()) got.push_back(std::move(*f));
        }
        ASSERT_EQ(got.size(), 21u);
        for (int i = 0; i < 20; ++i) EXPECT_EQ(std::get<Message>(got[static_cast<std::size_t>(i)]), sent[static_cast<std::size_t>(i)]);
        const auto& ctl = std::get<ControlFrame>(got.back());
        EXPECT_EQ(ctl.verb, "idle");
        EXPECT_EQ(ctl.body, "20");
        EXPECT_EQ(reader.buffered(), 0u);
    }
}

TEST(FrameReader, RejectsOversizedFrame)
{
    FrameReader reader;
    reader.feed(std::string("\x7f\xff\xff\xff", 4));
    EXPECT_THROW(reader.next(), DecodeError);
}
