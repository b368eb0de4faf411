// The 1A1P child: one agent, one thread, frames over fd 3 / fd 4.

#include "bdiconc/worker.hpp"

#include <poll.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <deque>
#include <iostream>
#include <iterator>
#include <sstream>

#include "bdiconc/agent.hpp"
#include "bdiconc/parser.hpp"

namespace bdiconc {

namespace {

bool write_all(int fd, std::string_view data)
{
    while (!data.empty()) {
        const ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

class Inbound {
public:
    // Reads whatever is available; blocks first when `wait` is set.
    // Returns false on end of stream.
    bool pump(bool wait)
    {
        for (;;) {
            pollfd p{kWorkerInFd, POLLIN, 0};
            const int r = ::poll(&p, 1, wait ? -1 : 0);
            if (r < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            if (r == 0) return true;
            char buf[65536];
            const ssize_t n = ::read(kWorkerInFd, buf, sizeof buf);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            if (n == 0) return false;
            reader_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
            wait = false;
        }
    }

    std::optional<Frame> next() { return reader_.next(); }

private:
    FrameReader reader_;
};

std::vector<std::string> split_roster(std::string_view body)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= body.size() && !body.empty()) {
        const auto comma = body.find(',', start);
        out.emplace_back(body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

int run_worker(const WorkerOptions& opt)
{
    std::string source((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
    std::shared_ptr<const AgentDef> program;
    MasSpec spec;
    try {
        spec = parse_spec(source);
    } catch (const std::exception& e) {
        std::cerr << "worker " << opt.agent << ": " << e.what() << "\n";
        return 2;
    }
    if (spec.agents().size() != 1) {
        std::cerr << "worker " << opt.agent << ": expected exactly one agent definition\n";
        return 2;
    }
    program = spec.share(spec.agents()[0]);

    Inbound in;
    std::shared_ptr<const Roster> roster;
    while (!roster) {
        if (!in.pump(true)) return 1;
        if (auto f = in.next()) {
            const auto* c = std::get_if<ControlFrame>(&*f);
            if (!c || c->verb != "roster") {
                std::cerr << "worker " << opt.agent << ": expected roster frame\n";
                return 1;
            }
            roster = std::make_shared<const Roster>(split_roster(c->body));
        }
    }

    AgentState state = make_agent_state(opt.agent, program, roster);
    const bool keep_fp = opt.trace_level != TraceLevel::Off;
    const bool keep_trace = opt.trace_level == TraceLevel::Full;
    Fnv1a fp;
    std::vector<std::string> trace;
    std::deque<Message> inbox;
    std::uint64_t read_msgs = 0, received = 0, sent = 0;
    std::optional<std::uint64_t> announced;   // read count in the last !idle

    auto report = [&] {
        nlohmann::json j;
        j["cycle_count"] = state.cycle_count;
        j["beliefs"] = nlohmann::json::array();
        for (const auto& b : state.beliefs) j["beliefs"].push_back(b.canonical());
        j["halted"] = state.halted;
        j["fault"] = state.fault ? nlohmann::json(*state.fault) : nlohmann::json(nullptr);
        j["capped"] = !state.halted && opt.max_cycles && state.cycle_count >= *opt.max_cycles;
        j["fingerprint"] = keep_fp ? nlohmann::json(fp.value()) : nlohmann::json(nullptr);
        j["trace"] = trace;
        j["sent"] = sent;
        j["received"] = received;
        j["pending"] = inbox.size();
        return write_all(kWorkerOutFd, encode_control("report", j.dump())) ? 0 : 1;
    };

    for (;;) {
        // Take everything already delivered; a stop request ends the run
        // between cycles.
        try {
            while (auto f = in.next()) {
                if (auto* m = std::get_if<Message>(&*f)) {
                    inbox.push_back(std::move(*m));
                    ++read_msgs;
                } else if (std::get<ControlFrame>(*f).verb == "stop") {
                    return report();
                }
            }
        } catch (const DecodeError& e) {
            std::cerr << "worker " << opt.agent << ": " << e.what() << "\n";
            return 1;
        }

        const bool capped = opt.max_cycles && state.cycle_count >= *opt.max_cycles;
        if (!state.halted && !capped && !is_quiescent(state, inbox.empty())) {
            std::vector<Message> batch(std::make_move_iterator(inbox.begin()), std::make_move_iterator(inbox.end()));
            inbox.clear();
            received += batch.size();
            StepOutcome out = reasoning_cycle(state, std::move(batch));
            if (keep_fp) {
                std::string line;
                for (const auto& ev : out.emitted) {
                    line.clear();
                    ev.append_line(line);
                    fp.update(line);
                    if (keep_trace) trace.push_back(line.substr(0, line.size() - 1));
                }
            }
            std::string frames;
            for (const auto& m : out.outbox) frames += encode_wire(m);
            sent += out.outbox.size();
            if (!frames.empty() && !write_all(kWorkerOutFd, frames)) return 1;
            announced.reset();
            if (!in.pump(false)) return 1;
            continue;
        }

        if (announced != read_msgs) {
            if (!write_all(kWorkerOutFd, encode_control("idle", std::to_string(read_msgs)))) return 1;
            announced = read_msgs;
        }
        if (!in.pump(true)) return 1;
    }
}

} // namespace bdiconc
