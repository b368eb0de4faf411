// 1A1P supervisor: one child process per agent instance, every message
// routed through here.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "bdiconc/worker.hpp"
#include "runtime/driver.hpp"

extern char** environ;

namespace bdiconc::detail {

namespace {

constexpr auto kStopGrace = std::chrono::seconds(5);
constexpr int kMinParentFd = 10;

// Parent-side descriptors stay above the child's fixed slots (0, 3, 4) so
// the dup2 actions in the child cannot clobber each other.
int lift_fd(int fd)
{
    const int lifted = ::fcntl(fd, F_DUPFD_CLOEXEC, kMinParentFd);
    ::close(fd);
    return lifted;
}

struct Pipe {
    int read = -1;
    int write = -1;
};

Pipe make_pipe()
{
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw SpawnFailure(std::string("pipe: ") + std::strerror(errno));
    Pipe p{lift_fd(fds[0]), lift_fd(fds[1])};
    if (p.read < 0 || p.write < 0) throw SpawnFailure(std::string("fcntl: ") + std::strerror(errno));
    return p;
}

void close_fd(int& fd)
{
    if (fd >= 0) ::close(fd);
    fd = -1;
}

void set_nonblocking(int fd)
{
    ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
}

bool write_blocking(int fd, std::string_view data)
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

struct Child {
    std::string name;
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::string outbuf;
    FrameReader reader;
    std::uint64_t routed = 0;
    std::optional<std::uint64_t> idle_at;
    bool open = false;   // from_child not yet at EOF
    bool registered = false;
    std::optional<nlohmann::json> report;
    std::optional<std::string> crash;
};

class Supervisor {
public:
    Supervisor(const MasSpec& spec, const RunConfig& config) : spec_(spec), config_(config) {}

    ~Supervisor()
    {
        for (auto& c : children_) {
            if (c.pid > 0) {
                ::kill(c.pid, SIGKILL);
                ::waitpid(c.pid, nullptr, 0);
            }
            close_fd(c.to_child);
            close_fd(c.from_child);
            if (c.registered) counter_.unregister_worker();
        }
    }

    RunReport run()
    {
        struct sigaction ignore {};
        ignore.sa_handler = SIG_IGN;
        ::sigaction(SIGPIPE, &ignore, nullptr);

        const auto instances = expand_instances(spec_);
        std::vector<std::string> names;
        for (const auto& inst : instances) names.push_back(inst.instance_name);
        std::vector<std::string> sorted = names;
        std::sort(sorted.begin(), sorted.end());
        std::string roster;
        for (const auto& n : sorted) roster += (roster.empty() ? "" : ",") + n;

        children_.resize(instances.size());
        for (std::size_t i = 0; i < instances.size(); ++i) {
            index_.emplace(names[i], i);
            spawn(children_[i], instances[i]);
        }
        if (!children_.empty()) probe_.record(os_probe_child_processes(), counter_.current());
        if (config_.on_children_spawned) {
            std::vector<ChildProcess> pids;
            for (const auto& c : children_) pids.push_back({c.name, c.pid});
            config_.on_children_spawned(pids);
        }

        const std::string roster_frame = encode_control("roster", roster);
        for (auto& c : children_) c.outbuf += roster_frame;

        const auto deadline = Clock::now() + std::chrono::milliseconds(config_.wall_timeout_ms);
        bool stopping = false;
        Clock::time_point kill_at{};
        while (std::any_of(children_.begin(), children_.end(), [](const Child& c) { return c.open; })) {
            if (!stopping && (quiescent() || Clock::now() >= deadline)) {
                timed_out_ = !quiescent();
                stopping = true;
                kill_at = Clock::now() + kStopGrace;
                const std::string stop = encode_control("stop");
                for (auto& c : children_)
                    if (c.open && c.to_child >= 0) c.outbuf += stop;
            }
            if (stopping && Clock::now() >= kill_at) {
                for (auto& c : children_)
                    if (c.open) ::kill(c.pid, SIGKILL);
            }
            pump(stopping);
        }
        return assemble();
    }

private:
    void spawn(Child& c, const AgentInstance& inst)
    {
        c.name = inst.instance_name;
        Pipe in = make_pipe(), down = make_pipe(), up = make_pipe();

        posix_spawn_file_actions_t fa;
        posix_spawn_file_actions_init(&fa);
        posix_spawn_file_actions_adddup2(&fa, in.read, 0);
        posix_spawn_file_actions_adddup2(&fa, down.read, kWorkerInFd);
        posix_spawn_file_actions_adddup2(&fa, up.write, kWorkerOutFd);

        std::vector<std::string> args = {config_.worker_executable, "worker", "--agent", c.name, "--trace-level",
                                         trace_level_name(config_.trace_level)};
        if (config_.max_cycles_per_agent) {
            args.push_back("--max-cycles");
            args.push_back(std::to_string(*config_.max_cycles_per_agent));
        }
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);

        pid_t pid = -1;
        const int rc = ::posix_spawn(&pid, config_.worker_executable.c_str(), &fa, nullptr, argv.data(), environ);
        posix_spawn_file_actions_destroy(&fa);
        close_fd(in.read);
        close_fd(down.read);
        close_fd(up.write);
        if (rc != 0) {
            close_fd(in.write);
            close_fd(down.write);
            close_fd(up.read);
            throw SpawnFailure("cannot start worker for " + c.name + ": " + std::strerror(rc));
        }
        c.pid = pid;
        c.to_child = down.write;
        c.from_child = up.read;
        c.open = true;
        counter_.register_worker();
        c.registered = true;

        write_blocking(in.write, serialize(*inst.def));
        close_fd(in.write);
        set_nonblocking(c.to_child);
        set_nonblocking(c.from_child);
    }

    bool quiescent() const
    {
        for (const auto& c : children_) {
            if (!c.open) continue;
            if (!c.outbuf.empty() || !c.idle_at || *c.idle_at != c.routed) return false;
        }
        return true;
    }

    void pump(bool stopping)
    {
        std::vector<pollfd> fds;
        std::vector<std::size_t> owner;
        for (std::size_t i = 0; i < children_.size(); ++i) {
            auto& c = children_[i];
            if (!c.open) continue;
            short events = POLLIN;
            fds.push_back({c.from_child, events, 0});
            owner.push_back(i);
            if (!c.outbuf.empty() && c.to_child >= 0) {
                fds.push_back({c.to_child, POLLOUT, 0});
                owner.push_back(i);
            }
        }
        if (fds.empty()) return;
        const int r = ::poll(fds.data(), fds.size(), 50);
        if (r <= 0) return;

        for (std::size_t k = 0; k < fds.size(); ++k) {
            if (!fds[k].revents) continue;
            Child& c = children_[owner[k]];
            if (fds[k].fd == c.to_child) {
                flush(c);
            } else if (fds[k].fd == c.from_child) {
                drain(c, stopping);
            }
        }
    }

    void flush(Child& c)
    {
        while (!c.outbuf.empty()) {
            const ssize_t n = ::write(c.to_child, c.outbuf.data(), c.outbuf.size());
            if (n < 0) {
                if (errno == EINTR) continue;
                if (errno != EAGAIN && errno != EWOULDBLOCK) {
                    // Child gone; its EOF on the other pipe settles the rest.
                    c.outbuf.clear();
                    close_fd(c.to_child);
                }
                return;
            }
            c.outbuf.erase(0, static_cast<std::size_t>(n));
        }
    }

    void drain(Child& c, bool stopping)
    {
        char buf[65536];
        bool eof = false;
        for (;;) {
            const ssize_t n = ::read(c.from_child, buf, sizeof buf);
            if (n < 0) {
                if (errno == EINTR) continue;
                eof = errno != EAGAIN && errno != EWOULDBLOCK;
                break;
            }
            if (n == 0) {
                eof = true;
                break;
            }
            c.reader.feed(std::string_view(buf, static_cast<std::size_t>(n)));
        }
        // Frames ahead of EOF (the final report among them) still count.
        try {
            while (auto f = c.reader.next()) {
                if (auto* m = std::get_if<Message>(&*f)) {
                    if (!stopping) route(std::move(*m));
                    continue;
                }
                auto& ctl = std::get<ControlFrame>(*f);
                if (ctl.verb == "idle") {
                    c.idle_at = std::stoull(ctl.body);
                } else if (ctl.verb == "report") {
                    c.report = nlohmann::json::parse(ctl.body);
                }
            }
        } catch (const std::exception& e) {
            c.crash = std::string("ProtocolError(") + e.what() + ")";
            ::kill(c.pid, SIGKILL);
            eof = true;
        }
        if (eof) reap(c);
    }

    void route(Message m)
    {
        const auto it = index_.find(m.receiver);
        if (it == index_.end()) return;
        Child& target = children_[it->second];
        if (!target.open || target.to_child < 0) return;
        target.outbuf += encode_wire(m);
        ++target.routed;
        flush(target);
    }

    void reap(Child& c)
    {
        close_fd(c.from_child);
        close_fd(c.to_child);
        c.outbuf.clear();
        c.open = false;
        int status = 0;
        while (::waitpid(c.pid, &status, 0) < 0 && errno == EINTR) {
        }
        c.pid = -1;
        if (c.registered) {
            counter_.unregister_worker();
            c.registered = false;
        }
        if (c.report || c.crash) return;
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
        c.crash = "ChildCrash(" + std::to_string(code) + ")";
    }

    RunReport assemble() const
    {
        RunReport report;
        Metrics& m = report.metrics;
        m.worker_kind = "process";
        m.peak_workers = counter_.peak();
        m.worker_spawn_total = counter_.spawned_total();
        if (probe_.supported() && probe_.sampled()) {
            m.os_probe_peak = probe_.peak_observed();
            m.os_probe_margin = probe_.min_margin();
        }

        std::vector<Fingerprint> fps;
        bool all_fps = config_.trace_level != TraceLevel::Off;
        std::vector<std::uint64_t> live_cycles;
        for (const auto& c : children_) {
            AgentReport a;
            a.name = c.name;
            if (c.report && !c.crash) {
                const auto& j = *c.report;
                Fnv1a digest;
                for (const auto& b : j.at("beliefs")) {
                    a.beliefs.push_back(b.get<std::string>());
                    digest.update(a.beliefs.back());
                    digest.update("\n");
                }
                a.beliefs_digest = digest.value();
                a.cycle_count = j.at("cycle_count").get<std::uint64_t>();
                a.halted = j.at("halted").get<bool>();
                a.capped = j.at("capped").get<bool>();
                if (!j.at("fault").is_null()) a.fault = j.at("fault").get<std::string>();
                if (!j.at("fingerprint").is_null()) a.fingerprint = j.at("fingerprint").get<std::uint64_t>();
                m.messages_sent += j.at("sent").get<std::uint64_t>();
                m.messages_received += j.at("received").get<std::uint64_t>();
                for (const auto& line : j.at("trace")) report.trace.push_back(parse_trace_line(line.get<std::string>()));
            } else {
                a.fault = c.crash.value_or("ChildCrash(unknown)");
                a.beliefs_digest = kFnvOffsetBasis;
            }
            if (a.fingerprint)
                fps.push_back(*a.fingerprint);
            else
                all_fps = false;
            m.per_agent_cycles[a.name] = a.cycle_count;
            if (!a.halted && !a.fault) live_cycles.push_back(a.cycle_count);
            report.agents.push_back(std::move(a));
        }
        // Anything sent but never consumed is still in flight somewhere on
        // the pipes or in a child's inbox.
        m.messages_pending = m.messages_sent - std::min(m.messages_sent, m.messages_received);
        m.fairness_ratio = fairness_ratio(live_cycles);
        if (all_fps) report.combined_fingerprint = combine_fingerprints(fps);
        report.termination = decide_termination(report.agents, timed_out_);
        return report;
    }

    const MasSpec& spec_;
    const RunConfig& config_;
    std::vector<Child> children_;
    std::unordered_map<std::string, std::size_t> index_;
    WorkerCounter counter_;
    ProbeRecorder probe_;
    bool timed_out_ = false;
};

} // namespace

RunReport run_one_agent_one_process(const MasSpec& spec, const RunConfig& config)
{
    Supervisor sup(spec, config);
    return sup.run();
}

} // namespace bdiconc::detail
