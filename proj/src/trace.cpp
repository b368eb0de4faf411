#include "bdiconc/trace.hpp"

#include <dirent.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <unordered_map>

namespace bdiconc {

namespace {

constexpr std::pair<TraceKind, const char*> kKindNames[] = {
    {TraceKind::CycleStart, "CycleStart"},
    {TraceKind::CycleIdle, "CycleIdle"},
    {TraceKind::BeliefAdd, "BeliefAdd"},
    {TraceKind::BeliefDel, "BeliefDel"},
    {TraceKind::GoalAdopt, "GoalAdopt"},
    {TraceKind::IntentionDone, "IntentionDone"},
    {TraceKind::MsgSend, "MsgSend"},
    {TraceKind::MsgRecv, "MsgRecv"},
    {TraceKind::Print, "Print"},
    {TraceKind::Halt, "Halt"},
    {TraceKind::Fault, "Fault"},
};

} // namespace

const char* trace_kind_name(TraceKind k)
{
    for (const auto& [kind, name] : kKindNames)
        if (kind == k) return name;
    return "?";
}

std::optional<TraceKind> trace_kind_from_string(std::string_view s)
{
    for (const auto& [kind, name] : kKindNames)
        if (s == name) return kind;
    return std::nullopt;
}

void TraceEvent::append_line(std::string& out) const
{
    out += agent;
    out.push_back('|');
    out += std::to_string(agent_cycle);
    out.push_back('|');
    out += trace_kind_name(kind);
    out.push_back('|');
    out += payload;
    out.push_back('\n');
}

std::string TraceEvent::line() const
{
    std::string out;
    append_line(out);
    return out;
}

nlohmann::json TraceEvent::to_json() const
{
    nlohmann::json j = {
        {"agent", agent},
        {"agent_cycle", agent_cycle},
        {"kind", trace_kind_name(kind)},
        {"payload", payload},
    };
    j["global_index"] = global_index ? nlohmann::json(*global_index) : nlohmann::json(nullptr);
    return j;
}

TraceEvent parse_trace_line(std::string_view line)
{
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    auto bad = [&] { return std::invalid_argument("malformed trace line: " + std::string(line)); };
    const auto p1 = line.find('|');
    if (p1 == std::string_view::npos) throw bad();
    const auto p2 = line.find('|', p1 + 1);
    if (p2 == std::string_view::npos) throw bad();
    const auto p3 = line.find('|', p2 + 1);
    if (p3 == std::string_view::npos) throw bad();

    TraceEvent ev;
    ev.agent = std::string(line.substr(0, p1));
    const auto cycle = line.substr(p1 + 1, p2 - p1 - 1);
    auto [ptr, ec] = std::from_chars(cycle.data(), cycle.data() + cycle.size(), ev.agent_cycle);
    if (ec != std::errc{} || ptr != cycle.data() + cycle.size()) throw bad();
    const auto kind = trace_kind_from_string(line.substr(p2 + 1, p3 - p2 - 1));
    if (!kind) throw bad();
    ev.kind = *kind;
    ev.payload = std::string(line.substr(p3 + 1));
    return ev;
}

Fingerprint combine_fingerprints(std::span<const Fingerprint> per_agent)
{
    Fnv1a h;
    for (auto fp : per_agent) h.update_u64_be(fp);
    return h.value();
}

Fingerprint interleaving_fingerprint(std::span<const TraceEvent> events)
{
    Fnv1a h;
    std::string buf;
    for (const auto& e : events) {
        buf.clear();
        e.append_line(buf);
        h.update(buf);
    }
    return h.value();
}

Fingerprint fingerprint(std::span<const TraceEvent> events, FingerprintScope scope,
                        std::span<const std::string> instance_order)
{
    if (scope == FingerprintScope::PerAgent) {
        if (!events.empty()) {
            const auto& first = events.front().agent;
            for (const auto& e : events)
                if (e.agent != first) throw MixedAgents("per-agent fingerprint over events of '" + first + "' and '" + e.agent + "'");
        }
        return interleaving_fingerprint(events);
    }

    std::unordered_map<std::string, Fnv1a> per_agent;
    std::string buf;
    for (const auto& e : events) {
        buf.clear();
        e.append_line(buf);
        per_agent[e.agent].update(buf);
    }
    std::vector<Fingerprint> ordered;
    ordered.reserve(instance_order.size());
    for (const auto& name : instance_order) {
        auto it = per_agent.find(name);
        ordered.push_back(it == per_agent.end() ? kFnvOffsetBasis : it->second.value());
    }
    return combine_fingerprints(ordered);
}

std::string format_fingerprint(Fingerprint fp)
{
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

WorkerCounter::Counts WorkerCounter::register_worker()
{
    spawned_.fetch_add(1, std::memory_order_relaxed);
    const auto now = current_.fetch_add(1, std::memory_order_acq_rel) + 1;
    auto peak = peak_.load(std::memory_order_relaxed);
    while (now > peak && !peak_.compare_exchange_weak(peak, now, std::memory_order_acq_rel)) {
    }
    return {now, std::max(now, peak)};
}

WorkerCounter::Counts WorkerCounter::unregister_worker()
{
    auto cur = current_.load(std::memory_order_relaxed);
    do {
        if (cur <= 0) throw UnbalancedUnregister("unregister_worker without a matching register_worker");
    } while (!current_.compare_exchange_weak(cur, cur - 1, std::memory_order_acq_rel));
    return {cur - 1, peak_.load(std::memory_order_acquire)};
}

std::optional<std::int64_t> os_probe_threads()
{
    DIR* dir = opendir("/proc/self/task");
    if (!dir) return std::nullopt;
    std::int64_t n = 0;
    while (const dirent* ent = readdir(dir)) {
        if (ent->d_name[0] != '.') ++n;
    }
    closedir(dir);
    return n;
}

std::optional<std::int64_t> os_probe_child_processes()
{
    DIR* dir = opendir("/proc");
    if (!dir) return std::nullopt;
    const long self = static_cast<long>(getpid());
    std::int64_t n = 0;
    while (const dirent* ent = readdir(dir)) {
        const char* name = ent->d_name;
        if (name[0] < '0' || name[0] > '9') continue;
        std::ifstream stat(std::string("/proc/") + name + "/stat");
        std::string content;
        if (!std::getline(stat, content)) continue;
        // pid (comm) state ppid ...; comm may contain spaces and parentheses.
        const auto close = content.rfind(')');
        if (close == std::string::npos) continue;
        char state = 0;
        long ppid = -1;
        if (std::sscanf(content.c_str() + close + 1, " %c %ld", &state, &ppid) != 2) continue;
        if (ppid == self && state != 'Z') ++n;
    }
    closedir(dir);
    return n;
}

void ProbeRecorder::record(std::optional<std::int64_t> observed, std::int64_t registered_now)
{
    if (!observed) {
        supported_.store(false);
        return;
    }
    sampled_.store(true);
    auto peak = peak_observed_.load();
    while (*observed > peak && !peak_observed_.compare_exchange_weak(peak, *observed)) {
    }
    const auto margin = *observed - registered_now;
    auto cur = min_margin_.load();
    while (margin < cur && !min_margin_.compare_exchange_weak(cur, margin)) {
    }
}

double fairness_ratio(std::span<const std::uint64_t> cycles)
{
    if (cycles.empty()) return 1.0;
    const auto [lo, hi] = std::minmax_element(cycles.begin(), cycles.end());
    return static_cast<double>(*hi) / static_cast<double>(std::max<std::uint64_t>(1, *lo));
}

nlohmann::json Metrics::to_json() const
{
    nlohmann::json j;
    j["wall_time_ms"] = wall_time_ms;
    j["worker_kind"] = worker_kind;
    j["peak_workers"] = peak_workers;
    j["worker_spawn_total"] = worker_spawn_total;
    j["os_probe_peak"] = os_probe_peak ? nlohmann::json(*os_probe_peak) : nlohmann::json(nullptr);
    j["os_probe_margin"] = os_probe_margin ? nlohmann::json(*os_probe_margin) : nlohmann::json(nullptr);
    j["per_agent_cycles"] = per_agent_cycles;
    j["fairness_ratio"] = fairness_ratio;
    j["messages_sent"] = messages_sent;
    j["messages_received"] = messages_received;
    j["messages_pending"] = messages_pending;
    j["exclusivity_violations"] = exclusivity_violations;
    return j;
}

} // namespace bdiconc
