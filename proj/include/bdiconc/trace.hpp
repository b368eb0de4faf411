#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bdiconc/fnv.hpp"

namespace bdiconc {

enum class TraceKind : std::uint8_t {
    CycleStart,
    CycleIdle,
    BeliefAdd,
    BeliefDel,
    GoalAdopt,
    IntentionDone,
    MsgSend,
    MsgRecv,
    Print,
    Halt,
    Fault,
};

const char* trace_kind_name(TraceKind k);
std::optional<TraceKind> trace_kind_from_string(std::string_view s);

struct TraceEvent {
    std::string agent;
    std::uint64_t agent_cycle = 0;
    TraceKind kind = TraceKind::CycleStart;
    std::string payload;                         // canonical term text or empty
    std::optional<std::uint64_t> global_index;   // single-worker models only

    // `agent|agent_cycle|kind|payload\n`
    std::string line() const;
    void append_line(std::string& out) const;
    nlohmann::json to_json() const;

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

// Inverse of TraceEvent::line(); the trailing newline is optional.
TraceEvent parse_trace_line(std::string_view line);

using Fingerprint = std::uint64_t;

class MixedAgents : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class FingerprintScope { PerAgent, Combined };

// PerAgent: FNV-1a over the events' canonical lines; every event must belong
// to one agent (MixedAgents otherwise).
// Combined: groups events by agent, fingerprints each group, and folds the
// per-agent values in `instance_order` (agents without events contribute the
// empty-trace value). Global interleaving does not affect the result.
Fingerprint fingerprint(std::span<const TraceEvent> events, FingerprintScope scope,
                        std::span<const std::string> instance_order = {});

// Fold per-agent fingerprints (already in instance order) into the combined
// value: FNV-1a over their 8-byte big-endian encodings.
Fingerprint combine_fingerprints(std::span<const Fingerprint> per_agent);

// FNV-1a over the canonical lines in the given (global) order. Only
// meaningful for runs with a single worker.
Fingerprint interleaving_fingerprint(std::span<const TraceEvent> events);

std::string format_fingerprint(Fingerprint fp);

class UnbalancedUnregister : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Registered-worker instrumentation. Lock-free; safe from any thread.
class WorkerCounter {
public:
    struct Counts {
        std::int64_t current;
        std::int64_t peak;
    };

    Counts register_worker();
    Counts unregister_worker();

    std::int64_t current() const { return current_.load(std::memory_order_acquire); }
    std::int64_t peak() const { return peak_.load(std::memory_order_acquire); }
    std::int64_t spawned_total() const { return spawned_.load(std::memory_order_acquire); }

private:
    std::atomic<std::int64_t> current_{0};
    std::atomic<std::int64_t> peak_{0};
    std::atomic<std::int64_t> spawned_{0};
};

// Platform thread count of this process (entries of /proc/self/task).
// nullopt where the platform offers no such facility.
std::optional<std::int64_t> os_probe_threads();
// Live child processes of this process, from the platform process table.
std::optional<std::int64_t> os_probe_child_processes();

// Highest probe value seen during a run, with the registered count at the
// moment of that sample.
class ProbeRecorder {
public:
    void record(std::optional<std::int64_t> observed, std::int64_t registered_now);

    bool supported() const { return supported_.load(); }
    bool sampled() const { return sampled_.load(); }
    std::int64_t peak_observed() const { return peak_observed_.load(); }
    // Smallest (observed - registered) margin over all samples; >= 0 means
    // the probe never saw fewer workers than were registered.
    std::int64_t min_margin() const { return min_margin_.load(); }

private:
    std::atomic<bool> supported_{true};
    std::atomic<bool> sampled_{false};
    std::atomic<std::int64_t> peak_observed_{0};
    std::atomic<std::int64_t> min_margin_{INT64_MAX};
};

struct Metrics {
    double wall_time_ms = 0;
    std::string worker_kind = "thread";   // "thread" or "process"
    std::int64_t peak_workers = 0;
    std::int64_t worker_spawn_total = 0;
    std::optional<std::int64_t> os_probe_peak;   // absent when unsupported or not sampled
    std::optional<std::int64_t> os_probe_margin;
    std::map<std::string, std::uint64_t> per_agent_cycles;
    double fairness_ratio = 1.0;
    std::uint64_t messages_sent = 0;
    std::uint64_t messages_received = 0;
    std::uint64_t messages_pending = 0;
    std::uint64_t exclusivity_violations = 0;

    nlohmann::json to_json() const;
};

// max(cycles) / max(1, min(cycles)) over the given agents; 1.0 when empty.
double fairness_ratio(std::span<const std::uint64_t> cycles);

} // namespace bdiconc
