#pragma once

// Shared machinery behind the in-process models: agent slots, message
// routing, the park/wake protocol and report assembly. A model decides only
// which worker runs which slot's next cycle.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "bdiconc/agent.hpp"
#include "bdiconc/fnv.hpp"
#include "bdiconc/message.hpp"
#include "bdiconc/model.hpp"
#include "bdiconc/trace.hpp"

namespace bdiconc::detail {

using Clock = std::chrono::steady_clock;

struct AgentSlot {
    AgentState state;
    std::atomic<bool> in_cycle{false};
    Fnv1a fingerprint;
    std::vector<TraceEvent> trace;   // Full trace under parallel models
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
    bool capped = false;
};

class Driver {
public:
    Driver(const MasSpec& spec, const RunConfig& config, bool single_worker);

    std::size_t size() const { return slots_.size(); }
    const std::string& name(std::size_t i) const { return slots_[i]->state.instance_name; }

    // Invoked with the receiver's index whenever a post turns a parked
    // receiver runnable. Set before the first step.
    void set_waker(std::function<void(std::size_t)> waker) { waker_ = std::move(waker); }

    // Every agent in instance order; each is scheduled once at start and
    // parks on its first turn if it has nothing to do.
    const std::vector<std::size_t>& initially_runnable() const { return initial_; }

    // One reasoning cycle of agent i. Returns true when the agent may still
    // have work and should be scheduled again; false when it has stopped
    // for good (halted, faulted or capped).
    bool step(std::size_t i);

    // Park agent i if it has nothing to do. Returns true when parked; the
    // caller must then leave the agent alone until the waker names it.
    bool try_park(std::size_t i);

    // Stopped agents leave the active set through here.
    void retire(std::size_t i);

    bool done() const { return active_.load(std::memory_order_acquire) == 0; }
    // Wait for global quiescence. false on deadline.
    bool wait_done(Clock::time_point deadline);

    void request_stop();
    bool stop_requested() const { return stop_.load(std::memory_order_acquire); }
    void mark_timed_out() { timed_out_ = true; }

    Clock::time_point deadline() const { return deadline_; }

    RunReport finish(Metrics metrics) const;

private:
    void post(Message m);
    void leave_active();
    bool capped(const AgentSlot& s) const;

    const RunConfig& config_;
    bool single_worker_;
    bool record_trace_;
    bool record_fingerprint_;
    Clock::time_point deadline_;

    std::vector<std::unique_ptr<AgentSlot>> slots_;
    std::unique_ptr<MessageBus> bus_;
    std::vector<std::size_t> initial_;
    std::function<void(std::size_t)> waker_;

    std::atomic<std::int64_t> active_{0};
    std::atomic<bool> stop_{false};
    std::atomic<std::uint64_t> exclusivity_violations_{0};
    bool timed_out_ = false;

    mutable std::mutex done_mu_;
    std::condition_variable done_cv_;

    // Single-worker models only.
    Fnv1a interleaving_;
    std::vector<TraceEvent> global_trace_;
    std::uint64_t global_index_ = 0;
};

// Per-model entry points; each fills the worker metrics.
RunReport run_one_agent_one_thread(Driver& driver, const RunConfig& config);
RunReport run_all_agents_one_thread(Driver& driver, const RunConfig& config, const AllAgentsOneThread& model);
RunReport run_event_loop(Driver& driver, const RunConfig& config);
RunReport run_shared_executor(Driver& driver, const RunConfig& config, PoolSpec pool);
RunReport run_one_agent_one_process(const MasSpec& spec, const RunConfig& config);

// Pure policy hook: (runnable set, step counter, seed) -> position in the set.
std::size_t random_pick(std::size_t runnable_count, std::uint64_t step, std::uint64_t seed);

// Report pieces shared with the process supervisor.
AgentReport make_agent_report(const AgentState& state, std::optional<Fingerprint> fp, bool capped);
Termination decide_termination(const std::vector<AgentReport>& agents, bool timed_out);
double wall_ms_since(Clock::time_point start);

} // namespace bdiconc::detail
