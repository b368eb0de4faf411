#include "runtime/driver.hpp"

#include <algorithm>

namespace bdiconc::detail {

Driver::Driver(const MasSpec& spec, const RunConfig& config, bool single_worker)
    : config_(config)
    , single_worker_(single_worker)
    , record_trace_(config.trace_level == TraceLevel::Full)
    , record_fingerprint_(config.trace_level != TraceLevel::Off)
    , deadline_(Clock::now() + std::chrono::milliseconds(config.wall_timeout_ms))
{
    const auto instances = expand_instances(spec);
    auto roster = std::make_shared<Roster>();
    for (const auto& inst : instances) roster->push_back(inst.instance_name);
    std::sort(roster->begin(), roster->end());
    std::shared_ptr<const Roster> shared_roster = std::move(roster);

    std::vector<std::string> names;
    for (const auto& inst : instances) names.push_back(inst.instance_name);
    bus_ = std::make_unique<MessageBus>(names);

    slots_.reserve(instances.size());
    for (const auto& inst : instances) {
        auto slot = std::make_unique<AgentSlot>();
        slot->state = make_agent_state(inst.instance_name, spec.share(*inst.def), shared_roster);
        initial_.push_back(slots_.size());
        slots_.push_back(std::move(slot));
    }
    // Every agent starts scheduled once; models park the ones with nothing to do.
    active_.store(static_cast<std::int64_t>(slots_.size()));
}

bool Driver::capped(const AgentSlot& s) const
{
    return config_.max_cycles_per_agent && s.state.cycle_count >= *config_.max_cycles_per_agent;
}

bool Driver::step(std::size_t i)
{
    AgentSlot& s = *slots_[i];
    if (s.in_cycle.exchange(true, std::memory_order_acq_rel))
        exclusivity_violations_.fetch_add(1, std::memory_order_relaxed);

    auto inbox = bus_->mailbox(i).drain();
    if (config_.on_deliver)
        for (const auto& m : inbox) config_.on_deliver(m);
    s.received += inbox.size();

    StepOutcome out = reasoning_cycle(s.state, std::move(inbox));

    if (record_fingerprint_) {
        std::string line;
        for (auto& ev : out.emitted) {
            line.clear();
            ev.append_line(line);
            s.fingerprint.update(line);
            if (single_worker_) {
                interleaving_.update(line);
                if (record_trace_) {
                    ev.global_index = global_index_++;
                    global_trace_.push_back(std::move(ev));
                }
            } else if (record_trace_) {
                s.trace.push_back(std::move(ev));
            }
        }
    }
    s.sent += out.outbox.size();
    s.in_cycle.store(false, std::memory_order_release);

    for (auto& m : out.outbox) post(std::move(m));

    if (s.state.halted || capped(s)) {
        s.capped = !s.state.halted;
        bus_->mailbox(i).mark_stopped();
        return false;
    }
    return true;
}

void Driver::post(Message m)
{
    // Receivers were checked against the roster inside the cycle.
    const auto posted = bus_->post(std::move(m));
    if (posted.result == Mailbox::PostResult::WokeReceiver) {
        // The poster is active, so the count cannot touch zero in between.
        active_.fetch_add(1, std::memory_order_acq_rel);
        if (waker_) waker_(posted.receiver);
    }
}

bool Driver::try_park(std::size_t i)
{
    AgentSlot& s = *slots_[i];
    if (!s.state.halted && !capped(s) && !is_quiescent(s.state, true)) return false;
    if (!bus_->mailbox(i).try_park()) return false;
    leave_active();
    return true;
}

void Driver::retire(std::size_t i)
{
    bus_->mailbox(i).mark_stopped();
    leave_active();
}

void Driver::leave_active()
{
    if (active_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::lock_guard lock(done_mu_);
        done_cv_.notify_all();
    }
}

bool Driver::wait_done(Clock::time_point deadline)
{
    std::unique_lock lock(done_mu_);
    return done_cv_.wait_until(lock, deadline, [&] { return done() || stop_requested(); }) && done();
}

void Driver::request_stop()
{
    stop_.store(true, std::memory_order_release);
    std::lock_guard lock(done_mu_);
    done_cv_.notify_all();
}

AgentReport make_agent_report(const AgentState& state, std::optional<Fingerprint> fp, bool capped)
{
    AgentReport r;
    r.name = state.instance_name;
    Fnv1a digest;
    for (const auto& b : state.beliefs) {
        r.beliefs.push_back(b.canonical());
        digest.update(r.beliefs.back());
        digest.update("\n");
    }
    r.beliefs_digest = digest.value();
    r.cycle_count = state.cycle_count;
    r.fingerprint = fp;
    r.halted = state.halted;
    r.capped = capped;
    r.fault = state.fault;
    return r;
}

Termination decide_termination(const std::vector<AgentReport>& agents, bool timed_out)
{
    Termination t;
    if (timed_out) {
        t.kind = Termination::Kind::Timeout;
        return t;
    }
    for (const auto& a : agents) {
        if (a.fault) {
            t.kind = Termination::Kind::Fault;
            t.agent = a.name;
            t.reason = *a.fault;
            return t;
        }
    }
    if (std::any_of(agents.begin(), agents.end(), [](const AgentReport& a) { return a.capped; }))
        t.kind = Termination::Kind::MaxCycles;
    return t;
}

double wall_ms_since(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

RunReport Driver::finish(Metrics metrics) const
{
    RunReport report;
    std::vector<Fingerprint> fps;
    std::vector<std::uint64_t> live_cycles;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const AgentSlot& s = *slots_[i];
        std::optional<Fingerprint> fp;
        if (record_fingerprint_) {
            fp = s.fingerprint.value();
            fps.push_back(*fp);
        }
        report.agents.push_back(make_agent_report(s.state, fp, s.capped));
        metrics.per_agent_cycles[s.state.instance_name] = s.state.cycle_count;
        if (!s.state.halted) live_cycles.push_back(s.state.cycle_count);
        metrics.messages_sent += s.sent;
        metrics.messages_received += s.received;
        metrics.messages_pending += bus_->mailbox(i).size();
        if (record_trace_ && !single_worker_) report.trace.insert(report.trace.end(), s.trace.begin(), s.trace.end());
    }
    metrics.fairness_ratio = fairness_ratio(live_cycles);
    metrics.exclusivity_violations = exclusivity_violations_.load();
    if (record_fingerprint_) {
        report.combined_fingerprint = combine_fingerprints(fps);
        if (single_worker_) report.interleaving_fingerprint = interleaving_.value();
    }
    if (record_trace_ && single_worker_) report.trace = global_trace_;
    report.metrics = std::move(metrics);
    report.termination = decide_termination(report.agents, timed_out_);
    return report;
}

} // namespace bdiconc::detail
