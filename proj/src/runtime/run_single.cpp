// AA1T and AA1EL: every cycle runs on the calling thread, which is the one
// registered worker. Wake-ups arrive synchronously from inside step().

#include <deque>
#include <set>

#include "runtime/driver.hpp"

namespace bdiconc::detail {

namespace {

constexpr std::uint64_t kDeadlineCheckEvery = 256;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct SingleWorker {
    WorkerCounter counter;
    ProbeRecorder probe;

    SingleWorker()
    {
        counter.register_worker();
        sample_thread_probe(counter, probe);
    }

    Metrics metrics() const
    {
        Metrics m;
        m.worker_kind = "thread";
        m.peak_workers = counter.peak();
        m.worker_spawn_total = counter.spawned_total();
        if (probe.supported() && probe.sampled()) {
            m.os_probe_peak = probe.peak_observed();
            m.os_probe_margin = probe.min_margin();
        }
        return m;
    }
};

bool past_deadline(Driver& d, std::uint64_t steps)
{
    if (steps % kDeadlineCheckEvery != 0 || Clock::now() < d.deadline()) return false;
    d.mark_timed_out();
    return true;
}

} // namespace

std::size_t random_pick(std::size_t runnable_count, std::uint64_t step, std::uint64_t seed)
{
    return static_cast<std::size_t>(splitmix64(seed ^ splitmix64(step)) % runnable_count);
}

RunReport run_all_agents_one_thread(Driver& d, const RunConfig& config, const AllAgentsOneThread& model)
{
    SingleWorker worker;
    std::uint64_t steps = 0;

    if (model.policy == SchedulingPolicy::RoundRobin) {
        std::set<std::size_t> runnable(d.initially_runnable().begin(), d.initially_runnable().end());
        d.set_waker([&](std::size_t i) { runnable.insert(i); });
        std::size_t last = d.size();   // first pick is the lowest index
        while (!runnable.empty()) {
            if (past_deadline(d, steps)) break;
            auto it = last == d.size() ? runnable.begin() : runnable.upper_bound(last);
            if (it == runnable.end()) it = runnable.begin();
            const std::size_t i = *it;
            last = i;
            ++steps;
            if (d.try_park(i)) {
                runnable.erase(i);
            } else if (!d.step(i)) {
                d.retire(i);
                runnable.erase(i);
            }
        }
    } else {
        const std::uint64_t seed = model.seed.value_or(config.seed);
        std::vector<std::size_t> runnable = d.initially_runnable();   // sorted
        d.set_waker([&](std::size_t i) { runnable.insert(std::lower_bound(runnable.begin(), runnable.end(), i), i); });
        while (!runnable.empty()) {
            if (past_deadline(d, steps)) break;
            const std::size_t i = runnable[random_pick(runnable.size(), steps, seed)];
            ++steps;
            auto drop = [&] { runnable.erase(std::lower_bound(runnable.begin(), runnable.end(), i)); };
            if (d.try_park(i)) {
                drop();
            } else if (!d.step(i)) {
                d.retire(i);
                drop();
            }
        }
    }

    d.set_waker({});
    worker.counter.unregister_worker();
    return d.finish(worker.metrics());
}

RunReport run_event_loop(Driver& d, const RunConfig&)
{
    SingleWorker worker;
    std::deque<std::size_t> queue(d.initially_runnable().begin(), d.initially_runnable().end());
    d.set_waker([&](std::size_t i) { queue.push_back(i); });

    std::uint64_t steps = 0;
    while (!queue.empty()) {
        if (past_deadline(d, steps)) break;
        const std::size_t i = queue.front();
        queue.pop_front();
        ++steps;
        if (d.try_park(i)) continue;
        if (d.step(i))
            queue.push_back(i);
        else
            d.retire(i);
    }

    d.set_waker({});
    worker.counter.unregister_worker();
    return d.finish(worker.metrics());
}

} // namespace bdiconc::detail
