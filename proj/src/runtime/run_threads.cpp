// 1A1T and AA1E: genuinely parallel workers over the shared driver.

#include <latch>
#include <system_error>
#include <thread>

#include "runtime/driver.hpp"

namespace bdiconc::detail {

namespace {

Metrics worker_metrics(const WorkerCounter& counter, const ProbeRecorder& probe)
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

struct WakeSlot {
    std::mutex mu;
    std::condition_variable cv;
    bool pending = false;
    bool shutdown = false;
};

void finish_or_time_out(Driver& d)
{
    if (!d.wait_done(d.deadline())) {
        d.mark_timed_out();
        d.request_stop();
    }
}

} // namespace

RunReport run_one_agent_one_thread(Driver& d, const RunConfig&)
{
    const std::size_t n = d.size();
    WorkerCounter counter;
    ProbeRecorder probe;

    std::vector<std::unique_ptr<WakeSlot>> wake(n);
    for (auto& w : wake) w = std::make_unique<WakeSlot>();
    for (auto i : d.initially_runnable()) wake[i]->pending = true;
    d.set_waker([&](std::size_t i) {
        {
            std::lock_guard lock(wake[i]->mu);
            wake[i]->pending = true;
        }
        wake[i]->cv.notify_one();
    });

    // Workers hold at the latch until all are registered, so the peak is the
    // full agent count however quickly individual agents finish.
    std::latch registered(static_cast<std::ptrdiff_t>(n));
    auto body = [&](std::size_t i) {
        counter.register_worker();
        registered.arrive_and_wait();
        WakeSlot& w = *wake[i];
        bool stopped = false;
        for (;;) {
            {
                std::unique_lock lock(w.mu);
                w.cv.wait(lock, [&] { return w.pending || w.shutdown; });
                if (w.shutdown) break;
                w.pending = false;
            }
            while (!stopped && !d.stop_requested()) {
                if (d.try_park(i)) break;
                if (!d.step(i)) {
                    d.retire(i);
                    stopped = true;
                }
            }
        }
        counter.unregister_worker();
    };

    std::vector<std::thread> threads;
    threads.reserve(n);
    auto shutdown_all = [&] {
        for (auto& w : wake) {
            {
                std::lock_guard lock(w->mu);
                w->shutdown = true;
            }
            w->cv.notify_one();
        }
        for (auto& t : threads) t.join();
    };

    for (std::size_t i = 0; i < n; ++i) {
        try {
            threads.emplace_back(body, i);
        } catch (const std::system_error& e) {
            registered.count_down(static_cast<std::ptrdiff_t>(n - i));
            d.request_stop();
            shutdown_all();
            d.set_waker({});
            throw SpawnFailure("cannot start agent thread " + std::to_string(i) + ": " + e.what());
        }
    }

    if (n > 0) {
        registered.wait();
        sample_thread_probe(counter, probe);
    }
    finish_or_time_out(d);
    shutdown_all();
    d.set_waker({});
    return d.finish(worker_metrics(counter, probe));
}

RunReport run_shared_executor(Driver& d, const RunConfig&, PoolSpec pool_spec)
{
    WorkerCounter counter;
    ProbeRecorder probe;
    auto pool = std::make_unique<ThreadPoolExecutor>(pool_spec, &counter, &probe);
    if (pool_spec.min_workers > 0) {
        pool->wait_for_workers(pool_spec.min_workers);
        sample_thread_probe(counter, probe);
    }

    // One task is one cycle; an agent is re-submitted only by its own task
    // or by the post that unparks it, so it is never queued twice.
    std::function<void(std::size_t)> schedule;
    auto task = [&](std::size_t i) {
        if (d.stop_requested()) return;
        if (d.try_park(i)) return;
        if (d.step(i))
            schedule(i);
        else
            d.retire(i);
    };
    schedule = [&](std::size_t i) { pool->submit([&task, i] { task(i); }); };
    d.set_waker(schedule);

    // Seeded from inside the pool: a lone worker then sees one queue order
    // on every run instead of racing this thread's submissions.
    pool->submit([&] {
        for (auto i : d.initially_runnable()) schedule(i);
    });
    finish_or_time_out(d);
    pool->shutdown();
    d.set_waker({});
    return d.finish(worker_metrics(counter, probe));
}

} // namespace bdiconc::detail
