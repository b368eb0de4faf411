#include "bdiconc/executor.hpp"

#include <algorithm>
#include <system_error>

namespace bdiconc {

void sample_thread_probe(const WorkerCounter& counter, ProbeRecorder& probe)
{
    const auto before = counter.current();
    const auto observed = os_probe_threads();
    const auto after = counter.current();
    probe.record(observed, std::min(before, after));
}

ThreadPoolExecutor::ThreadPoolExecutor(PoolSpec spec, WorkerCounter* counter, ProbeRecorder* probe)
    : spec_(spec)
    , counter_(counter)
    , probe_(probe)
{
    if (spec_.max_workers == 0) throw std::invalid_argument("pool needs max_workers >= 1");
    if (spec_.min_workers > spec_.max_workers) throw std::invalid_argument("pool needs min_workers <= max_workers");
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < spec_.min_workers; ++i) spawn_locked();
}

ThreadPoolExecutor::~ThreadPoolExecutor()
{
    shutdown();
}

void ThreadPoolExecutor::spawn_locked()
{
    const std::size_t slot = next_slot_++;
    try {
        threads_.emplace(slot, std::thread(&ThreadPoolExecutor::worker_main, this, slot));
    } catch (const std::system_error& e) {
        throw SpawnFailure(std::string("cannot start pool worker: ") + e.what());
    }
    ++live_;
    ++spawned_;
    peak_ = std::max(peak_, live_);
}

void ThreadPoolExecutor::reap_locked()
{
    for (auto slot : finished_) {
        auto it = threads_.find(slot);
        if (it == threads_.end()) continue;
        if (it->second.joinable()) it->second.join();
        threads_.erase(it);
    }
    finished_.clear();
}

void ThreadPoolExecutor::submit(std::function<void()> task)
{
    std::lock_guard lock(mu_);
    if (stopping_) return;
    tasks_.push_back(std::move(task));
    if (tasks_.size() > idle_ && live_ < spec_.max_workers) {
        reap_locked();
        spawn_locked();
    }
    work_cv_.notify_one();
}

void ThreadPoolExecutor::worker_main(std::size_t slot)
{
    if (counter_) {
        const auto counts = counter_->register_worker();
        if (probe_ && counts.current == counts.peak) sample_thread_probe(*counter_, *probe_);
    }

    std::unique_lock lock(mu_);
    live_cv_.notify_all();
    for (;;) {
        bool retire = false;
        while (tasks_.empty() && !stopping_) {
            ++idle_;
            if (live_ > spec_.min_workers) {
                const auto deadline = std::chrono::steady_clock::now() + spec_.keepalive;
                const bool woke = work_cv_.wait_until(lock, deadline, [&] { return !tasks_.empty() || stopping_; });
                if (!woke && live_ > spec_.min_workers) retire = true;
            } else {
                work_cv_.wait(lock);
            }
            --idle_;
            if (retire) break;
        }
        if (retire || stopping_) break;
        auto task = std::move(tasks_.front());
        tasks_.pop_front();
        lock.unlock();
        task();
        lock.lock();
    }
    --live_;
    if (!stopping_) finished_.push_back(slot);
    lock.unlock();
    if (counter_) counter_->unregister_worker();
    live_cv_.notify_all();
}

void ThreadPoolExecutor::shutdown()
{
    std::map<std::size_t, std::thread> threads;
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
        tasks_.clear();
        threads.swap(threads_);
        finished_.clear();
    }
    work_cv_.notify_all();
    for (auto& [slot, t] : threads)
        if (t.joinable()) t.join();
}

std::size_t ThreadPoolExecutor::live_workers() const
{
    std::lock_guard lock(mu_);
    return live_;
}

std::size_t ThreadPoolExecutor::peak_workers() const
{
    std::lock_guard lock(mu_);
    return peak_;
}

std::size_t ThreadPoolExecutor::spawned_total() const
{
    std::lock_guard lock(mu_);
    return spawned_;
}

void ThreadPoolExecutor::wait_for_workers(std::size_t n) const
{
    if (!counter_) return;
    std::unique_lock lock(mu_);
    live_cv_.wait(lock, [&] { return static_cast<std::size_t>(counter_->current()) >= n || stopping_; });
}

} // namespace bdiconc
