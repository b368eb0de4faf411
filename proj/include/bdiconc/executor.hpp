#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bdiconc/trace.hpp"

namespace bdiconc {

class SpawnFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PoolSpec {
    std::size_t min_workers = 1;
    std::size_t max_workers = 1;
    std::chrono::milliseconds keepalive{50};
};

// FIFO task queue served by a pool of threads.
//
// With min == max the pool is fixed: all workers start in the constructor
// and stay for the pool's lifetime. Otherwise it is elastic: a worker is
// added when a task is queued and no idle worker can take it (up to max),
// and a worker idle for longer than `keepalive` retires while more than
// min are alive.
class ThreadPoolExecutor {
public:
    explicit ThreadPoolExecutor(PoolSpec spec, WorkerCounter* counter = nullptr, ProbeRecorder* probe = nullptr);
    ~ThreadPoolExecutor();

    ThreadPoolExecutor(const ThreadPoolExecutor&) = delete;
    ThreadPoolExecutor& operator=(const ThreadPoolExecutor&) = delete;

    void submit(std::function<void()> task);

    // Stops all workers. Queued tasks that have not started are discarded.
    void shutdown();

    std::size_t live_workers() const;
    std::size_t peak_workers() const;
    std::size_t spawned_total() const;

    // Blocks until at least n workers are alive (fixed pools reach this
    // right after construction).
    void wait_for_workers(std::size_t n) const;

private:
    void spawn_locked();
    void worker_main(std::size_t slot);
    void reap_locked();

    PoolSpec spec_;
    WorkerCounter* counter_;
    ProbeRecorder* probe_;

    mutable std::mutex mu_;
    std::condition_variable work_cv_;
    mutable std::condition_variable live_cv_;
    std::deque<std::function<void()>> tasks_;
    std::map<std::size_t, std::thread> threads_;
    std::vector<std::size_t> finished_;
    std::size_t next_slot_ = 0;
    std::size_t live_ = 0;
    std::size_t idle_ = 0;
    std::size_t peak_ = 0;
    std::size_t spawned_ = 0;
    bool stopping_ = false;
};

// Sample the thread probe against the registered count, bracketing the probe
// with two reads of the counter so a worker exiting mid-sample is not
// mistaken for a missing thread.
void sample_thread_probe(const WorkerCounter& counter, ProbeRecorder& probe);

} // namespace bdiconc
