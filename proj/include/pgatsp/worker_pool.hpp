#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace pgatsp {

/// Fixed set of threads that execute index-parallel batches. One batch runs at
/// a time; parallel_for blocks until every index has finished.
class WorkerPool {
  public:
    explicit WorkerPool(std::size_t threads = default_size()) {
        threads = std::max<std::size_t>(1, threads);
        threads_.reserve(threads);
        for (std::size_t i = 0; i < threads; ++i) {
            threads_.emplace_back([this] { worker_loop(); });
        }
    }

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    ~WorkerPool() {
        {
            std::lock_guard lock(mu_);
            stop_ = true;
        }
        work_cv_.notify_all();
        // jthreads join on destruction
    }

    static std::size_t default_size() {
        return std::max<unsigned>(1, std::thread::hardware_concurrency());
    }

    [[nodiscard]] std::size_t size() const noexcept { return threads_.size(); }

    /// Runs fn(0) .. fn(n-1) across the pool. The first exception thrown by any
    /// index is rethrown here after the whole batch has drained.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
        if (n == 0) {
            return;
        }
        std::lock_guard submit(submit_mu_);
        std::unique_lock lock(mu_);
        batch_ = &fn;
        next_ = 0;
        count_ = n;
        pending_ = n;
        error_ = nullptr;
        work_cv_.notify_all();
        done_cv_.wait(lock, [this] { return pending_ == 0; });
        batch_ = nullptr;
        if (error_) {
            std::rethrow_exception(std::exchange(error_, nullptr));
        }
    }

  private:
    void worker_loop() {
        std::unique_lock lock(mu_);
        while (true) {
            work_cv_.wait(lock, [this] { return stop_ || (batch_ != nullptr && next_ < count_); });
            if (stop_) {
                return;
            }
            const std::size_t index = next_++;
            const auto* fn = batch_;
            lock.unlock();
            std::exception_ptr failure;
            try {
                (*fn)(index);
            } catch (...) {
                failure = std::current_exception();
            }
            lock.lock();
            if (failure && !error_) {
                error_ = failure;
            }
            if (--pending_ == 0) {
                done_cv_.notify_all();
            }
        }
    }

    std::mutex submit_mu_;
    std::mutex mu_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t)>* batch_ = nullptr;
    std::size_t next_ = 0;
    std::size_t count_ = 0;
    std::size_t pending_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
    std::vector<std::jthread> threads_;
};

} // namespace pgatsp
