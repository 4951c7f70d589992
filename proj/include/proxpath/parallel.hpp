#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace proxpath {

// Persistent worker pool used by the solver stages.
//
// parallel_for splits [0, n) into one contiguous chunk per worker. Chunk
// boundaries depend only on n and the worker count, and every index writes
// its own output slot, so results never depend on scheduling order.
class ThreadPool {
 public:
  explicit ThreadPool(int workers) : workers_(workers < 1 ? 1 : workers) {
    for (int t = 1; t < workers_; ++t) {
      threads_.emplace_back([this, t] { worker_loop(t); });
    }
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
      ++generation_;
    }
    cv_.notify_all();
    for (auto& th : threads_) th.join();
  }

  int workers() const { return workers_; }

  // fn(begin, end) is called once per non-empty chunk. The calling thread
  // runs chunk 0 and blocks until every chunk has finished.
  void parallel_for(std::size_t n,
                    const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (workers_ == 1 || n < 2) {
      fn(0, n);
      return;
    }
    {
      std::lock_guard<std::mutex> lk(mu_);
      task_ = &fn;
      task_n_ = n;
      pending_ = workers_ - 1;
      ++generation_;
    }
    cv_.notify_all();
    run_chunk(0);
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    task_ = nullptr;
  }

 private:
  void run_chunk(int t) {
    const std::size_t lo = task_n_ * static_cast<std::size_t>(t) /
                           static_cast<std::size_t>(workers_);
    const std::size_t hi = task_n_ * static_cast<std::size_t>(t + 1) /
                           static_cast<std::size_t>(workers_);
    if (lo < hi) (*task_)(lo, hi);
  }

  void worker_loop(int t) {
    std::uint64_t seen = 0;
    for (;;) {
      std::unique_lock<std::mutex> lk(mu_);
      cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
      seen = generation_;
      if (stop_) return;
      const bool have_task = task_ != nullptr;
      lk.unlock();
      if (have_task) run_chunk(t);
      lk.lock();
      if (have_task && --pending_ == 0) done_cv_.notify_one();
    }
  }

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t, std::size_t)>* task_ = nullptr;
  std::size_t task_n_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace proxpath
