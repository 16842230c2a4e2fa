#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace splatforge {

// Worker pool shared by all kernels. Thread count is fixed at first use:
// min(hardware_concurrency, SPLATFORGE_THREADS) unless set_num_threads() was
// called earlier. With n == 1 every parallel_for runs inline on the caller.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  int num_threads() const { return num_threads_; }

  // Must be called before the first parallel_for to take effect.
  void set_num_threads(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    if (started_) return;
    num_threads_ = n < 1 ? 1 : n;
  }

  // Runs fn(chunk_index) for chunk_index in [0, num_chunks). Blocks until all
  // chunks finish. Chunk-to-work mapping is the caller's; the pool only
  // guarantees every chunk executes exactly once.
  void run_chunks(int num_chunks, const std::function<void(int)>& fn) {
    if (num_chunks <= 0) return;
    if (num_threads_ == 1 || num_chunks == 1) {
      for (int i = 0; i < num_chunks; ++i) fn(i);
      return;
    }
    ensure_started();
    std::unique_lock<std::mutex> lock(mu_);
    job_fn_ = &fn;
    job_chunks_ = num_chunks;
    next_chunk_.store(0, std::memory_order_relaxed);
    pending_.store(num_chunks, std::memory_order_relaxed);
    ++generation_;
    cv_work_.notify_all();
    // The caller participates.
    lock.unlock();
    work_loop(fn, num_chunks);
    lock.lock();
    cv_done_.wait(lock, [&] { return pending_.load(std::memory_order_acquire) == 0; });
    job_fn_ = nullptr;
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
      ++generation_;
    }
    cv_work_.notify_all();
    for (auto& t : workers_) t.join();
  }

 private:
  ThreadPool() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("SPLATFORGE_THREADS")) {
      int cap = std::atoi(env);
      if (cap >= 1 && cap < n) n = cap;
    }
    num_threads_ = n;
  }

  void ensure_started() {
    std::lock_guard<std::mutex> lock(mu_);
    if (started_) return;
    started_ = true;
    for (int i = 0; i < num_threads_ - 1; ++i) {
      workers_.emplace_back([this] { worker_main(); });
    }
  }

  void worker_main() {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int)>* fn = nullptr;
      int chunks = 0;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_work_.wait(lock, [&] { return stop_ || generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        fn = job_fn_;
        chunks = job_chunks_;
      }
      if (fn) work_loop(*fn, chunks);
    }
  }

  void work_loop(const std::function<void(int)>& fn, int chunks) {
    for (;;) {
      int c = next_chunk_.fetch_add(1, std::memory_order_relaxed);
      if (c >= chunks) break;
      fn(c);
      if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::lock_guard<std::mutex> lock(mu_);
        cv_done_.notify_all();
      }
    }
  }

  std::mutex mu_;
  std::condition_variable cv_work_, cv_done_;
  std::vector<std::thread> workers_;
  const std::function<void(int)>* job_fn_ = nullptr;
  int job_chunks_ = 0;
  std::atomic<int> next_chunk_{0};
  std::atomic<int> pending_{0};
  std::uint64_t generation_ = 0;
  bool stop_ = false;
  bool started_ = false;
  int num_threads_ = 1;
};

inline void set_num_threads(int n) { ThreadPool::instance().set_num_threads(n); }
inline int num_threads() { return ThreadPool::instance().num_threads(); }

// Splits [0, n) into fixed-size chunks and runs body(begin, end) on the pool.
// The partition depends only on n and grain, so any per-chunk buffers reduced
// in chunk order give run-to-run identical results for a fixed thread count.
template <class Body>
void parallel_for(std::int64_t n, std::int64_t grain, const Body& body) {
  if (n <= 0) return;
  if (grain < 1) grain = 1;
  const std::int64_t chunks64 = (n + grain - 1) / grain;
  if (chunks64 == 1 || ThreadPool::instance().num_threads() == 1) {
    body(0, n);
    return;
  }
  const int chunks = static_cast<int>(chunks64);
  ThreadPool::instance().run_chunks(chunks, [&](int c) {
    const std::int64_t b = static_cast<std::int64_t>(c) * grain;
    const std::int64_t e = std::min<std::int64_t>(b + grain, n);
    body(b, e);
  });
}

}  // namespace splatforge
