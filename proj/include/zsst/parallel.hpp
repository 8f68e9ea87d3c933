#pragma once

#include <atomic>
#include <exception>
#include <mutex>

namespace zsst {

// Exceptions must not escape an OpenMP parallel region. Wrap each loop body
// in run(); the first captured exception is rethrown from rethrow() after
// the region joins.
class ParallelErrorCapture {
 public:
  template <typename Fn>
  void run(Fn&& fn) noexcept {
    if (failed_.load(std::memory_order_relaxed)) return;
    try {
      fn();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!error_) {
        error_ = std::current_exception();
        failed_.store(true, std::memory_order_relaxed);
      }
    }
  }

  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

  bool ok() const { return !failed_.load(std::memory_order_relaxed); }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
  std::atomic<bool> failed_{false};
};

}  // namespace zsst
