#pragma once

#include <cstddef>
#include <functional>

namespace bsvie {

/// Number of worker threads used by parallel_for. Defaults to 1.
std::size_t thread_count();
void set_thread_count(std::size_t threads);

/// Restores the previous thread count on destruction.
class ThreadScope {
 public:
  explicit ThreadScope(std::size_t threads);
  ~ThreadScope();
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  std::size_t previous_;
};

/// Runs body(i) for i in [0, n). Tasks must write disjoint outputs; results
/// are then independent of the worker count. The first exception thrown by
/// any task is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bsvie
