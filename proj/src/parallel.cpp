#include "bsvie/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bsvie {

namespace {
std::atomic<std::size_t> g_threads{1};
thread_local bool t_inside = false;  // nested loops run inline

struct InsideGuard {
  bool previous = t_inside;
  InsideGuard() { t_inside = true; }
  ~InsideGuard() { t_inside = previous; }
};
}  // namespace

std::size_t thread_count() { return g_threads.load(); }

void set_thread_count(std::size_t threads) { g_threads.store(std::max<std::size_t>(1, threads)); }

ThreadScope::ThreadScope(std::size_t threads) : previous_(thread_count()) { set_thread_count(threads); }

ThreadScope::~ThreadScope() { set_thread_count(previous_); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = t_inside ? 1 : std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    const InsideGuard guard;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bsvie
