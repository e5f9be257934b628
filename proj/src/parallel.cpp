#include "wce/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wce {

namespace {
std::atomic<std::size_t> g_threads{1};
}

void set_thread_count(std::size_t threads) {
  if (threads == 0) threads = std::thread::hardware_concurrency();
  g_threads = std::max<std::size_t>(1, threads);
}

std::size_t thread_count() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(1, n / 64));
  if (workers <= 1) {
    if (n > 0) fn(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace wce
