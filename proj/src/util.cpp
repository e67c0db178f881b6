#include "adbench/util.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace adbench {

namespace {
std::atomic<int> g_threads{1};
std::atomic<int> g_log_level{static_cast<int>(LogLevel::warning)};
std::mutex g_log_mutex;
}  // namespace

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() noexcept { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(g_threads.load()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void set_log_level(LogLevel level) { g_log_level = static_cast<int>(level); }

void log_warning(std::string_view message) {
  if (g_log_level.load() < static_cast<int>(LogLevel::warning)) return;
  std::lock_guard lock(g_log_mutex);
  std::clog << "warning: " << message << '\n';
}

void log_info(std::string_view message) {
  if (g_log_level.load() < static_cast<int>(LogLevel::info)) return;
  std::lock_guard lock(g_log_mutex);
  std::clog << message << '\n';
}

}  // namespace adbench
