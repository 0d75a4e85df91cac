#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace smc {

/// Static-partition worker pool. Work is split into contiguous index ranges
/// before anything runs, so completion order never influences which task a
/// result belongs to.
class Executor {
 public:
  explicit Executor(std::size_t workers = 1) : workers_(std::max<std::size_t>(workers, 1)) {}

  std::size_t workers() const noexcept { return workers_; }

  /// Calls fn(begin, end) over a partition of [0, count). The first exception
  /// (by range order) is rethrown after every worker has finished.
  template <class Fn>
  void for_each_range(std::size_t count, Fn&& fn) const {
    if (count == 0) return;
    const std::size_t parts = std::min(workers_, count);
    if (parts == 1) {
      fn(std::size_t{0}, count);
      return;
    }
    std::vector<std::exception_ptr> errors(parts);
    {
      std::vector<std::jthread> threads;
      threads.reserve(parts);
      for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t begin = count * p / parts;
        const std::size_t end = count * (p + 1) / parts;
        threads.emplace_back([&, p, begin, end] {
          try {
            fn(begin, end);
          } catch (...) {
            errors[p] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

 private:
  std::size_t workers_;
};

}  // namespace smc
