#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace vcrank {

/// Worker count for OpenMP regions: `requested` if positive, otherwise the
/// runtime's default (all available cores).
int resolve_jobs(int requested);

/// Collects at most one exception per work item inside an OpenMP loop and
/// rethrows the one with the lowest index afterwards.
class ErrorSlots {
 public:
  explicit ErrorSlots(std::size_t n) : slots_(n) {}
  void capture(std::size_t i) noexcept { slots_[i] = std::current_exception(); }
  void rethrow_first() const {
    for (const auto& e : slots_) {
      if (e) std::rethrow_exception(e);
    }
  }

 private:
  std::vector<std::exception_ptr> slots_;
};

}  // namespace vcrank
