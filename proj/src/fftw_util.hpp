#pragma once

#include <fftw3.h>

#include <cstddef>
#include <mutex>
#include <utility>

namespace gff2d::detail {

// FFTW's planner is not re-entrant; execution with new-array functions is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  FftwBuffer(FftwBuffer&& o) noexcept : ptr(std::exchange(o.ptr, nullptr)) {}
  template <class T>
  T* as() const { return static_cast<T*>(ptr); }
  void* ptr;
};

class FftwPlan {
 public:
  FftwPlan() = default;
  explicit FftwPlan(fftw_plan p) : plan_(p) {}
  ~FftwPlan() { reset(); }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  FftwPlan(FftwPlan&& o) noexcept : plan_(std::exchange(o.plan_, nullptr)) {}
  FftwPlan& operator=(FftwPlan&& o) noexcept {
    if (this != &o) {
      reset();
      plan_ = std::exchange(o.plan_, nullptr);
    }
    return *this;
  }
  fftw_plan get() const { return plan_; }
  explicit operator bool() const { return plan_ != nullptr; }

 private:
  void reset() {
    if (plan_) {
      std::lock_guard<std::mutex> lk(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
      plan_ = nullptr;
    }
  }
  fftw_plan plan_ = nullptr;
};

}  // namespace gff2d::detail
