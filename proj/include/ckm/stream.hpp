#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"

namespace ckm {

struct StreamRecord {
  Point point;
  std::optional<std::int64_t> color;
  std::optional<std::int64_t> target;
};

class StreamCursor {
 public:
  virtual ~StreamCursor() = default;
  // Next record, or nullopt at end of stream.
  virtual std::optional<StreamRecord> next() = 0;
};

// Insertion-only stream. Every open() replays the identical sequence and
// counts as one pass.
class StreamSource {
 public:
  virtual ~StreamSource() = default;

  std::unique_ptr<StreamCursor> open() {
    ++passes_used_;
    return do_open();
  }
  std::size_t passes_used() const noexcept { return passes_used_; }

 protected:
  virtual std::unique_ptr<StreamCursor> do_open() = 0;

 private:
  std::size_t passes_used_ = 0;
};

// Stream over a dataset held by the caller (which must outlive the source).
class DatasetStream final : public StreamSource {
 public:
  explicit DatasetStream(const Dataset& data) : data_(&data) {}

 private:
  class Cursor final : public StreamCursor {
   public:
    explicit Cursor(const Dataset& d) : d_(d) {}
    std::optional<StreamRecord> next() override {
      if (pos_ >= d_.size()) return std::nullopt;
      StreamRecord r{d_.points[pos_], std::nullopt, std::nullopt};
      if (d_.colors) r.color = (*d_.colors)[pos_];
      if (d_.targets) r.target = (*d_.targets)[pos_];
      ++pos_;
      return r;
    }

   private:
    const Dataset& d_;
    std::size_t pos_ = 0;
  };

  std::unique_ptr<StreamCursor> do_open() override { return std::make_unique<Cursor>(*data_); }

  const Dataset* data_;
};

template <typename Fn>
std::size_t for_each_record(StreamSource& src, Fn&& fn) {
  auto cursor = src.open();
  std::size_t count = 0;
  while (auto rec = cursor->next()) {
    fn(*rec);
    ++count;
  }
  return count;
}

struct PassSpace {
  std::string label;
  std::size_t peak_points = 0;
  std::size_t words = 0;
};

struct SpaceReport {
  std::size_t passes = 0;
  std::size_t peak_points = 0;
  std::size_t words = 0;
  std::vector<PassSpace> per_pass;
};

// Counts resident point-sized state ("points") and auxiliary scalars
// ("words"). Synchronized so concurrent builders can share one meter.
class SpaceMeter {
 public:
  void begin_pass(std::string label) {
    std::lock_guard<std::mutex> lock(mutex_);
    passes_.push_back({std::move(label), current_points_, 0});
  }

  void acquire(std::size_t points) {
    std::lock_guard<std::mutex> lock(mutex_);
    current_points_ += points;
    peak_points_ = std::max(peak_points_, current_points_);
    if (!passes_.empty()) passes_.back().peak_points = std::max(passes_.back().peak_points, current_points_);
  }

  void release(std::size_t points) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (points > current_points_) throw InvalidArgument("space meter: release exceeds resident points");
    current_points_ -= points;
  }

  void add_words(std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    words_ += n;
    if (!passes_.empty()) passes_.back().words += n;
  }

  std::size_t current_points() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return current_points_;
  }
  std::size_t peak_points() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return peak_points_;
  }

  SpaceReport report(std::size_t passes) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return {passes, peak_points_, words_, passes_};
  }

 private:
  mutable std::mutex mutex_;
  std::size_t current_points_ = 0;
  std::size_t peak_points_ = 0;
  std::size_t words_ = 0;
  std::vector<PassSpace> passes_;
};

// Holds `points` on a meter for the lifetime of the lease. A null meter is
// allowed and makes the lease a no-op.
class MeterLease {
 public:
  MeterLease() = default;
  MeterLease(SpaceMeter* meter, std::size_t points) : meter_(meter), points_(points) {
    if (meter_) meter_->acquire(points_);
  }
  MeterLease(const MeterLease&) = delete;
  MeterLease& operator=(const MeterLease&) = delete;
  MeterLease(MeterLease&& o) noexcept : meter_(std::exchange(o.meter_, nullptr)), points_(o.points_) {}
  MeterLease& operator=(MeterLease&& o) noexcept {
    if (this != &o) {
      reset();
      meter_ = std::exchange(o.meter_, nullptr);
      points_ = o.points_;
    }
    return *this;
  }
  ~MeterLease() { reset(); }

  // Adjusts the held amount up or down.
  void resize(std::size_t points) {
    if (meter_) {
      if (points > points_)
        meter_->acquire(points - points_);
      else
        meter_->release(points_ - points);
    }
    points_ = points;
  }
  std::size_t points() const noexcept { return points_; }

  void reset() {
    if (meter_) meter_->release(points_);
    meter_ = nullptr;
    points_ = 0;
  }

 private:
  SpaceMeter* meter_ = nullptr;
  std::size_t points_ = 0;
};

}  // namespace ckm
