#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace seesmp {

// Process-wide sink for soft numerical warnings (rank-deficient regressions,
// dropped order-fit pairs). The CLI swaps in a collector so that --strict can
// promote them to failures.
class WarningSink {
 public:
  using Handler = std::function<void(const std::string&)>;

  static WarningSink& instance() {
    static WarningSink sink;
    return sink;
  }

  void warn(const std::string& message) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++count_;
    if (handler_) {
      handler_(message);
    } else if (echo_) {
      std::cerr << "warning: " << message << '\n';
    }
  }

  void set_handler(Handler handler) {
    std::lock_guard<std::mutex> lock(mutex_);
    handler_ = std::move(handler);
  }

  void set_echo(bool echo) {
    std::lock_guard<std::mutex> lock(mutex_);
    echo_ = echo;
  }

  std::size_t count() const { return count_; }

 private:
  WarningSink() = default;

  std::mutex mutex_;
  Handler handler_;
  bool echo_ = false;
  std::size_t count_ = 0;
};

inline void warn(const std::string& message) { WarningSink::instance().warn(message); }

/// Collects warnings emitted while alive, then restores the previous handler.
class ScopedWarningCollector {
 public:
  ScopedWarningCollector() {
    WarningSink::instance().set_handler([this](const std::string& m) { messages_.push_back(m); });
  }
  ~ScopedWarningCollector() { WarningSink::instance().set_handler(nullptr); }

  ScopedWarningCollector(const ScopedWarningCollector&) = delete;
  ScopedWarningCollector& operator=(const ScopedWarningCollector&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

}  // namespace seesmp
