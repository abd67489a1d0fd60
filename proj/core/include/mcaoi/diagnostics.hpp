#pragma once

#include <functional>
#include <string_view>

namespace mcaoi {

using WarningSink = std::function<void(std::string_view)>;

// Non-fatal model warnings (stability convention violated, threshold below
// 2M, ...) go through a process-wide sink. The default writes to stderr.
void warn(std::string_view message);

// Installs `sink` and returns the previous one. Passing an empty function
// silences warnings.
WarningSink set_warning_sink(WarningSink sink);

// RAII helper that counts warnings emitted while it is alive.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  int count() const noexcept { return count_; }

 private:
  WarningSink previous_;
  int count_ = 0;
};

}  // namespace mcaoi
