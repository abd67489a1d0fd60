#include "mcaoi/diagnostics.hpp"

#include <iostream>
#include <mutex>

namespace mcaoi {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return s;
}

}  // namespace

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  auto previous = std::move(sink());
  sink() = std::move(s);
  return previous;
}

WarningCapture::WarningCapture()
    : previous_(set_warning_sink([this](std::string_view) { ++count_; })) {}

WarningCapture::~WarningCapture() { set_warning_sink(std::move(previous_)); }

}  // namespace mcaoi
