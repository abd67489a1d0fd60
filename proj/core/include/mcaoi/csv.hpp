#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace mcaoi {

// Header-first CSV table: UTF-8, comma separated, '.' decimal point. Doubles
// are printed with %.12g so output is identical for identical inputs.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  template <class... Ts>
  void add(const Ts&... values) {
    std::vector<std::string> row;
    row.reserve(sizeof...(Ts));
    (row.push_back(format(values)), ...);
    push(std::move(row));
  }

  void push(std::vector<std::string> row);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_.at(i); }

  std::string str() const;
  void write(const std::filesystem::path& path) const;

  static std::string format(double v);
  static std::string format(std::string_view v) { return std::string(v); }
  static std::string format(const std::string& v) { return v; }
  static std::string format(const char* v) { return v; }
  static std::string format(bool v) { return v ? "1" : "0"; }
  template <class I>
    requires(std::is_integral_v<I> && !std::is_same_v<I, bool>)
  static std::string format(I v) {
    return std::to_string(v);
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace mcaoi
