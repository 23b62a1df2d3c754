#pragma once

#include <string>
#include <vector>

namespace hppc::csv {

/// Fixed 9-significant-digit decimal formatting; every CSV the toolkit emits
/// goes through this so identical numbers always serialize identically.
std::string fmt(double v);

/// Full-precision round-trippable formatting (17 significant digits), used
/// where a file must reload to bit-identical doubles.
std::string fmt_exact(double v);

/// Accumulates a CSV in memory; nothing touches the filesystem until
/// write_file, so a failed run leaves no partial file behind.
class Table {
 public:
  explicit Table(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  /// Numeric convenience: formats all cells with fmt().
  void add_row(const std::vector<double>& cells);

  std::size_t rows() const { return rows_; }
  const std::string& content() const { return body_; }

  /// Writes atomically-ish: opens the target only once the content exists.
  /// Throws std::runtime_error when the path cannot be opened.
  void write_file(const std::string& path) const;

 private:
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::string body_;
};

struct Parsed {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV with a header line. Throws std::runtime_error on I/O
/// failure or non-numeric cells.
Parsed read_file(const std::string& path);

/// Writes an arbitrary string to a file with the same no-partial-file rule.
void write_text(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

}  // namespace hppc::csv
