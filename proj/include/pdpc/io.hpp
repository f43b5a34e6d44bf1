#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdpc {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict parse of a full field; nullopt on trailing junk or empty input.
/// Accepts "inf"/"nan" spellings so callers can reject them explicitly.
std::optional<double> parse_double(std::string_view s);
std::optional<std::uint64_t> parse_u64(std::string_view s);

/// Splits on a single delimiter character. Empty fields are kept.
std::vector<std::string_view> split(std::string_view s, char delim);

/// Splits on runs of ASCII whitespace. Empty fields are dropped.
std::vector<std::string_view> split_ws(std::string_view s);

/// RFC-4180-style CSV field split (double-quoted fields, "" escapes).
/// Returns nullopt for an unterminated quote.
std::optional<std::vector<std::string>> split_csv(std::string_view line);

/// Quotes a field only when it contains a comma, quote or line break.
std::string csv_field(std::string_view s);

bool is_ascii_space(char c) noexcept;
std::string_view trim(std::string_view s);

/// First line of every artifact this project writes:
///   # pdpc-<kind> v<version> lineage=<16 hex digits>
struct ArtifactHeader {
  std::string kind;
  int version = 1;
  std::string lineage;

  std::string to_line() const;
  static std::optional<ArtifactHeader> parse(std::string_view line);
};

std::string hex64(std::uint64_t v);

/// Buffered writer that lands the file atomically (temp file + rename) on
/// commit(). Dropping an uncommitted writer removes the temp file.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path);
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile();

  std::ostream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// Line reader that tracks 1-based line numbers and reports whether the last
/// line was newline-terminated.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);

  bool next(std::string& line);
  std::size_t line_number() const noexcept { return line_no_; }
  bool last_line_terminated() const noexcept { return terminated_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  bool terminated_ = true;
};

}  // namespace pdpc
