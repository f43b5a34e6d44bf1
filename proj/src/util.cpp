#include <array>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "pdpc/error.hpp"
#include "pdpc/io.hpp"
#include "pdpc/parallel.hpp"
#include "pdpc/random.hpp"

namespace pdpc {

std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kUsage: return "usage";
    case ErrorCategory::kInput: return "input";
    case ErrorCategory::kValidation: return "validation";
    case ErrorCategory::kMissingArtifact: return "missing-artifact";
    case ErrorCategory::kLineage: return "lineage";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kInternal: return "internal";
  }
  return "internal";
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kUsage: return 2;
    case ErrorCategory::kInput: return 3;
    case ErrorCategory::kValidation: return 4;
    case ErrorCategory::kMissingArtifact: return 5;
    case ErrorCategory::kLineage: return 6;
    case ErrorCategory::kIo: return 7;
    case ErrorCategory::kInternal: return 70;
  }
  return 70;
}

// ---------------------------------------------------------------- random

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ fnv1a64(stream) ^ splitmix64(index + 0x51ed27ULL));
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------- parallel

unsigned default_workers() {
  if (const char* env = std::getenv("PDPC_WORKERS")) {
    if (auto v = parse_u64(env); v && *v > 0) return static_cast<unsigned>(*v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------- io

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_ascii_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_ascii_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::optional<std::vector<std::string>> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) return std::nullopt;
  out.push_back(std::move(field));
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string ArtifactHeader::to_line() const {
  return "# pdpc-" + kind + " v" + std::to_string(version) + " lineage=" + lineage;
}

std::optional<ArtifactHeader> ArtifactHeader::parse(std::string_view line) {
  constexpr std::string_view kPrefix = "# pdpc-";
  if (line.substr(0, kPrefix.size()) != kPrefix) return std::nullopt;
  const auto fields = split_ws(line.substr(kPrefix.size()));
  if (fields.size() != 3 || fields[1].size() < 2 || fields[1][0] != 'v') return std::nullopt;
  constexpr std::string_view kLineage = "lineage=";
  if (fields[2].substr(0, kLineage.size()) != kLineage) return std::nullopt;
  auto version = parse_u64(fields[1].substr(1));
  if (!version) return std::nullopt;
  ArtifactHeader h;
  h.kind = std::string(fields[0]);
  h.version = static_cast<int>(*version);
  h.lineage = std::string(fields[2].substr(kLineage.size()));
  return h;
}

AtomicFile::AtomicFile(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  tmp_ = path_;
  tmp_ += ".tmp";
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + tmp_.string() + " for writing");
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) throw IoError("write failed for " + tmp_.string());
  out_.close();
  std::filesystem::rename(tmp_, path_);
  committed_ = true;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  AtomicFile f(path);
  f.stream().write(contents.data(), static_cast<std::streamsize>(contents.size()));
  f.commit();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LineReader::LineReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open " + path.string());
}

bool LineReader::next(std::string& line) {
  line.clear();
  if (!std::getline(in_, line)) {
    return false;
  }
  ++line_no_;
  terminated_ = !in_.eof();
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace pdpc
