#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace testutil {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pdpc-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Text with bigram structure: each domain has its own sparse transition
/// table over a Zipf-ish vocabulary, so higher-order models can fit it.
inline std::string synthetic_jsonl(std::size_t docs, std::uint64_t seed, std::size_t vocab = 400,
                                   std::size_t min_len = 5, std::size_t max_len = 60) {
  std::mt19937_64 gen(seed);
  const char* domains[] = {"news", "code", "wiki", "forum"};
  std::vector<std::vector<std::size_t>> next(vocab * 4);
  for (auto& row : next) {
    for (int j = 0; j < 6; ++j) row.push_back(static_cast<std::size_t>(std::pow(gen() % 10000 / 10000.0, 2.0) * vocab));
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < docs; ++i) {
    const std::size_t d = gen() % 4;
    const std::size_t len = min_len + gen() % (max_len - min_len + 1);
    std::size_t w = gen() % vocab;
    out << "{\"id\":\"doc" << i << "\",\"domain\":\"" << domains[d] << "\",\"text\":\"";
    for (std::size_t t = 0; t < len; ++t) {
      if (t) out << ' ';
      out << 'w' << w;
      w = gen() % 5 ? next[d * vocab + w][gen() % 6] : gen() % vocab;
    }
    out << "\"}\n";
  }
  return out.str();
}

}  // namespace testutil
