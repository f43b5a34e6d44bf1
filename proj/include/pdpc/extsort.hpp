#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

namespace pdpc {

/// Sorts newline-free text records that may not fit in memory. Records are
/// buffered until `memory_budget` bytes, stable-sorted and spilled to a run
/// file; finish() k-way merges the runs. Equal keys keep insertion order.
class ExternalSorter {
 public:
  using Less = std::function<bool(std::string_view, std::string_view)>;

  ExternalSorter(Less less, std::size_t memory_budget, std::filesystem::path tmp_dir);
  ExternalSorter(const ExternalSorter&) = delete;
  ExternalSorter& operator=(const ExternalSorter&) = delete;
  ~ExternalSorter();

  void add(std::string record);
  std::size_t runs_spilled() const noexcept { return run_paths_.size(); }

  /// Pull-style reader over the merged, sorted stream.
  class Reader {
   public:
    bool next(std::string& record);

   private:
    friend class ExternalSorter;
    struct Source {
      std::unique_ptr<std::ifstream> file;  // null for the in-memory tail run
      std::vector<std::string>* memory = nullptr;
      std::size_t pos = 0;
      bool pull(std::string& out);
    };
    struct Head {
      std::string record;
      std::size_t source;
    };
    Less less_;
    std::vector<Source> sources_;
    std::vector<Head> heap_;
    bool primed_ = false;
    void prime();
  };

  /// Ends input. The sorter must outlive the returned reader.
  Reader finish();

 private:
  void spill();

  Less less_;
  std::size_t budget_;
  std::filesystem::path tmp_dir_;
  std::vector<std::string> buffer_;
  std::size_t buffered_bytes_ = 0;
  std::vector<std::filesystem::path> run_paths_;
  bool own_tmp_dir_ = false;
};

/// Orders "key<TAB>..." records by key (byte-wise).
bool tab_key_less(std::string_view a, std::string_view b);

}  // namespace pdpc
