#include "pdpc/extsort.hpp"

#include <algorithm>
#include <atomic>
#include <unistd.h>

#include "pdpc/error.hpp"

namespace pdpc {
namespace {

std::atomic<std::uint64_t> g_sorter_counter{0};

}  // namespace

bool tab_key_less(std::string_view a, std::string_view b) {
  return a.substr(0, a.find('\t')) < b.substr(0, b.find('\t'));
}

ExternalSorter::ExternalSorter(Less less, std::size_t memory_budget, std::filesystem::path tmp_dir)
    : less_(std::move(less)), budget_(std::max<std::size_t>(memory_budget, 1)) {
  tmp_dir_ = std::move(tmp_dir) / ("pdpc-sort-" + std::to_string(::getpid()) + "-" +
                                   std::to_string(g_sorter_counter.fetch_add(1)));
}

ExternalSorter::~ExternalSorter() {
  if (own_tmp_dir_) {
    std::error_code ec;
    std::filesystem::remove_all(tmp_dir_, ec);
  }
}

void ExternalSorter::add(std::string record) {
  buffered_bytes_ += record.size() + sizeof(std::string);
  buffer_.push_back(std::move(record));
  if (buffered_bytes_ >= budget_) spill();
}

void ExternalSorter::spill() {
  if (buffer_.empty()) return;
  std::stable_sort(buffer_.begin(), buffer_.end(), less_);
  if (!own_tmp_dir_) {
    std::filesystem::create_directories(tmp_dir_);
    own_tmp_dir_ = true;
  }
  auto path = tmp_dir_ / ("run-" + std::to_string(run_paths_.size()) + ".txt");
  std::ofstream out(path, std::ios::binary);
  for (const auto& r : buffer_) out << r << '\n';
  if (!out) throw IoError("cannot write sort run " + path.string());
  run_paths_.push_back(std::move(path));
  buffer_.clear();
  buffered_bytes_ = 0;
}

ExternalSorter::Reader ExternalSorter::finish() {
  std::stable_sort(buffer_.begin(), buffer_.end(), less_);
  Reader reader;
  reader.less_ = less_;
  for (const auto& p : run_paths_) {
    Reader::Source s;
    s.file = std::make_unique<std::ifstream>(p, std::ios::binary);
    if (!*s.file) throw IoError("cannot reopen sort run " + p.string());
    reader.sources_.push_back(std::move(s));
  }
  Reader::Source tail;
  tail.memory = &buffer_;
  reader.sources_.push_back(std::move(tail));
  return reader;
}

bool ExternalSorter::Reader::Source::pull(std::string& out) {
  if (file) return static_cast<bool>(std::getline(*file, out));
  if (pos >= memory->size()) return false;
  out = std::move((*memory)[pos++]);
  return true;
}

void ExternalSorter::Reader::prime() {
  primed_ = true;
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    Head h{{}, i};
    if (sources_[i].pull(h.record)) heap_.push_back(std::move(h));
  }
  std::make_heap(heap_.begin(), heap_.end(), [this](const Head& a, const Head& b) {
    // max-heap comparator: "a after b"
    if (less_(b.record, a.record)) return true;
    if (less_(a.record, b.record)) return false;
    return a.source > b.source;
  });
}

bool ExternalSorter::Reader::next(std::string& record) {
  if (!primed_) prime();
  if (heap_.empty()) return false;
  auto after = [this](const Head& a, const Head& b) {
    if (less_(b.record, a.record)) return true;
    if (less_(a.record, b.record)) return false;
    return a.source > b.source;
  };
  std::pop_heap(heap_.begin(), heap_.end(), after);
  Head& top = heap_.back();
  record = std::move(top.record);
  if (sources_[top.source].pull(top.record)) {
    std::push_heap(heap_.begin(), heap_.end(), after);
  } else {
    heap_.pop_back();
  }
  return true;
}

}  // namespace pdpc
