#include "pdpc/pdscore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pdpc/error.hpp"
#include "pdpc/extsort.hpp"
#include "pdpc/io.hpp"

namespace pdpc {
namespace {

constexpr std::string_view kPdKind = "pd";
constexpr std::size_t kMaxListedIds = 10;

class VectorCursor {
 public:
  explicit VectorCursor(std::span<const PplRecord> records) : sorted_(records.begin(), records.end()) {
    std::sort(sorted_.begin(), sorted_.end(), [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
  }
  bool next(PplRecord& out) {
    if (pos_ >= sorted_.size()) return false;
    out = sorted_[pos_++];
    return true;
  }

 private:
  std::vector<PplRecord> sorted_;
  std::size_t pos_ = 0;
};

class SortedFileCursor {
 public:
  SortedFileCursor(const std::filesystem::path& path, ScoreFormat format, const JoinOptions& options)
      : sorter_(tab_key_less, options.memory_budget / 2, options.tmp_dir) {
    read_scores(path, format, [&](PplRecord&& r) {
      if (r.doc_id.find('\t') != std::string::npos)
        throw InputError(path.string() + ": doc_id \"" + r.doc_id + "\" contains a tab");
      sorter_.add(r.doc_id + '\t' + format_double(r.ppl));
    });
    reader_.emplace(sorter_.finish());
  }
  bool next(PplRecord& out) {
    std::string line;
    if (!reader_->next(line)) return false;
    const auto tab = line.find('\t');
    out.doc_id = line.substr(0, tab);
    out.ppl = *parse_double(std::string_view(line).substr(tab + 1));
    return true;
  }

 private:
  ExternalSorter sorter_;
  std::optional<ExternalSorter::Reader> reader_;
};

std::string list_ids(const std::vector<std::string>& ids, std::size_t total) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + ids[i];
  if (total > ids.size()) s += ", ... (" + std::to_string(total) + " total)";
  return s;
}

/// Merge-joins two id-sorted cursors, calling sink(weak, strong) per match.
template <class A, class B, class Sink>
void merge_join(A& weak, B& strong, Sink&& sink) {
  std::vector<std::string> only_weak;
  std::vector<std::string> only_strong;
  std::size_t n_only_weak = 0;
  std::size_t n_only_strong = 0;
  PplRecord w;
  PplRecord s;
  std::string prev_w;
  std::string prev_s;
  bool has_w = weak.next(w);
  bool has_s = strong.next(s);
  auto check_dup = [](const PplRecord& r, std::string& prev, bool& first, const char* side) {
    if (!first && r.doc_id == prev)
      throw ValidationError(std::string("duplicate id \"") + r.doc_id + "\" in " + side + " scores");
    prev = r.doc_id;
    first = false;
  };
  bool first_w = true;
  bool first_s = true;
  if (has_w) check_dup(w, prev_w, first_w, "weak");
  if (has_s) check_dup(s, prev_s, first_s, "strong");
  while (has_w || has_s) {
    if (has_w && (!has_s || w.doc_id < s.doc_id)) {
      if (only_weak.size() < kMaxListedIds) only_weak.push_back(w.doc_id);
      ++n_only_weak;
      if ((has_w = weak.next(w))) check_dup(w, prev_w, first_w, "weak");
    } else if (has_s && (!has_w || s.doc_id < w.doc_id)) {
      if (only_strong.size() < kMaxListedIds) only_strong.push_back(s.doc_id);
      ++n_only_strong;
      if ((has_s = strong.next(s))) check_dup(s, prev_s, first_s, "strong");
    } else {
      sink(w, s);
      if ((has_w = weak.next(w))) check_dup(w, prev_w, first_w, "weak");
      if ((has_s = strong.next(s))) check_dup(s, prev_s, first_s, "strong");
    }
  }
  if (n_only_weak || n_only_strong) {
    std::string msg = "weak and strong scores cover different ids;";
    if (n_only_weak) msg += " only in weak: " + list_ids(only_weak, n_only_weak) + ";";
    if (n_only_strong) msg += " only in strong: " + list_ids(only_strong, n_only_strong) + ";";
    throw ValidationError(msg);
  }
}

/// Applies the policy; returns false if the record is dropped.
bool make_record(const PplRecord& w, const PplRecord& s, NegativePolicy policy, PdRecord& out,
                 std::size_t& negatives) {
  out.doc_id = w.doc_id;
  out.ppl_weak = w.ppl;
  out.ppl_strong = s.ppl;
  out.pd = compute_pd(w.ppl, s.ppl);
  out.clamped = false;
  if (out.pd < 0) {
    ++negatives;
    if (policy == NegativePolicy::kDrop) return false;
    out.pd = 0;
    out.clamped = true;
  }
  return true;
}

void write_pd_row(std::ostream& out, const PdRecord& r) {
  out << csv_field(r.doc_id) << ',' << format_double(r.ppl_weak) << ',' << format_double(r.ppl_strong) << ','
      << format_double(r.pd) << ',' << (r.clamped ? "clamped" : "ok") << '\n';
}

}  // namespace

double compute_pd(double ppl_weak, double ppl_strong) {
  if (!(ppl_weak > 0) || !(ppl_strong > 0) || !std::isfinite(ppl_weak) || !std::isfinite(ppl_strong))
    throw ValidationError("perplexities must be positive and finite (weak=" + format_double(ppl_weak) +
                          ", strong=" + format_double(ppl_strong) + ")");
  return 1.0 - ppl_strong / ppl_weak;
}

NegativePolicy negative_policy_from_string(std::string_view s) {
  if (s == "clamp_to_zero" || s == "clamp") return NegativePolicy::kClampToZero;
  if (s == "drop") return NegativePolicy::kDrop;
  throw ValidationError("unknown negative-PD policy \"" + std::string(s) + "\" (clamp_to_zero|drop)");
}

std::string_view to_string(NegativePolicy p) {
  return p == NegativePolicy::kDrop ? "drop" : "clamp_to_zero";
}

double quantile_select(std::vector<double>& values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  auto lo_it = values.begin() + static_cast<std::ptrdiff_t>(lo);
  std::nth_element(values.begin(), lo_it, values.end());
  const double x_lo = *lo_it;
  if (frac == 0 || lo + 1 >= values.size()) return x_lo;
  const double x_hi = *std::min_element(lo_it + 1, values.end());
  return x_lo + frac * (x_hi - x_lo);
}

PdStats compute_stats(std::span<const double> pds, std::size_t input_count, std::size_t negative_count) {
  PdStats s;
  s.count = pds.size();
  s.input_count = input_count;
  s.negative_count = negative_count;
  s.negative_fraction = input_count ? static_cast<double>(negative_count) / static_cast<double>(input_count) : 0.0;
  if (pds.empty()) {
    s.mean = s.stddev = std::numeric_limits<double>::quiet_NaN();
    s.quantiles.fill(std::numeric_limits<double>::quiet_NaN());
    return s;
  }
  const double n = static_cast<double>(pds.size());
  s.mean = std::accumulate(pds.begin(), pds.end(), 0.0) / n;
  double ss = 0;
  for (double v : pds) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);
  std::vector<double> work(pds.begin(), pds.end());
  for (std::size_t i = 0; i < kStatQuantiles.size(); ++i) s.quantiles[i] = quantile_select(work, kStatQuantiles[i]);
  return s;
}

ScoredDataset score_dataset(std::span<const PplRecord> weak, std::span<const PplRecord> strong,
                            NegativePolicy policy) {
  VectorCursor w(weak);
  VectorCursor s(strong);
  ScoredDataset out;
  std::size_t input = 0;
  std::size_t negatives = 0;
  merge_join(w, s, [&](const PplRecord& a, const PplRecord& b) {
    ++input;
    PdRecord r;
    if (make_record(a, b, policy, r, negatives)) out.records.push_back(std::move(r));
  });
  std::vector<double> pds;
  pds.reserve(out.records.size());
  for (const auto& r : out.records) pds.push_back(r.pd);
  out.stats = compute_stats(pds, input, negatives);
  return out;
}

PdStats score_files(const std::filesystem::path& weak_path, ScoreFormat weak_format,
                    const std::filesystem::path& strong_path, ScoreFormat strong_format, NegativePolicy policy,
                    const std::filesystem::path& out_path, std::string_view lineage, const JoinOptions& options) {
  SortedFileCursor w(weak_path, weak_format, options);
  SortedFileCursor s(strong_path, strong_format, options);
  AtomicFile file(out_path);
  auto& out = file.stream();
  out << ArtifactHeader{std::string(kPdKind), 1, std::string(lineage)}.to_line() << '\n';
  out << "doc_id,ppl_weak,ppl_strong,pd,flag\n";
  std::vector<double> pds;
  std::size_t input = 0;
  std::size_t negatives = 0;
  merge_join(w, s, [&](const PplRecord& a, const PplRecord& b) {
    ++input;
    PdRecord r;
    if (make_record(a, b, policy, r, negatives)) {
      write_pd_row(out, r);
      pds.push_back(r.pd);
    }
  });
  file.commit();
  return compute_stats(pds, input, negatives);
}

void save_pd(const std::filesystem::path& path, std::span<const PdRecord> records, std::string_view lineage) {
  AtomicFile file(path);
  auto& out = file.stream();
  out << ArtifactHeader{std::string(kPdKind), 1, std::string(lineage)}.to_line() << '\n';
  out << "doc_id,ppl_weak,ppl_strong,pd,flag\n";
  for (const auto& r : records) write_pd_row(out, r);
  file.commit();
}

std::vector<PdRecord> load_pd(const std::filesystem::path& path, std::string* lineage) {
  LineReader reader(path);
  std::string line;
  auto fail = [&](const std::string& what) {
    throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + what);
  };
  if (!reader.next(line)) fail("empty PD file");
  const auto header = ArtifactHeader::parse(line);
  if (!header || header->kind != kPdKind) fail("expected a pdpc-pd header");
  if (lineage) *lineage = header->lineage;
  if (!reader.next(line) || line != "doc_id,ppl_weak,ppl_strong,pd,flag") fail("expected PD column header");
  std::vector<PdRecord> out;
  while (reader.next(line)) {
    const auto f = split_csv(line);
    if (!f || f->size() != 5) fail("expected 5 fields");
    PdRecord r;
    r.doc_id = (*f)[0];
    const auto w = parse_double((*f)[1]);
    const auto s = parse_double((*f)[2]);
    const auto pd = parse_double((*f)[3]);
    if (!w || !s || !pd) fail("non-numeric field");
    r.ppl_weak = *w;
    r.ppl_strong = *s;
    r.pd = *pd;
    if ((*f)[4] != "ok" && (*f)[4] != "clamped") fail("flag must be ok or clamped");
    r.clamped = (*f)[4] == "clamped";
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------- rank statistics

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 share ranks i+1..j; average is (i+1+j)/2
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("spearman: inputs differ in length");
  if (a.size() < 2) throw ValidationError("spearman: need at least 2 observations");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double mean = 0.5 * static_cast<double>(a.size() + 1);
  double sab = 0;
  double saa = 0;
  double sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) throw ValidationError("spearman: undefined for constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman_pd(std::span<const PdRecord> a, std::span<const PdRecord> b) {
  if (a.size() != b.size()) throw ValidationError("spearman_pd: record sets have different sizes");
  auto by_id = [](std::span<const PdRecord> r) {
    std::vector<const PdRecord*> v;
    v.reserve(r.size());
    for (const auto& x : r) v.push_back(&x);
    std::sort(v.begin(), v.end(), [](auto* x, auto* y) { return x->doc_id < y->doc_id; });
    return v;
  };
  const auto sa = by_id(a);
  const auto sb = by_id(b);
  std::vector<double> xa;
  std::vector<double> xb;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i]->doc_id != sb[i]->doc_id)
      throw ValidationError("spearman_pd: id sets differ (\"" + sa[i]->doc_id + "\" vs \"" + sb[i]->doc_id + "\")");
    xa.push_back(sa[i]->pd);
    xb.push_back(sb[i]->pd);
  }
  return spearman(xa, xb);
}

// ---------------------------------------------------------------- per-domain tables

std::vector<DomainStatsRow> domain_stats(std::span<const PdRecord> records,
                                         const std::unordered_map<std::string, std::string>& domains) {
  std::map<std::string, std::vector<const PdRecord*>> groups;
  for (const auto& r : records) {
    const auto it = domains.find(r.doc_id);
    const std::string& d = (it == domains.end() || it->second.empty()) ? std::string(kUnknownDomain) : it->second;
    groups[d].push_back(&r);
  }
  auto stats_of = [](const std::vector<const PdRecord*>& rs) {
    std::vector<double> pds;
    std::size_t neg = 0;
    for (const auto* r : rs) {
      pds.push_back(r->pd);
      neg += r->clamped ? 1 : 0;
    }
    return compute_stats(pds, rs.size(), neg);
  };
  std::vector<DomainStatsRow> rows;
  std::vector<const PdRecord*> all;
  for (const auto& [d, rs] : groups) {
    rows.push_back({d, stats_of(rs)});
    all.insert(all.end(), rs.begin(), rs.end());
  }
  rows.push_back({std::string(kOverallDomain), stats_of(all)});
  return rows;
}

std::string stats_csv_header() {
  return "domain,count,input_count,mean,stddev,q01,q10,q25,q50,q75,q90,q99,negative_count,negative_fraction";
}

std::string stats_csv_row(std::string_view label, const PdStats& s) {
  std::string row = csv_field(label) + ',' + std::to_string(s.count) + ',' + std::to_string(s.input_count) + ',' +
                    format_double(s.mean) + ',' + format_double(s.stddev);
  for (double q : s.quantiles) row += ',' + format_double(q);
  row += ',' + std::to_string(s.negative_count) + ',' + format_double(s.negative_fraction);
  return row;
}

void save_stats_table(const std::filesystem::path& path, std::span<const DomainStatsRow> rows,
                      std::string_view lineage) {
  AtomicFile file(path);
  auto& out = file.stream();
  out << ArtifactHeader{"stats", 1, std::string(lineage)}.to_line() << '\n';
  out << stats_csv_header() << '\n';
  for (const auto& r : rows) out << stats_csv_row(r.domain, r.stats) << '\n';
  file.commit();
}

std::vector<HistogramBin> pd_histogram(std::span<const PdRecord> records, std::size_t bins) {
  if (bins == 0) throw ValidationError("histogram needs at least one bin");
  std::vector<HistogramBin> out;
  if (records.empty()) return out;
  double lo = records[0].pd;
  double hi = records[0].pd;
  for (const auto& r : records) {
    lo = std::min(lo, r.pd);
    hi = std::max(hi, r.pd);
  }
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  out.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].lo = lo + width * static_cast<double>(i);
    out[i].hi = i + 1 == bins ? std::max(hi, lo + width) : lo + width * static_cast<double>(i + 1);
  }
  for (const auto& r : records) {
    auto b = static_cast<std::size_t>((r.pd - lo) / width);
    ++out[std::min(b, bins - 1)].count;
  }
  return out;
}

}  // namespace pdpc
