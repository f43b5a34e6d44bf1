#include "pdpc/partition.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "pdpc/error.hpp"
#include "pdpc/io.hpp"

namespace pdpc {
namespace {

using json = nlohmann::json;
constexpr std::string_view kPartitionKind = "partition";

}  // namespace

void PartitionSpec::validate() const {
  if (n < 1) throw ValidationError("partition count n must be >= 1");
  if (split_quantiles.empty()) return;
  if (split_quantiles.size() + 1 != n)
    throw ValidationError("expected " + std::to_string(n - 1) + " split quantiles for n=" + std::to_string(n) +
                          ", got " + std::to_string(split_quantiles.size()));
  double prev = -1;
  for (double q : split_quantiles) {
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("split quantiles must lie in [0, 1]");
    if (!(q > prev)) throw ValidationError("split quantiles must be strictly increasing");
    prev = q;
  }
}

std::vector<std::size_t> PartitionSpec::boundaries(std::size_t total) const {
  validate();
  std::vector<std::size_t> b;
  b.reserve(n + 1);
  b.push_back(0);
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t cut;
    if (split_quantiles.empty()) {
      cut = i * total / n;
    } else {
      cut = static_cast<std::size_t>(std::floor(split_quantiles[i - 1] * static_cast<double>(total)));
    }
    b.push_back(std::clamp(cut, b.back(), total));
  }
  b.push_back(total);
  return b;
}

std::vector<std::size_t> PartitionedDataset::sizes() const {
  std::vector<std::size_t> s;
  for (const auto& p : parts) s.push_back(p.size());
  return s;
}

std::size_t PartitionedDataset::total() const {
  std::size_t t = 0;
  for (const auto& p : parts) t += p.size();
  return t;
}

std::vector<std::string> PartitionedDataset::sorted_ids() const {
  std::vector<std::string> ids;
  ids.reserve(total());
  for (const auto& p : parts)
    for (const auto& m : p.members) ids.push_back(m.doc_id);
  return ids;
}

PartitionedDataset partition_by_score(std::vector<ScoredId> records, const PartitionSpec& spec) {
  spec.validate();
  if (records.empty()) throw ValidationError("cannot partition an empty dataset");
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) throw ValidationError("score of \"" + r.doc_id + "\" is not finite");
  }
  std::sort(records.begin(), records.end(), [](const ScoredId& a, const ScoredId& b) {
    return a.score != b.score ? a.score < b.score : a.doc_id < b.doc_id;
  });
  {
    std::vector<const std::string*> ids;
    ids.reserve(records.size());
    for (const auto& r : records) ids.push_back(&r.doc_id);
    std::sort(ids.begin(), ids.end(), [](auto* a, auto* b) { return *a < *b; });
    const auto dup = std::adjacent_find(ids.begin(), ids.end(), [](auto* a, auto* b) { return *a == *b; });
    if (dup != ids.end()) throw ValidationError("duplicate id \"" + **dup + "\" in partition input");
  }

  PartitionedDataset out;
  out.spec = spec;
  const auto b = spec.boundaries(records.size());
  out.parts.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    auto& part = out.parts[i];
    part.members.assign(std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>(b[i])),
                        std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>(b[i + 1])));
    if (!part.members.empty()) {
      part.score_min = part.members.front().score;
      part.score_max = part.members.back().score;
    }
  }
  return out;
}

PartitionedDataset partition_by_pd(std::span<const PdRecord> records, const PartitionSpec& spec) {
  std::vector<ScoredId> scored;
  scored.reserve(records.size());
  for (const auto& r : records) scored.push_back({r.doc_id, r.pd});
  return partition_by_score(std::move(scored), spec);
}

void save_partition(const std::filesystem::path& path, const PartitionedDataset& data, std::string_view lineage) {
  json meta;
  meta["n"] = data.spec.n;
  meta["split_quantiles"] = data.spec.split_quantiles;
  meta["total"] = data.total();
  json parts = json::array();
  for (const auto& p : data.parts) {
    json jp;
    jp["size"] = p.size();
    jp["score_min"] = p.score_min ? json(*p.score_min) : json(nullptr);
    jp["score_max"] = p.score_max ? json(*p.score_max) : json(nullptr);
    parts.push_back(jp);
  }
  meta["parts"] = parts;

  AtomicFile file(path);
  auto& out = file.stream();
  out << ArtifactHeader{std::string(kPartitionKind), 1, std::string(lineage)}.to_line() << '\n';
  out << meta.dump() << '\n';
  for (std::size_t i = 0; i < data.parts.size(); ++i) {
    for (const auto& m : data.parts[i].members) out << i << '\t' << m.doc_id << '\t' << format_double(m.score) << '\n';
  }
  file.commit();
}

PartitionedDataset load_partition(const std::filesystem::path& path, std::string* lineage) {
  LineReader reader(path);
  std::string line;
  auto fail = [&](const std::string& what) {
    throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + what);
  };
  if (!reader.next(line)) fail("empty partition file");
  const auto header = ArtifactHeader::parse(line);
  if (!header || header->kind != kPartitionKind) fail("expected a pdpc-partition header");
  if (header->version != 1) fail("unsupported partition version");
  if (lineage) *lineage = header->lineage;
  if (!reader.next(line)) fail("missing partition metadata");
  json meta;
  try {
    meta = json::parse(line);
  } catch (const json::parse_error&) {
    fail("malformed partition metadata");
  }
  PartitionedDataset data;
  data.spec.n = meta.at("n").get<std::size_t>();
  data.spec.split_quantiles = meta.at("split_quantiles").get<std::vector<double>>();
  const auto& parts = meta.at("parts");
  if (parts.size() != data.spec.n) fail("part count disagrees with n");
  data.parts.resize(data.spec.n);
  while (reader.next(line)) {
    const auto f = split(line, '\t');
    const auto idx = f.size() == 3 ? parse_u64(f[0]) : std::nullopt;
    const auto score = f.size() == 3 ? parse_double(f[2]) : std::nullopt;
    if (!idx || !score || *idx >= data.spec.n || f[1].empty()) fail("malformed partition row");
    data.parts[*idx].members.push_back({std::string(f[1]), *score});
  }
  if (!reader.last_line_terminated()) fail("truncated partition file");
  for (std::size_t i = 0; i < data.spec.n; ++i) {
    auto& p = data.parts[i];
    if (p.size() != parts[i].at("size").get<std::size_t>())
      throw InputError(path.string() + ": part " + std::to_string(i) + " size disagrees with header");
    if (!p.members.empty()) {
      p.score_min = p.members.front().score;
      p.score_max = p.members.back().score;
    }
  }
  return data;
}

}  // namespace pdpc
