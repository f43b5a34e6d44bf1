#include "pdpc/composer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "pdpc/error.hpp"
#include "pdpc/io.hpp"
#include "pdpc/random.hpp"

namespace pdpc {
namespace {

using json = nlohmann::json;
using i128 = __int128;

constexpr std::string_view kManifestFormat = "pdpc-manifest";

std::vector<std::uint64_t> step_proportions(const ScheduleSpec& spec, std::size_t parts, double p) {
  if (parts == 1) return {kProportionScale};
  const std::uint64_t low = quantize_proportion(eval(spec.curve, p));
  return {low, kProportionScale - low};
}

void apportion(BatchPlan& plan, const ScheduleSpec& spec) {
  const std::size_t n = plan.part_sizes.size();
  const auto scale = static_cast<i128>(kProportionScale);
  std::vector<i128> target(n, 0);          // cumulative, in units of 1/scale
  std::vector<std::size_t> assigned(n, 0); // cumulative counts
  std::vector<std::size_t> desired(n);
  std::vector<std::size_t> order(n);
  std::size_t seats_so_far = 0;

  for (std::size_t k = 0; k < plan.batches(); ++k) {
    const std::size_t b = plan.batch_sizes[k];
    seats_so_far += b;
    const auto q = step_proportions(spec, n, plan.progress(k));
    std::vector<double> real(n);
    for (std::size_t i = 0; i < n; ++i) {
      target[i] += static_cast<i128>(q[i]) * static_cast<i128>(b);
      real[i] = static_cast<double>(q[i]) / static_cast<double>(kProportionScale) * static_cast<double>(b);
    }
    plan.targets.push_back(std::move(real));

    // Largest-remainder rounding of the cumulative targets.
    std::size_t floors = 0;
    for (std::size_t i = 0; i < n; ++i) {
      desired[i] = static_cast<std::size_t>(target[i] / scale);
      floors += desired[i];
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return target[x] % scale > target[y] % scale; });
    for (std::size_t s = 0; s < seats_so_far - floors; ++s) ++desired[order[s]];

    // Step counts, clamped to what each part still has.
    std::vector<std::size_t> c(n);
    bool constrained = false;
    std::size_t sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t remaining = plan.part_sizes[i] - assigned[i];
      const std::size_t want = desired[i] > assigned[i] ? desired[i] - assigned[i] : 0;
      if (desired[i] < assigned[i]) constrained = true;
      c[i] = std::min({want, remaining, b});
      if (c[i] != want) constrained = true;
      sum += c[i];
    }
    while (sum > b) {
      // Only reachable after earlier clamping: trim the part furthest ahead of its target.
      std::size_t pick = n;
      i128 best = std::numeric_limits<i128>::min();
      for (std::size_t i = 0; i < n; ++i) {
        if (c[i] == 0) continue;
        const i128 ahead = static_cast<i128>(assigned[i] + c[i]) * scale - target[i];
        if (ahead >= best) {
          best = ahead;
          pick = i;
        }
      }
      --c[pick];
      --sum;
      constrained = true;
    }
    while (sum < b) {
      std::size_t pick = n;
      std::size_t most = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t left = plan.part_sizes[i] - assigned[i] - c[i];
        if (left > most) {
          most = left;
          pick = i;
        }
      }
      if (pick == n) throw Error(ErrorCategory::kInternal, "apportionment ran out of budget");
      ++c[pick];
      ++sum;
      constrained = true;
    }
    for (std::size_t i = 0; i < n; ++i) assigned[i] += c[i];
    plan.counts.push_back(std::move(c));
    plan.constrained.push_back(constrained);
    if (constrained && !plan.first_constrained) plan.first_constrained = k;
  }
}

void slice_sequential(BatchPlan& plan, bool descending) {
  const std::size_t n = plan.part_sizes.size();
  // Stream position -> part, walking parts in order (or reverse order).
  std::vector<std::size_t> part_order(n);
  std::iota(part_order.begin(), part_order.end(), std::size_t{0});
  if (descending) std::reverse(part_order.begin(), part_order.end());
  std::size_t cursor_part = 0;
  std::size_t left_in_part = n ? plan.part_sizes[part_order[0]] : 0;
  for (std::size_t k = 0; k < plan.batches(); ++k) {
    std::vector<std::size_t> c(n, 0);
    std::size_t need = plan.batch_sizes[k];
    while (need > 0) {
      while (left_in_part == 0) left_in_part = plan.part_sizes[part_order[++cursor_part]];
      const std::size_t take = std::min(need, left_in_part);
      c[part_order[cursor_part]] += take;
      left_in_part -= take;
      need -= take;
    }
    plan.targets.emplace_back(c.begin(), c.end());
    plan.counts.push_back(std::move(c));
    plan.constrained.push_back(false);
  }
}

json header_to_json(const ManifestHeader& h, std::uint64_t body_hash) {
  json j;
  j["format"] = kManifestFormat;
  j["version"] = h.version;
  j["seed"] = h.seed;
  j["mode"] = to_string(h.mode);
  j["curve"] = h.curve ? curve_to_json(*h.curve) : json(nullptr);
  j["K"] = h.steps;
  j["N"] = h.batch_size;
  j["part_sizes"] = h.part_sizes;
  j["total"] = h.total;
  j["batches"] = h.batches;
  j["lineage"] = h.lineage;
  j["partition_lineage"] = h.partition_lineage;
  j["body_hash"] = hex64(body_hash);
  return j;
}

std::string serialize_body(const Manifest& m) {
  std::string body;
  for (std::size_t k = 0; k < m.batches.size(); ++k) {
    body += std::to_string(k);
    for (const auto& id : m.batches[k]) {
      body += ' ';
      body += id;
    }
    body += '\n';
  }
  return body;
}

}  // namespace

ScheduleMode schedule_mode_from_string(std::string_view s) {
  if (s == "curriculum") return ScheduleMode::kCurriculum;
  if (s == "random") return ScheduleMode::kRandom;
  if (s == "sequential_asc") return ScheduleMode::kSequentialAsc;
  if (s == "sequential_desc") return ScheduleMode::kSequentialDesc;
  throw ValidationError("unknown schedule mode \"" + std::string(s) +
                        "\" (curriculum|random|sequential_asc|sequential_desc)");
}

std::string_view to_string(ScheduleMode m) {
  switch (m) {
    case ScheduleMode::kCurriculum: return "curriculum";
    case ScheduleMode::kRandom: return "random";
    case ScheduleMode::kSequentialAsc: return "sequential_asc";
    case ScheduleMode::kSequentialDesc: return "sequential_desc";
  }
  return "curriculum";
}

std::uint64_t quantize_proportion(double f) {
  if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("proportion outside [0, 1]: " + format_double(f));
  return static_cast<std::uint64_t>(std::llround(std::ldexp(f, 32)));
}

double BatchPlan::progress(std::size_t k) const {
  return std::min(1.0, static_cast<double>(k) / static_cast<double>(steps));
}

BatchPlan plan_batches(std::span<const std::size_t> part_sizes, std::size_t batch_size,
                       std::optional<std::size_t> steps, const ScheduleSpec& spec) {
  if (part_sizes.empty()) throw ValidationError("plan needs at least one part");
  if (batch_size < 1) throw ValidationError("batch size N must be >= 1");
  const std::size_t total = std::accumulate(part_sizes.begin(), part_sizes.end(), std::size_t{0});
  if (batch_size > total)
    throw ValidationError("batch size N=" + std::to_string(batch_size) + " exceeds the dataset size " +
                          std::to_string(total));
  const std::size_t full = total / batch_size;
  const std::size_t rem = total % batch_size;
  const std::size_t k = steps.value_or(full);
  if (k != full && !(rem > 0 && k == full + 1))
    throw ValidationError("K=" + std::to_string(k) + " cannot cover " + std::to_string(total) +
                          " documents in batches of " + std::to_string(batch_size) + " (use " +
                          std::to_string(full) + (rem ? " or " + std::to_string(full + 1) : std::string()) + ")");

  BatchPlan plan;
  plan.mode = spec.mode;
  plan.batch_size = batch_size;
  plan.steps = k;
  plan.batch_sizes.assign(full, batch_size);
  if (rem) plan.batch_sizes.push_back(rem);

  switch (spec.mode) {
    case ScheduleMode::kCurriculum:
      if (part_sizes.size() > 2)
        throw ValidationError("curriculum mode takes a 1- or 2-part partition, got " +
                              std::to_string(part_sizes.size()) + " parts");
      validate(spec.curve);
      plan.curve = spec.curve;
      plan.part_sizes.assign(part_sizes.begin(), part_sizes.end());
      apportion(plan, spec);
      break;
    case ScheduleMode::kRandom:
      plan.part_sizes = {total};
      for (auto b : plan.batch_sizes) {
        plan.counts.push_back({b});
        plan.targets.push_back({static_cast<double>(b)});
        plan.constrained.push_back(false);
      }
      break;
    case ScheduleMode::kSequentialAsc:
    case ScheduleMode::kSequentialDesc:
      plan.part_sizes.assign(part_sizes.begin(), part_sizes.end());
      slice_sequential(plan, spec.mode == ScheduleMode::kSequentialDesc);
      break;
  }
  return plan;
}

Manifest compose(const BatchPlan& plan, const PartitionedDataset& parts, std::uint64_t seed) {
  const auto sizes = parts.sizes();
  const std::size_t total = parts.total();
  const std::size_t planned = std::accumulate(plan.batch_sizes.begin(), plan.batch_sizes.end(), std::size_t{0});
  if (planned != total)
    throw ValidationError("plan covers " + std::to_string(planned) + " documents but the partition has " +
                          std::to_string(total));
  if (plan.mode != ScheduleMode::kRandom && plan.part_sizes != sizes)
    throw ValidationError("plan part sizes do not match the partition");

  Manifest m;
  m.header.seed = seed;
  m.header.mode = plan.mode;
  m.header.curve = plan.curve;
  m.header.steps = plan.steps;
  m.header.batch_size = plan.batch_size;
  m.header.part_sizes = sizes;
  m.header.total = total;
  m.header.batches = plan.batches();
  m.batches.reserve(plan.batches());

  auto chunk = [&](std::vector<std::string> stream) {
    std::size_t pos = 0;
    for (auto b : plan.batch_sizes) {
      m.batches.emplace_back(std::make_move_iterator(stream.begin() + static_cast<std::ptrdiff_t>(pos)),
                             std::make_move_iterator(stream.begin() + static_cast<std::ptrdiff_t>(pos + b)));
      pos += b;
    }
  };

  switch (plan.mode) {
    case ScheduleMode::kRandom: {
      auto ids = parts.sorted_ids();
      Rng rng(derive_seed(seed, "random"));
      rng.shuffle(std::span<std::string>(ids));
      chunk(std::move(ids));
      break;
    }
    case ScheduleMode::kSequentialAsc:
      chunk(parts.sorted_ids());
      break;
    case ScheduleMode::kSequentialDesc: {
      auto ids = parts.sorted_ids();
      std::reverse(ids.begin(), ids.end());
      chunk(std::move(ids));
      break;
    }
    case ScheduleMode::kCurriculum: {
      std::vector<std::vector<std::string>> streams;
      for (std::size_t i = 0; i < parts.parts.size(); ++i) {
        std::vector<std::string> ids;
        ids.reserve(parts.parts[i].size());
        for (const auto& mem : parts.parts[i].members) ids.push_back(mem.doc_id);
        Rng rng(derive_seed(seed, "part", i));
        rng.shuffle(std::span<std::string>(ids));
        streams.push_back(std::move(ids));
      }
      std::vector<std::size_t> cursor(streams.size(), 0);
      for (std::size_t k = 0; k < plan.batches(); ++k) {
        std::vector<std::string> batch;
        batch.reserve(plan.batch_sizes[k]);
        for (std::size_t i = 0; i < streams.size(); ++i) {
          for (std::size_t c = 0; c < plan.counts[k][i]; ++c) batch.push_back(std::move(streams[i][cursor[i]++]));
        }
        Rng rng(derive_seed(seed, "batch", k));
        rng.shuffle(std::span<std::string>(batch));
        m.batches.push_back(std::move(batch));
      }
      break;
    }
  }
  return m;
}

std::string serialize_manifest(const Manifest& manifest) {
  const std::string body = serialize_body(manifest);
  return header_to_json(manifest.header, fnv1a64(body)).dump() + '\n' + body;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  write_file(path, serialize_manifest(manifest));
}

Manifest load_manifest(const std::filesystem::path& path) {
  LineReader reader(path);
  std::string line;
  auto fail = [&](std::size_t line_no, const std::string& what) {
    throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!reader.next(line)) fail(1, "empty manifest");
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    fail(1, "manifest header is not valid JSON");
  }
  if (!j.is_object() || j.value("format", "") != kManifestFormat) fail(1, "not a pdpc manifest");
  Manifest m;
  auto& h = m.header;
  try {
    h.version = j.at("version").get<int>();
    if (h.version != 1) fail(1, "unsupported manifest version " + std::to_string(h.version));
    h.seed = j.at("seed").get<std::uint64_t>();
    h.mode = schedule_mode_from_string(j.at("mode").get<std::string>());
    if (!j.at("curve").is_null()) h.curve = curve_from_json(j.at("curve"));
    h.steps = j.at("K").get<std::size_t>();
    h.batch_size = j.at("N").get<std::size_t>();
    h.part_sizes = j.at("part_sizes").get<std::vector<std::size_t>>();
    h.total = j.at("total").get<std::size_t>();
    h.batches = j.at("batches").get<std::size_t>();
    h.lineage = j.at("lineage").get<std::string>();
    h.partition_lineage = j.at("partition_lineage").get<std::string>();
  } catch (const json::exception& e) {
    fail(1, std::string("bad manifest header: ") + e.what());
  } catch (const ValidationError& e) {
    fail(1, std::string("bad manifest header: ") + e.what());
  }
  if (h.batch_size == 0) fail(1, "batch size N must be >= 1");
  const std::string expected_hash = j.value("body_hash", "");

  std::string body;
  std::size_t seen = 0;
  while (reader.next(line)) {
    const std::size_t line_no = reader.line_number();
    if (m.batches.size() == h.batches) fail(line_no, "more batches than the header declares");
    const auto fields = split(line, ' ');
    const auto step = parse_u64(fields[0]);
    if (!step || *step != m.batches.size()) fail(line_no, "expected step index " + std::to_string(m.batches.size()));
    std::vector<std::string> batch;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) fail(line_no, "empty document id");
      batch.emplace_back(fields[i]);
    }
    const bool last = m.batches.size() + 1 == h.batches;
    const std::size_t expected = last ? h.total - seen : h.batch_size;
    if (batch.size() != expected || batch.empty())
      fail(line_no, "batch has " + std::to_string(batch.size()) + " ids, expected " + std::to_string(expected));
    if (!reader.last_line_terminated()) fail(line_no, "truncated final line (no newline)");
    seen += batch.size();
    body += line;
    body += '\n';
    m.batches.push_back(std::move(batch));
  }
  if (m.batches.size() != h.batches)
    fail(reader.line_number() + 1, "truncated manifest: " + std::to_string(m.batches.size()) + " of " +
                                       std::to_string(h.batches) + " batches present");
  if (hex64(fnv1a64(body)) != expected_hash) throw InputError(path.string() + ": manifest body hash mismatch");
  return m;
}

// ---------------------------------------------------------------- verification

VerificationReport verify_manifest(const Manifest& manifest, const PartitionedDataset& parts,
                                   const std::unordered_map<std::string, std::size_t>* token_lengths) {
  VerificationReport rep;
  const auto& h = manifest.header;

  std::unordered_map<std::string, std::size_t> part_of;
  for (std::size_t i = 0; i < parts.parts.size(); ++i)
    for (const auto& mem : parts.parts[i].members) part_of.emplace(mem.doc_id, i);

  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& batch : manifest.batches)
    for (const auto& id : batch) ++seen[id];
  for (const auto& [id, n] : seen) {
    if (!part_of.contains(id)) rep.unknown_ids.push_back(id);
    if (n > 1) rep.duplicate_ids.push_back(id);
  }
  for (const auto& [id, _] : part_of) {
    if (!seen.contains(id)) rep.missing_ids.push_back(id);
  }
  std::sort(rep.unknown_ids.begin(), rep.unknown_ids.end());
  std::sort(rep.duplicate_ids.begin(), rep.duplicate_ids.end());
  std::sort(rep.missing_ids.begin(), rep.missing_ids.end());
  rep.multiset_ok = rep.unknown_ids.empty() && rep.duplicate_ids.empty() && rep.missing_ids.empty();

  rep.batch_sizes_ok = h.batch_size > 0 && manifest.batches.size() == h.batches;
  for (std::size_t k = 0; rep.batch_sizes_ok && k < manifest.batches.size(); ++k) {
    const bool last = k + 1 == manifest.batches.size();
    if (manifest.batches[k].size() != h.batch_size && !(last && manifest.batches[k].size() < h.batch_size))
      rep.batch_sizes_ok = false;
  }

  std::optional<BatchPlan> plan;
  try {
    ScheduleSpec spec;
    spec.mode = h.mode;
    if (h.curve) spec.curve = *h.curve;
    plan = plan_batches(parts.sizes(), h.batch_size, h.steps, spec);
  } catch (const Error&) {
    plan.reset();
  }
  rep.plan_ok = plan.has_value() && plan->batches() == manifest.batches.size() && rep.multiset_ok;

  const bool curriculum = h.mode == ScheduleMode::kCurriculum && h.curve.has_value();
  std::size_t cum_low = 0;
  double cum_target = 0;
  double integral_so_far = 0;
  const double slots = static_cast<double>(h.batch_size) * static_cast<double>(std::max<std::size_t>(h.steps, 1));
  for (std::size_t k = 0; k < manifest.batches.size(); ++k) {
    const auto& batch = manifest.batches[k];
    StepCheck sc;
    sc.step = k;
    sc.batch_size = batch.size();
    sc.progress = h.steps ? std::min(1.0, static_cast<double>(k) / static_cast<double>(h.steps)) : 0.0;
    std::vector<std::size_t> per_part(parts.parts.size(), 0);
    for (const auto& id : batch) {
      const auto it = part_of.find(id);
      if (it != part_of.end()) ++per_part[it->second];
      if (token_lengths) {
        const auto t = token_lengths->find(id);
        if (t != token_lengths->end()) sc.tokens += t->second;
      }
    }
    sc.low_count = per_part.empty() ? 0 : per_part[0];
    if (rep.plan_ok && h.mode != ScheduleMode::kRandom && plan->counts[k] != per_part) {
      rep.plan_ok = false;
      rep.plan_mismatch_step = k;
    }
    if (rep.plan_ok && h.mode == ScheduleMode::kRandom && plan->batch_sizes[k] != batch.size()) {
      rep.plan_ok = false;
      rep.plan_mismatch_step = k;
    }
    cum_low += sc.low_count;
    sc.cum_low = cum_low;
    sc.in_tail = plan && plan->first_constrained && k >= *plan->first_constrained;
    if (curriculum) {
      const double f = eval(*h.curve, sc.progress);
      sc.target = f * static_cast<double>(batch.size());
      sc.deviation = static_cast<double>(sc.low_count) - sc.target;
      cum_target += sc.target;
      sc.cum_target = cum_target;
      const double lo = std::min(1.0, static_cast<double>(k) / static_cast<double>(h.steps));
      const double hi = std::min(1.0, static_cast<double>(k + 1) / static_cast<double>(h.steps));
      if (hi > lo) {
        // Simpson on [lo, hi]; the z-shape jump sits on a step boundary when K is even.
        const double mid = 0.5 * (lo + hi);
        integral_so_far += (hi - lo) / 6.0 *
                           (eval(*h.curve, lo) + 4 * eval(*h.curve, mid) + eval(*h.curve, std::nextafter(hi, lo)));
      }
      sc.integral_share = integral_so_far;
      sc.cum_low_share = static_cast<double>(cum_low) / slots;
      if (!sc.in_tail) {
        rep.max_step_deviation = std::max(rep.max_step_deviation, std::abs(sc.deviation));
        rep.max_cumulative_deviation =
            std::max(rep.max_cumulative_deviation, std::abs(static_cast<double>(cum_low) - cum_target));
      }
      rep.max_share_gap = std::max(rep.max_share_gap, std::abs(sc.cum_low_share - sc.integral_share));
    } else {
      sc.target = sc.deviation = sc.cum_target = std::numeric_limits<double>::quiet_NaN();
      sc.cum_low_share = static_cast<double>(cum_low) / slots;
      sc.integral_share = std::numeric_limits<double>::quiet_NaN();
    }
    rep.steps.push_back(sc);
  }

  if (rep.plan_ok && h.mode != ScheduleMode::kCurriculum && h.mode != ScheduleMode::kRandom) {
    auto expected = parts.sorted_ids();
    if (h.mode == ScheduleMode::kSequentialDesc) std::reverse(expected.begin(), expected.end());
    std::size_t pos = 0;
    for (std::size_t k = 0; rep.plan_ok && k < manifest.batches.size(); ++k) {
      for (const auto& id : manifest.batches[k]) {
        if (expected[pos++] != id) {
          rep.plan_ok = false;
          rep.plan_mismatch_step = k;
          break;
        }
      }
    }
  }
  if (rep.plan_ok && (h.mode == ScheduleMode::kCurriculum || h.mode == ScheduleMode::kRandom)) {
    // Randomized modes must reproduce exactly from the recorded seed.
    const Manifest again = compose(*plan, parts, h.seed);
    for (std::size_t k = 0; k < again.batches.size(); ++k) {
      if (again.batches[k] != manifest.batches[k]) {
        rep.plan_ok = false;
        rep.plan_mismatch_step = k;
        break;
      }
    }
  }
  return rep;
}

std::string VerificationReport::to_text() const {
  std::ostringstream out;
  auto list = [&](const char* label, const std::vector<std::string>& ids) {
    if (ids.empty()) return;
    out << "  " << label << " (" << ids.size() << "):";
    for (std::size_t i = 0; i < ids.size() && i < 20; ++i) out << ' ' << ids[i];
    if (ids.size() > 20) out << " ...";
    out << '\n';
  };
  out << "verification: " << (passed() ? "PASS" : "FAIL") << '\n';
  out << "multiset: " << (multiset_ok ? "ok" : "FAIL") << '\n';
  list("missing", missing_ids);
  list("duplicated", duplicate_ids);
  list("unknown", unknown_ids);
  out << "batch sizes: " << (batch_sizes_ok ? "ok" : "FAIL") << '\n';
  out << "plan/reproduction: " << (plan_ok ? "ok" : "FAIL");
  if (plan_mismatch_step) out << " (first mismatch at step " << *plan_mismatch_step << ")";
  out << '\n';
  std::size_t tail_start = steps.size();
  for (const auto& s : steps) {
    if (s.in_tail) {
      tail_start = s.step;
      break;
    }
  }
  out << "steps: " << steps.size() << ", budget-exhaustion tail starts at step " << tail_start << '\n';
  out << "max |low - N f(p)| outside tail: " << format_double(max_step_deviation) << '\n';
  out << "max cumulative deviation outside tail: " << format_double(max_cumulative_deviation) << '\n';
  out << "max |cumulative low share - integral of f|: " << format_double(max_share_gap) << '\n';
  return out.str();
}

std::string VerificationReport::steps_csv() const {
  std::string out =
      "step,progress,batch_size,low_count,target,deviation,cum_low,cum_target,cum_low_share,integral_share,in_tail,"
      "tokens\n";
  for (const auto& s : steps) {
    out += std::to_string(s.step) + ',' + format_double(s.progress) + ',' + std::to_string(s.batch_size) + ',' +
           std::to_string(s.low_count) + ',' + format_double(s.target) + ',' + format_double(s.deviation) + ',' +
           std::to_string(s.cum_low) + ',' + format_double(s.cum_target) + ',' + format_double(s.cum_low_share) +
           ',' + format_double(s.integral_share) + ',' + (s.in_tail ? "1" : "0") + ',' + std::to_string(s.tokens) +
           '\n';
  }
  return out;
}

}  // namespace pdpc
