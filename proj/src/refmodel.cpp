#include "pdpc/refmodel.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "pdpc/error.hpp"
#include "pdpc/io.hpp"
#include "pdpc/parallel.hpp"
#include "pdpc/random.hpp"

namespace pdpc {
namespace {

constexpr std::string_view kModelKind = "ngram";

[[noreturn]] void bad_model(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw InputError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::vector<double> NgramConfig::resolved_weights() const {
  if (order < 1 || order > NgramModel::kMaxOrder)
    throw ValidationError("n-gram order must be in [1, " + std::to_string(NgramModel::kMaxOrder) +
                          "], got " + std::to_string(order));
  if (!(k_add > 0) || !std::isfinite(k_add)) throw ValidationError("k_add must be a positive finite number");
  if (weights.empty()) return std::vector<double>(static_cast<std::size_t>(order), 1.0 / order);
  if (weights.size() != static_cast<std::size_t>(order))
    throw ValidationError("expected " + std::to_string(order) + " interpolation weights, got " +
                          std::to_string(weights.size()));
  double sum = 0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw ValidationError("interpolation weights must be finite and >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("interpolation weights must sum to 1");
  return weights;
}

std::size_t NgramModel::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (TokenId id : k.ids) h = splitmix64(h ^ id);
  return static_cast<std::size_t>(h);
}

NgramModel::Key NgramModel::make_key(std::span<const TokenId> ids) {
  Key k;
  std::copy(ids.begin(), ids.end(), k.ids.begin());
  return k;
}

void NgramModel::init(std::size_t vocab_size, const NgramConfig& config) {
  if (vocab_size < 1) throw ValidationError("vocabulary size must be >= 1");
  weights_ = config.resolved_weights();
  order_ = config.order;
  vocab_size_ = vocab_size;
  k_add_ = config.k_add;
  grams_.assign(static_cast<std::size_t>(order_), {});
  contexts_.assign(static_cast<std::size_t>(order_), {});
}

void NgramModel::add_ngram(std::span<const TokenId> gram, std::uint64_t n) {
  const std::size_t m = gram.size();
  grams_[m - 1][make_key(gram)] += n;
  if (m == 1) {
    total_tokens_ += n;
  } else {
    contexts_[m - 1][make_key(gram.first(m - 1))] += n;
  }
}

NgramModel NgramModel::train(std::span<const TokenizedDoc> docs, std::size_t vocab_size,
                             const NgramConfig& config) {
  NgramModel model;
  model.init(vocab_size, config);
  if (docs.empty()) throw ValidationError("cannot train an n-gram model on an empty corpus");
  for (const auto& doc : docs) {
    const std::span<const TokenId> toks(doc.tokens);
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (toks[t] >= vocab_size)
        throw ValidationError("token id " + std::to_string(toks[t]) + " in \"" + doc.id +
                              "\" is outside the vocabulary");
      const std::size_t max_m = std::min<std::size_t>(static_cast<std::size_t>(model.order_), t + 1);
      for (std::size_t m = 1; m <= max_m; ++m) model.add_ngram(toks.subspan(t + 1 - m, m), 1);
    }
  }
  return model;
}

NgramModel NgramModel::uniform(std::size_t vocab_size, int order, double k_add) {
  NgramModel model;
  model.init(vocab_size, NgramConfig{order, {}, k_add});
  return model;
}

double NgramModel::probability(std::span<const TokenId> history, TokenId token) const {
  const std::size_t avail = std::min<std::size_t>(static_cast<std::size_t>(order_), history.size() + 1);
  const double kv = k_add_ * static_cast<double>(vocab_size_);

  std::array<TokenId, kMaxOrder> gram{};
  const auto ctx = history.last(avail - 1);
  std::copy(ctx.begin(), ctx.end(), gram.begin());
  gram[avail - 1] = token;
  const std::span<const TokenId> full(gram.data(), avail);

  double mix = 0;
  double weight_sum = 0;
  for (std::size_t m = 1; m <= avail; ++m) {
    const auto g = full.last(m);
    const auto git = grams_[m - 1].find(make_key(g));
    const double c_gram = git == grams_[m - 1].end() ? 0.0 : static_cast<double>(git->second);
    double c_ctx = static_cast<double>(total_tokens_);
    if (m > 1) {
      const auto cit = contexts_[m - 1].find(make_key(g.first(m - 1)));
      c_ctx = cit == contexts_[m - 1].end() ? 0.0 : static_cast<double>(cit->second);
    }
    const double p = (c_gram + k_add_) / (c_ctx + kv);
    mix += weights_[m - 1] * p;
    weight_sum += weights_[m - 1];
    if (m == avail && weight_sum == 0) return p;  // all available orders carry zero weight
  }
  return mix / weight_sum;
}

double NgramModel::log_likelihood(std::span<const TokenId> tokens) const {
  double ll = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] >= vocab_size_) throw ValidationError("token id outside the vocabulary");
    ll += std::log(probability(tokens.first(t), tokens[t]));
  }
  return ll;
}

double NgramModel::perplexity(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw ValidationError("perplexity of an empty sequence is undefined");
  return std::exp(-log_likelihood(tokens) / static_cast<double>(tokens.size()));
}

void NgramModel::save(const std::filesystem::path& path, std::string_view lineage) const {
  AtomicFile f(path);
  auto& out = f.stream();
  out << ArtifactHeader{std::string(kModelKind), 1, std::string(lineage)}.to_line() << '\n';
  out << "order " << order_ << '\n';
  out << "vocab_size " << vocab_size_ << '\n';
  out << "k_add " << format_double(k_add_) << '\n';
  out << "weights";
  for (double w : weights_) out << ' ' << format_double(w);
  out << '\n';
  out << "total_tokens " << total_tokens_ << '\n';
  for (int m = 1; m <= order_; ++m) {
    const auto& map = grams_[static_cast<std::size_t>(m - 1)];
    std::vector<std::pair<Key, std::uint64_t>> entries(map.begin(), map.end());
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first.ids < b.first.ids; });
    out << "grams " << m << ' ' << entries.size() << '\n';
    for (const auto& [key, n] : entries) {
      for (int i = 0; i < m; ++i) {
        if (i) out << ' ';
        out << key.ids[static_cast<std::size_t>(i)];
      }
      out << '\t' << n << '\n';
    }
  }
  out << "end\n";
  f.commit();
}

NgramModel NgramModel::load(const std::filesystem::path& path, std::string* lineage) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) bad_model(path, 1, "empty model file");
  const auto header = ArtifactHeader::parse(line);
  if (!header || header->kind != kModelKind) bad_model(path, 1, "not a pdpc-ngram model file");
  if (header->version != 1) bad_model(path, 1, "unsupported model version " + std::to_string(header->version));
  if (lineage) *lineage = header->lineage;

  auto field = [&](std::string_view name) -> std::string {
    if (!reader.next(line)) bad_model(path, reader.line_number() + 1, "truncated model file");
    const auto sp = line.find(' ');
    if (line.substr(0, sp) != name) bad_model(path, reader.line_number(), "expected " + std::string(name));
    return sp == std::string::npos ? std::string() : line.substr(sp + 1);
  };

  NgramConfig config;
  config.order = static_cast<int>(parse_u64(field("order")).value_or(0));
  const auto vocab = parse_u64(field("vocab_size")).value_or(0);
  config.k_add = parse_double(field("k_add")).value_or(-1);
  const std::string weights = field("weights");
  for (auto w : split_ws(weights)) config.weights.push_back(parse_double(w).value_or(-1));
  NgramModel model;
  try {
    model.init(vocab, config);
  } catch (const ValidationError& e) {
    bad_model(path, reader.line_number(), e.what());
  }
  const auto total = parse_u64(field("total_tokens"));
  if (!total) bad_model(path, reader.line_number(), "bad total_tokens");

  std::array<TokenId, kMaxOrder> ids{};
  for (int m = 1; m <= model.order_; ++m) {
    const std::string grams = field("grams");
    const auto spec = split_ws(grams);
    const auto order = spec.size() == 2 ? parse_u64(spec[0]) : std::nullopt;
    const auto count = spec.size() == 2 ? parse_u64(spec[1]) : std::nullopt;
    if (!order || *order != static_cast<std::uint64_t>(m) || !count) bad_model(path, reader.line_number(), "bad grams header");
    for (std::uint64_t e = 0; e < *count; ++e) {
      if (!reader.next(line)) bad_model(path, reader.line_number() + 1, "truncated model file");
      const auto tab = line.find('\t');
      const auto n = tab == std::string::npos ? std::nullopt : parse_u64(std::string_view(line).substr(tab + 1));
      const auto toks = split_ws(std::string_view(line).substr(0, tab == std::string::npos ? 0 : tab));
      if (!n || toks.size() != static_cast<std::size_t>(m)) bad_model(path, reader.line_number(), "bad n-gram entry");
      for (int i = 0; i < m; ++i) {
        const auto v = parse_u64(toks[static_cast<std::size_t>(i)]);
        if (!v || *v >= vocab) bad_model(path, reader.line_number(), "bad token id");
        ids[static_cast<std::size_t>(i)] = static_cast<TokenId>(*v);
      }
      model.add_ngram(std::span<const TokenId>(ids.data(), static_cast<std::size_t>(m)), *n);
    }
  }
  if (!reader.next(line) || line != "end") bad_model(path, reader.line_number(), "missing end marker");
  if (model.total_tokens_ != *total) bad_model(path, reader.line_number(), "unigram counts disagree with total_tokens");
  return model;
}

// ---------------------------------------------------------------- scoring

std::vector<PplRecord> score_corpus(const NgramModel& model, std::span<const TokenizedDoc> docs,
                                    unsigned workers) {
  std::vector<PplRecord> out(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) {
    if (docs[i].tokens.empty())
      throw InputError("document \"" + docs[i].id + "\" has no tokens; perplexity is undefined");
    out[i] = PplRecord{docs[i].id, model.perplexity(docs[i].tokens)};
  });
  return out;
}

ScoreFormat score_format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return ScoreFormat::kJsonl;
  return ScoreFormat::kCsv;
}

void save_scores(const std::filesystem::path& path, std::span<const PplRecord> records, ScoreFormat format,
                 std::string_view lineage) {
  AtomicFile f(path);
  auto& out = f.stream();
  if (!lineage.empty()) out << ArtifactHeader{"scores", 1, std::string(lineage)}.to_line() << '\n';
  if (format == ScoreFormat::kCsv) {
    out << "doc_id,ppl\n";
    for (const auto& r : records) out << csv_field(r.doc_id) << ',' << format_double(r.ppl) << '\n';
  } else {
    for (const auto& r : records) {
      nlohmann::json j;
      j["id"] = r.doc_id;
      j["ppl"] = r.ppl;
      out << j.dump() << '\n';
    }
  }
  f.commit();
}

std::string read_scores(const std::filesystem::path& path, ScoreFormat format,
                        const std::function<void(PplRecord&&)>& sink) {
  std::string lineage;
  LineReader reader(path);
  std::string line;
  bool first_row = true;
  auto fail = [&](const std::string& what) {
    throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": " + what);
  };
  while (reader.next(line)) {
    if (trim(line).empty()) continue;
    if (auto h = ArtifactHeader::parse(line)) {
      if (reader.line_number() == 1) lineage = h->lineage;
      continue;
    }
    PplRecord rec;
    std::optional<double> ppl;
    if (format == ScoreFormat::kCsv) {
      const auto fields = split_csv(line);
      if (!fields || fields->size() != 2) fail("expected 2 CSV fields (doc_id, ppl)");
      if (first_row && ((*fields)[0] == "doc_id" || (*fields)[0] == "id") && (*fields)[1] == "ppl") {
        first_row = false;
        continue;
      }
      rec.doc_id = (*fields)[0];
      ppl = parse_double(trim((*fields)[1]));
      if (!ppl) fail("ppl is not a number");
    } else {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        fail("malformed JSON");
      }
      auto id = j.is_object() ? j.find("id") : j.end();
      if (j.is_object() && id == j.end()) id = j.find("doc_id");
      if (!j.is_object() || id == j.end() || !id->is_string()) fail("missing string field \"id\"");
      const auto p = j.find("ppl");
      if (p == j.end() || !p->is_number()) fail("missing numeric field \"ppl\"");
      rec.doc_id = id->get<std::string>();
      ppl = p->get<double>();
    }
    first_row = false;
    if (rec.doc_id.empty()) fail("empty doc_id");
    if (!std::isfinite(*ppl) || *ppl <= 0) fail("ppl must be positive and finite, got " + format_double(*ppl));
    rec.ppl = *ppl;
    sink(std::move(rec));
  }
  return lineage;
}

ImportedScores import_scores(const std::filesystem::path& path, ScoreFormat format,
                             const std::unordered_set<std::string>* known_ids) {
  ImportedScores result;
  result.lineage = read_scores(path, format, [&](PplRecord&& rec) {
    if (known_ids && !known_ids->contains(rec.doc_id)) result.unknown_ids.push_back(rec.doc_id);
    result.records.push_back(std::move(rec));
  });
  return result;
}

}  // namespace pdpc
