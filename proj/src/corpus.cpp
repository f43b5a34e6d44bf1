#include "pdpc/corpus.hpp"

#include <algorithm>
#include <json.hpp>
#include <unordered_set>

#include "pdpc/error.hpp"
#include "pdpc/io.hpp"
#include "pdpc/parallel.hpp"

namespace pdpc {
namespace {

using json = nlohmann::json;

constexpr std::string_view kVocabKind = "vocab";
constexpr std::string_view kTokensKind = "tokens";

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

Document parse_record(std::string_view line, std::string_view source, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InputError(where(source, line_no) + ": malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw InputError(where(source, line_no) + ": record is not a JSON object");
  const auto id_it = j.find("id");
  const auto text_it = j.find("text");
  if (id_it == j.end() || !id_it->is_string())
    throw InputError(where(source, line_no) + ": missing string field \"id\"");
  if (text_it == j.end() || !text_it->is_string())
    throw InputError(where(source, line_no) + ": missing string field \"text\"");

  Document doc;
  doc.id = id_it->get<std::string>();
  if (doc.id.empty() || std::any_of(doc.id.begin(), doc.id.end(), is_ascii_space))
    throw InputError(where(source, line_no) + ": id must be non-empty and contain no whitespace");
  doc.text = text_it->get<std::string>();
  if (const auto d = j.find("domain"); d != j.end() && !d->is_null()) {
    if (!d->is_string())
      throw InputError(where(source, line_no) + ": field \"domain\" must be a string");
    doc.domain = d->get<std::string>();
  }
  doc.char_len = utf8_length(doc.text);
  return doc;
}

void ingest_lines(std::string_view jsonl, std::string_view source, Corpus& corpus,
                  std::unordered_set<std::string>& seen) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    ++line_no;
    const auto line = trim(jsonl.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;

    Document doc = parse_record(line, source, line_no);
    if (!seen.insert(doc.id).second)
      throw InputError(where(source, line_no) + ": duplicate document id \"" + doc.id + "\"");
    auto& stats = corpus.stats;
    ++stats.documents;
    stats.total_chars += doc.char_len;
    stats.total_tokens += split_ws(doc.text).size();
    ++stats.per_domain[doc.domain];
    corpus.docs.push_back(std::move(doc));
  }
}

std::string expect_header(LineReader& reader, std::string_view kind, std::string* lineage) {
  std::string line;
  if (!reader.next(line)) throw InputError(reader.path().string() + ": empty file");
  const auto header = ArtifactHeader::parse(line);
  if (!header || header->kind != kind)
    throw InputError(reader.path().string() + ":1: expected a pdpc-" + std::string(kind) + " header");
  if (header->version != 1)
    throw InputError(reader.path().string() + ": unsupported version " +
                     std::to_string(header->version));
  if (lineage) *lineage = header->lineage;
  return header->lineage;
}

}  // namespace

std::size_t utf8_length(std::string_view s) noexcept {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

Corpus ingest_jsonl(std::string_view jsonl, std::string_view source) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  ingest_lines(jsonl, source, corpus, seen);
  return corpus;
}

Corpus ingest_corpus(std::span<const std::filesystem::path> paths) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  for (const auto& path : paths) {
    const std::string contents = read_file(path);
    ingest_lines(contents, path.string(), corpus, seen);
  }
  return corpus;
}

// ---------------------------------------------------------------- vocabulary

Vocabulary Vocabulary::build(std::span<const Document> docs, std::size_t min_count) {
  if (docs.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
  if (min_count < 1) throw ValidationError("min_count must be >= 1");

  std::unordered_map<std::string_view, std::uint64_t> freq;
  for (const auto& doc : docs) {
    for (auto tok : split_ws(doc.text)) ++freq[tok];
  }

  std::vector<std::pair<std::string_view, std::uint64_t>> kept;
  std::uint64_t unk_count = 0;
  for (const auto& [tok, n] : freq) {
    if (n >= min_count && tok != kUnkToken) {
      kept.emplace_back(tok, n);
    } else {
      unk_count += n;
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  Vocabulary v;
  v.min_count_ = min_count;
  v.tokens_.reserve(kept.size() + 1);
  for (const auto& [tok, n] : kept) {
    v.tokens_.emplace_back(tok);
    v.counts_.push_back(n);
  }
  v.tokens_.emplace_back(kUnkToken);
  v.counts_.push_back(unk_count);
  v.index();
  return v;
}

void Vocabulary::index() {
  ids_.clear();
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i + 1 < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<TokenId>(i));
  unk_id_ = static_cast<TokenId>(tokens_.size() - 1);
}

TokenId Vocabulary::lookup(std::string_view token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? unk_id_ : it->second;
}

void Vocabulary::save(const std::filesystem::path& path, std::string_view lineage) const {
  AtomicFile f(path);
  auto& out = f.stream();
  out << ArtifactHeader{std::string(kVocabKind), 1, std::string(lineage)}.to_line() << '\n';
  out << "# min_count " << min_count_ << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\t' << counts_[i] << '\n';
  f.commit();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path, std::string* lineage) {
  LineReader reader(path);
  expect_header(reader, kVocabKind, lineage);
  Vocabulary v;
  std::string line;
  if (!reader.next(line) || line.rfind("# min_count ", 0) != 0)
    throw InputError(path.string() + ":2: expected min_count line");
  v.min_count_ = parse_u64(std::string_view(line).substr(12)).value_or(0);
  while (reader.next(line)) {
    const auto f = split(line, '\t');
    const auto id = f.size() == 3 ? parse_u64(f[1]) : std::nullopt;
    const auto n = f.size() == 3 ? parse_u64(f[2]) : std::nullopt;
    if (!id || !n || *id != v.tokens_.size())
      throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": malformed vocab entry");
    v.tokens_.emplace_back(f[0]);
    v.counts_.push_back(*n);
  }
  if (v.tokens_.empty() || v.tokens_.back() != kUnkToken)
    throw InputError(path.string() + ": vocabulary must end with the unk token");
  v.index();
  return v;
}

// ---------------------------------------------------------------- tokenization

TokenizedDoc tokenize(const Document& doc, const Vocabulary& vocab) {
  TokenizedDoc out;
  out.id = doc.id;
  for (auto tok : split_ws(doc.text)) out.tokens.push_back(vocab.lookup(tok));
  if (out.tokens.empty())
    throw InputError("document \"" + doc.id + "\" has no tokens; perplexity is undefined");
  return out;
}

std::vector<TokenizedDoc> tokenize_corpus(std::span<const Document> docs, const Vocabulary& vocab,
                                          unsigned workers) {
  std::vector<TokenizedDoc> out(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) { out[i] = tokenize(docs[i], vocab); });
  return out;
}

void save_tokenized(const std::filesystem::path& path, std::span<const TokenizedDoc> docs,
                    std::string_view lineage) {
  AtomicFile f(path);
  auto& out = f.stream();
  out << ArtifactHeader{std::string(kTokensKind), 1, std::string(lineage)}.to_line() << '\n';
  for (const auto& d : docs) {
    out << d.id << '\t';
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      if (i) out << ' ';
      out << d.tokens[i];
    }
    out << '\n';
  }
  f.commit();
}

std::vector<TokenizedDoc> load_tokenized(const std::filesystem::path& path, std::string* lineage) {
  LineReader reader(path);
  expect_header(reader, kTokensKind, lineage);
  std::vector<TokenizedDoc> docs;
  std::string line;
  while (reader.next(line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": malformed tokenized line");
    TokenizedDoc d;
    d.id = line.substr(0, tab);
    for (auto field : split_ws(std::string_view(line).substr(tab + 1))) {
      const auto v = parse_u64(field);
      if (!v || *v > 0xffffffffULL)
        throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": bad token id");
      d.tokens.push_back(static_cast<TokenId>(*v));
    }
    if (d.tokens.empty())
      throw InputError(path.string() + ":" + std::to_string(reader.line_number()) + ": document with no tokens");
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace pdpc
