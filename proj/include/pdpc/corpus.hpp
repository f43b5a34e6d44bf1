#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pdpc {

using TokenId = std::uint32_t;

/// One raw corpus unit. Ids are non-empty and contain no ASCII whitespace so
/// they can be written unquoted into line-oriented artifacts.
struct Document {
  std::string id;
  std::string text;
  std::string domain;  // empty when the record has none
  std::size_t char_len = 0;  // UTF-8 code points
};

struct IngestStats {
  std::size_t documents = 0;
  std::size_t total_chars = 0;
  std::size_t total_tokens = 0;  // whitespace-delimited
  std::map<std::string, std::size_t> per_domain;  // "" key for untagged docs
};

struct Corpus {
  std::vector<Document> docs;
  IngestStats stats;
};

std::size_t utf8_length(std::string_view s) noexcept;

/// Reads one or more JSONL files ({"id", "text", optional "domain"} per line).
/// Blank lines are skipped. Throws InputError naming file and line for
/// malformed records, and naming the id for duplicates across all files.
Corpus ingest_corpus(std::span<const std::filesystem::path> paths);

/// Same, over an in-memory JSONL buffer; `source` is used in messages.
Corpus ingest_jsonl(std::string_view jsonl, std::string_view source = "<memory>");

class Vocabulary {
 public:
  static constexpr std::string_view kUnkToken = "<unk>";

  /// Tokens with frequency >= min_count get ids in (frequency desc, token
  /// asc) order; unk takes the last id. Throws for an empty corpus.
  static Vocabulary build(std::span<const Document> docs, std::size_t min_count = 2);

  TokenId lookup(std::string_view token) const;
  TokenId unk_id() const noexcept { return unk_id_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::uint64_t count(TokenId id) const { return counts_.at(id); }
  std::size_t min_count() const noexcept { return min_count_; }

  /// Lines "token\tid\tcount" sorted by id, after an artifact header.
  void save(const std::filesystem::path& path, std::string_view lineage) const;
  static Vocabulary load(const std::filesystem::path& path, std::string* lineage = nullptr);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_;
  }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  void index();

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> ids_;
  TokenId unk_id_ = 0;
  std::size_t min_count_ = 0;
};

struct TokenizedDoc {
  std::string id;
  std::vector<TokenId> tokens;

  std::size_t length() const noexcept { return tokens.size(); }
  bool operator==(const TokenizedDoc&) const = default;
};

/// Throws InputError if the text has no whitespace-delimited tokens.
TokenizedDoc tokenize(const Document& doc, const Vocabulary& vocab);

/// Order-preserving parallel tokenization.
std::vector<TokenizedDoc> tokenize_corpus(std::span<const Document> docs, const Vocabulary& vocab,
                                          unsigned workers = 1);

/// Lines "id\tid1 id2 ..." after an artifact header.
void save_tokenized(const std::filesystem::path& path, std::span<const TokenizedDoc> docs,
                    std::string_view lineage);
std::vector<TokenizedDoc> load_tokenized(const std::filesystem::path& path,
                                         std::string* lineage = nullptr);

}  // namespace pdpc
