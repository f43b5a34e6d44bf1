#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pdpc/corpus.hpp"

namespace pdpc {

/// Hyperparameters of an interpolated add-k n-gram model.
struct NgramConfig {
  int order = 2;
  /// Interpolation weights, lowest order first. Empty means uniform.
  std::vector<double> weights;
  double k_add = 0.1;

  /// Order/weight/k_add checks; returns the weights to use.
  std::vector<double> resolved_weights() const;
};

/// Fixed-weight (Jelinek-Mercer) mixture of add-k estimators of orders
/// 1..n:
///
///   P(w | h) = sum_m lambda_m * (c(h_m, w) + k) / (c(h_m) + k * V)
///
/// where h_m is the last m-1 tokens of the history. Each component is a
/// proper distribution over the V vocabulary entries, so the mixture is too.
/// Near the start of a document only orders with enough history take part and
/// their weights are renormalized.
class NgramModel {
 public:
  static constexpr int kMaxOrder = 6;

  static NgramModel train(std::span<const TokenizedDoc> docs, std::size_t vocab_size,
                          const NgramConfig& config);

  /// A model with no counts: every conditional is exactly 1/V.
  static NgramModel uniform(std::size_t vocab_size, int order = 1, double k_add = 1.0);

  int order() const noexcept { return order_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  double k_add() const noexcept { return k_add_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::uint64_t total_tokens() const noexcept { return total_tokens_; }

  /// P(token | history). Uses at most the last order-1 history tokens.
  double probability(std::span<const TokenId> history, TokenId token) const;

  /// Natural-log likelihood of the whole sequence, summed in the log domain.
  double log_likelihood(std::span<const TokenId> tokens) const;

  /// exp(-log_likelihood / L). Throws ValidationError for empty input.
  double perplexity(std::span<const TokenId> tokens) const;

  void save(const std::filesystem::path& path, std::string_view lineage) const;
  static NgramModel load(const std::filesystem::path& path, std::string* lineage = nullptr);

 private:
  struct Key {
    std::array<TokenId, kMaxOrder> ids{};
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  using CountMap = std::unordered_map<Key, std::uint64_t, KeyHash>;

  static Key make_key(std::span<const TokenId> ids);
  void init(std::size_t vocab_size, const NgramConfig& config);
  void add_ngram(std::span<const TokenId> gram, std::uint64_t n);

  int order_ = 1;
  std::size_t vocab_size_ = 0;
  double k_add_ = 0.1;
  std::vector<double> weights_;
  std::uint64_t total_tokens_ = 0;
  // grams_[m-1]: counts of m-grams; contexts_[m-1]: counts of their (m-1)-token prefixes.
  std::vector<CountMap> grams_;
  std::vector<CountMap> contexts_;
};

struct PplRecord {
  std::string doc_id;
  double ppl = 0;
  bool operator==(const PplRecord&) const = default;
};

/// Order-preserving parallel scoring. Throws InputError naming the id of a
/// zero-token document.
std::vector<PplRecord> score_corpus(const NgramModel& model, std::span<const TokenizedDoc> docs,
                                    unsigned workers = 1);

enum class ScoreFormat { kCsv, kJsonl };

ScoreFormat score_format_from_path(const std::filesystem::path& path);

/// CSV "doc_id,ppl" with header row, or JSONL {"id":...,"ppl":...}. An
/// artifact header line is written first when lineage is non-empty.
void save_scores(const std::filesystem::path& path, std::span<const PplRecord> records,
                 ScoreFormat format, std::string_view lineage);

struct ImportedScores {
  std::vector<PplRecord> records;
  std::string lineage;  // empty for foreign files
  std::vector<std::string> unknown_ids;  // only filled when known ids were given
};

/// Streams a validated score file record by record into `sink`. Returns the
/// artifact lineage if the file carries a pdpc header, else an empty string.
std::string read_scores(const std::filesystem::path& path, ScoreFormat format,
                        const std::function<void(PplRecord&&)>& sink);

/// Reads a score file. Rows with non-positive, non-finite or unparsable ppl
/// raise InputError with the 1-based line number. If known_ids is given,
/// ids outside it are collected into unknown_ids.
ImportedScores import_scores(const std::filesystem::path& path, ScoreFormat format,
                             const std::unordered_set<std::string>* known_ids = nullptr);

}  // namespace pdpc
