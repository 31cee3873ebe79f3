#pragma once

// File formats for embeddings, relevance judgments and raw corpus text.
//
// Embedding file layout (little-endian):
//   header (24 bytes): "IMRN" | version u32 | kind u8 | dim u32 | count u64 | 3 reserved
//   id block:          count × (u16 byte length, UTF-8 bytes)
//   payload:           count × dim float32, record order

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "imrnn/error.hpp"
#include "imrnn/linalg.hpp"

namespace imrnn {

enum class EmbeddingKind : std::uint8_t { Query = 0, Document = 1, Token = 2 };

std::string to_string(EmbeddingKind kind);

inline constexpr char kEmbeddingMagic[4] = {'I', 'M', 'R', 'N'};
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 24;

/// Ordered (id, vector) records of one kind and dimension. Ids are unique and
/// every entry is finite; vectors are held as 64-bit.
class EmbeddingSet {
  public:
    EmbeddingSet(std::size_t dim, EmbeddingKind kind);

    std::size_t dim() const noexcept { return dim_; }
    EmbeddingKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    /// Appends a record; rejects duplicate ids, wrong length and non-finite values.
    void add(std::string id, std::span<const double> vector);

    const std::string& id(std::size_t i) const { return ids_.at(i); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const double> vector(std::size_t i) const;

    std::optional<std::size_t> find(const std::string& id) const;
    /// Like find() but throws NotFoundError naming the id.
    std::size_t index_of(const std::string& id) const;

    bool operator==(const EmbeddingSet& other) const;

  private:
    std::size_t dim_;
    EmbeddingKind kind_;
    std::vector<std::string> ids_;
    std::vector<double> values_;
    std::unordered_map<std::string, std::size_t> index_;
};

class EmbeddingFormatError : public Error {
  public:
    enum class Kind { BadMagic, VersionMismatch, BadKind, Truncated, DuplicateId, NonFinite, BadRecord };

    EmbeddingFormatError(Kind kind, std::size_t offset, const std::string& what);

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

  private:
    Kind kind_;
    std::size_t offset_;
};

EmbeddingSet read_embeddings(const std::string& bytes);
EmbeddingSet load_embeddings(const std::filesystem::path& path);

/// Validates every record before emitting anything; values are rounded to float32.
void serialize_embeddings(const EmbeddingSet& set, std::ostream& out);
void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

/// query id -> doc id -> non-negative grade.
using Qrels = std::map<std::string, std::map<std::string, int>>;

Qrels parse_qrels(std::istream& in, const std::string& source = "<qrels>");
Qrels load_qrels(const std::filesystem::path& path);
void write_qrels(const Qrels& qrels, const std::filesystem::path& path);

/// Looks up the grade, treating unjudged documents as 0.
int grade_of(const Qrels& qrels, const std::string& query_id, const std::string& doc_id);

/// doc (or query) id -> raw UTF-8 text.
using CorpusText = std::map<std::string, std::string>;

/// JSON-Lines, one {"id": ..., "text": ...} object per line; blank lines skipped.
CorpusText parse_corpus(std::istream& in, const std::string& source = "<corpus>");
CorpusText load_corpus(const std::filesystem::path& path);
void write_corpus(const CorpusText& corpus, const std::filesystem::path& path);

}  // namespace imrnn
