#include "imrnn/embedding_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "imrnn/io.hpp"

namespace imrnn {

std::string to_string(EmbeddingKind kind) {
    switch (kind) {
        case EmbeddingKind::Query: return "query";
        case EmbeddingKind::Document: return "document";
        case EmbeddingKind::Token: return "token";
    }
    return "unknown";
}

EmbeddingSet::EmbeddingSet(std::size_t dim, EmbeddingKind kind) : dim_(dim), kind_(kind) {
    if (dim == 0) throw Error("embedding dimension must be positive");
}

void EmbeddingSet::add(std::string id, std::span<const double> vector) {
    if (vector.size() != dim_) throw DimensionError("embedding '" + id + "'", dim_, vector.size());
    if (id.empty()) throw Error("embedding id must be non-empty");
    if (!all_finite(vector)) throw NonFiniteError("embedding '" + id + "' has a non-finite entry");
    if (index_.contains(id)) throw Error("duplicate embedding id '" + id + "'");
    index_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
    values_.insert(values_.end(), vector.begin(), vector.end());
}

std::span<const double> EmbeddingSet::vector(std::size_t i) const {
    if (i >= ids_.size()) throw NotFoundError("embedding index out of range");
    return {values_.data() + i * dim_, dim_};
}

std::optional<std::size_t> EmbeddingSet::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t EmbeddingSet::index_of(const std::string& id) const {
    auto found = find(id);
    if (!found) throw NotFoundError("no " + to_string(kind_) + " embedding with id '" + id + "'");
    return *found;
}

bool EmbeddingSet::operator==(const EmbeddingSet& other) const {
    return dim_ == other.dim_ && kind_ == other.kind_ && ids_ == other.ids_ &&
           values_ == other.values_;
}

EmbeddingFormatError::EmbeddingFormatError(Kind kind, std::size_t offset, const std::string& what)
    : Error(what + " (byte offset " + std::to_string(offset) + ")"), kind_(kind), offset_(offset) {}

EmbeddingSet read_embeddings(const std::string& bytes) {
    using K = EmbeddingFormatError::Kind;
    io::ByteReader in(bytes, [](std::size_t offset, std::size_t wanted) {
        throw EmbeddingFormatError(K::Truncated, offset,
                                   "truncated embedding file: needed " + std::to_string(wanted) +
                                       " more bytes");
    });

    if (in.remaining() < 4 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) {
        throw EmbeddingFormatError(K::BadMagic, 0, "not an embedding file: bad magic");
    }
    in.bytes(4);
    const auto version = in.u32();
    if (version != kEmbeddingFormatVersion) {
        throw EmbeddingFormatError(K::VersionMismatch, 4,
                                   "unsupported embedding format version " +
                                       std::to_string(version));
    }
    const auto kind_offset = in.offset();
    const auto kind_byte = in.u8();
    if (kind_byte > 2) {
        throw EmbeddingFormatError(K::BadKind, kind_offset,
                                   "unknown embedding kind " + std::to_string(kind_byte));
    }
    const auto dim = in.u32();
    const auto count = in.u64();
    in.bytes(3);
    if (dim == 0) throw EmbeddingFormatError(K::BadRecord, 9, "embedding dimension is zero");

    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
    std::unordered_map<std::string, std::size_t> seen;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto record_offset = in.offset();
        const auto len = in.u16();
        auto id = in.bytes(len);
        if (id.empty()) throw EmbeddingFormatError(K::BadRecord, record_offset, "empty id");
        if (!seen.emplace(id, i).second) {
            throw EmbeddingFormatError(K::DuplicateId, record_offset, "duplicate id '" + id + "'");
        }
        ids.push_back(std::move(id));
    }

    EmbeddingSet set(dim, static_cast<EmbeddingKind>(kind_byte));
    std::vector<double> row(dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto record_offset = in.offset();
        for (std::uint32_t j = 0; j < dim; ++j) {
            const float v = in.f32();
            if (!std::isfinite(v)) {
                throw EmbeddingFormatError(K::NonFinite, record_offset,
                                           "non-finite value in record '" + ids[i] + "'");
            }
            row[j] = static_cast<double>(v);
        }
        set.add(ids[i], row);
    }
    if (in.remaining() != 0) {
        throw EmbeddingFormatError(K::BadRecord, in.offset(), "trailing bytes after payload");
    }
    return set;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
    try {
        return read_embeddings(io::read_text_file(path));
    } catch (const EmbeddingFormatError& e) {
        throw EmbeddingFormatError(e.kind(), e.offset(), path.string() + ": " + e.what());
    }
}

void serialize_embeddings(const EmbeddingSet& set, std::ostream& out) {
    std::vector<float> payload;
    payload.reserve(set.size() * set.dim());
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (set.id(i).size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error("embedding id longer than 65535 bytes: record " + std::to_string(i));
        }
        for (double v : set.vector(i)) {
            const auto f = static_cast<float>(v);
            if (!std::isfinite(f)) {
                throw NonFiniteError("embedding '" + set.id(i) +
                                     "' has a value not representable as float32");
            }
            payload.push_back(f);
        }
    }

    out.write(kEmbeddingMagic, 4);
    io::put_u32(out, kEmbeddingFormatVersion);
    io::put_u8(out, static_cast<std::uint8_t>(set.kind()));
    io::put_u32(out, static_cast<std::uint32_t>(set.dim()));
    io::put_u64(out, set.size());
    const char reserved[3] = {0, 0, 0};
    out.write(reserved, 3);
    for (const auto& id : set.ids()) {
        io::put_u16(out, static_cast<std::uint16_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
    for (float f : payload) io::put_f32(out, f);
}

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
    // serialize to memory first so invalid sets never touch the filesystem
    std::ostringstream buffer;
    serialize_embeddings(set, buffer);
    const auto bytes = std::move(buffer).str();
    io::write_atomic(path, [&](std::ostream& out) {
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    });
}

Qrels parse_qrels(std::istream& in, const std::string& source) {
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, iteration, docid, grade_text, extra;
        if (!(fields >> qid)) continue;  // blank line
        if (!(fields >> iteration >> docid >> grade_text)) {
            throw ParseError(source, line_no, "expected 4 columns: qid iteration docid grade");
        }
        if (fields >> extra) throw ParseError(source, line_no, "unexpected 5th column");
        std::size_t consumed = 0;
        int grade = 0;
        try {
            grade = std::stoi(grade_text, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed == 0 || consumed != grade_text.size()) {
            throw ParseError(source, line_no, "grade '" + grade_text + "' is not an integer");
        }
        if (grade < 0) throw ParseError(source, line_no, "negative grade");
        qrels[qid][docid] = grade;
    }
    return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open qrels: " + path.string());
    return parse_qrels(in, path.string());
}

void write_qrels(const Qrels& qrels, const std::filesystem::path& path) {
    io::write_atomic(path, [&](std::ostream& out) {
        for (const auto& [qid, docs] : qrels)
            for (const auto& [docid, grade] : docs) out << qid << " 0 " << docid << ' ' << grade << '\n';
    });
}

int grade_of(const Qrels& qrels, const std::string& query_id, const std::string& doc_id) {
    auto q = qrels.find(query_id);
    if (q == qrels.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

CorpusText parse_corpus(std::istream& in, const std::string& source) {
    CorpusText corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj.contains("text") ||
            !obj["id"].is_string() || !obj["text"].is_string()) {
            throw ParseError(source, line_no, "expected string fields 'id' and 'text'");
        }
        auto id = obj["id"].get<std::string>();
        if (id.empty()) throw ParseError(source, line_no, "empty id");
        if (corpus.contains(id)) throw ParseError(source, line_no, "duplicate id '" + id + "'");
        corpus.emplace(std::move(id), obj["text"].get<std::string>());
    }
    return corpus;
}

CorpusText load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus: " + path.string());
    return parse_corpus(in, path.string());
}

void write_corpus(const CorpusText& corpus, const std::filesystem::path& path) {
    io::write_atomic(path, [&](std::ostream& out) {
        for (const auto& [id, text] : corpus) {
            out << nlohmann::json{{"id", id}, {"text", text}}.dump() << '\n';
        }
    });
}

}  // namespace imrnn
