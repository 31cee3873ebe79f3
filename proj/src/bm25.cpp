#include "imrnn/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "imrnn/io.hpp"
#include "imrnn/random.hpp"

namespace imrnn {

namespace {

// Decodes one UTF-8 code point; malformed bytes decode as U+FFFD and advance one byte.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto c0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto c = static_cast<unsigned char>(s[i + k]);
        return (c & 0xC0) == 0x80 ? (c & 0x3F) : -1;
    };
    if (c0 < 0x80) {
        ++i;
        return c0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((c0 & 0xE0) == 0xC0) {
        len = 2;
        cp = c0 & 0x1F;
    } else if ((c0 & 0xF0) == 0xE0) {
        len = 3;
        cp = c0 & 0x0F;
    } else if ((c0 & 0xF8) == 0xF0) {
        len = 4;
        cp = c0 & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k < len; ++k) {
        const int bits = cont(static_cast<std::size_t>(k));
        if (bits < 0) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | static_cast<char32_t>(bits);
    }
    i += static_cast<std::size_t>(len);
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Non-ASCII code points count as word characters unless they fall in the
// common punctuation, symbol or space blocks.
bool is_word_char(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    if (cp == 0xFFFD || cp == 0xFEFF) return false;
    return true;
}

char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp < 0x80) return cp;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;           // Latin-1
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x131 && cp != 0x138 &&
        cp != 0x149 && cp != 0x17F) {                                       // Latin Extended-A
        const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
        if (odd_upper) return (cp % 2 == 1) ? cp + 1 : cp;
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;         // Greek
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                        // Cyrillic
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = next_code_point(text, i);
        if (is_word_char(cp)) {
            append_utf8(current, to_lower(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

void Bm25Params::validate() const {
    if (!(k1 > 0.0)) throw Error("BM25 k1 must be > 0");
    if (!(b >= 0.0 && b <= 1.0)) throw Error("BM25 b must be within [0, 1]");
}

InvertedIndex InvertedIndex::build(const CorpusText& corpus) {
    if (corpus.empty()) throw Error("cannot build a BM25 index over an empty corpus");
    InvertedIndex index;
    index.doc_ids_.reserve(corpus.size());
    index.doc_lengths_.reserve(corpus.size());
    std::uint64_t total_length = 0;
    // CorpusText iterates in id order, so postings come out sorted by doc id.
    for (const auto& [id, text] : corpus) {
        const auto doc = static_cast<std::uint32_t>(index.doc_ids_.size());
        index.doc_index_.emplace(id, doc);
        index.doc_ids_.push_back(id);
        const auto tokens = tokenize(text);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_length += tokens.size();

        std::unordered_map<std::string, std::uint32_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf) index.postings_[term].push_back({doc, count});
    }
    index.avg_doc_length_ =
        static_cast<double>(total_length) / static_cast<double>(index.doc_ids_.size());
    return index;
}

std::span<const Posting> InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

std::size_t InvertedIndex::doc_index(const std::string& doc_id) const {
    auto it = doc_index_.find(doc_id);
    if (it == doc_index_.end()) throw NotFoundError("document '" + doc_id + "' is not indexed");
    return it->second;
}

double bm25_idf(std::size_t doc_count, std::size_t df) {
    const auto n = static_cast<double>(doc_count);
    const auto f = static_cast<double>(df);
    return std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

namespace {

double term_weight(const InvertedIndex& index, std::uint32_t tf, std::uint32_t doc_length, double idf,
                   const Bm25Params& p) {
    // an index of empty documents has avgdl 0; treat every length ratio as 1
    const double ratio = index.avg_doc_length() > 0.0
                             ? static_cast<double>(doc_length) / index.avg_doc_length()
                             : 1.0;
    const double t = static_cast<double>(tf);
    return idf * t * (p.k1 + 1.0) / (t + p.k1 * (1.0 - p.b + p.b * ratio));
}

}  // namespace

double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                  const std::string& doc_id, const Bm25Params& params) {
    params.validate();
    const auto doc = static_cast<std::uint32_t>(index.doc_index(doc_id));
    double score = 0.0;
    for (const auto& term : query_terms) {
        const auto postings = index.postings(term);
        auto it = std::lower_bound(postings.begin(), postings.end(), doc,
                                   [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (it == postings.end() || it->doc != doc) continue;
        score += term_weight(index, it->tf, index.doc_length(doc),
                             bm25_idf(index.doc_count(), postings.size()), params);
    }
    return score;
}

std::vector<ScoredDoc> top_k_candidates(const InvertedIndex& index, std::string_view query_text,
                                        std::size_t k, const Bm25Params& params) {
    if (k == 0) throw Error("top_k_candidates requires k >= 1");
    params.validate();
    std::vector<double> acc(index.doc_count(), 0.0);
    for (const auto& term : tokenize(query_text)) {
        const auto postings = index.postings(term);
        if (postings.empty()) continue;
        const double idf = bm25_idf(index.doc_count(), postings.size());
        for (const auto& p : postings) {
            acc[p.doc] += term_weight(index, p.tf, index.doc_length(p.doc), idf, params);
        }
    }
    std::vector<std::uint32_t> hits;
    for (std::uint32_t d = 0; d < acc.size(); ++d)
        if (acc[d] > 0.0) hits.push_back(d);
    // doc indices follow doc id order, so index order is the id tie-break
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        return acc[a] != acc[b] ? acc[a] > acc[b] : a < b;
    };
    const std::size_t n = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), better);
    std::vector<ScoredDoc> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({index.doc_ids()[hits[i]], acc[hits[i]]});
    return out;
}

MiningResult mine_triples(const InvertedIndex& index, const Qrels& qrels, const CorpusText& queries,
                          std::size_t k, std::uint64_t seed, const Bm25Params& params) {
    std::vector<std::string> missing;
    for (const auto& [qid, text] : queries) {
        auto it = qrels.find(qid);
        const bool has_positive =
            it != qrels.end() && std::any_of(it->second.begin(), it->second.end(),
                                             [](const auto& kv) { return kv.second >= 1; });
        if (!has_positive) missing.push_back(qid);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& q : missing) list += (list.empty() ? "" : ", ") + q;
        throw Error("queries without a positive judgment: " + list);
    }

    Rng rng(seed);
    MiningResult result;
    for (const auto& [qid, text] : queries) {
        const auto& judged = qrels.at(qid);
        std::vector<std::string> positives;
        for (const auto& [doc, grade] : judged)
            if (grade >= 1) positives.push_back(doc);
        // draw before the skip check so one query's pool never shifts another's RNG stream
        const auto& pos = positives[rng.uniform_index(positives.size())];

        const std::string* neg = nullptr;
        const auto candidates = top_k_candidates(index, text, k, params);
        for (const auto& c : candidates) {
            if (grade_of(qrels, qid, c.doc_id) < 1) {
                neg = &c.doc_id;
                break;
            }
        }
        if (neg == nullptr) {
            std::cerr << "warning: query '" << qid
                      << "' skipped: every top-k candidate is judged relevant\n";
            result.skipped.push_back(qid);
            continue;
        }
        result.triples.push_back({qid, pos, *neg});
    }
    return result;
}

void write_triples(const std::vector<TrainingTriple>& triples, const std::filesystem::path& path) {
    io::write_atomic(path, [&](std::ostream& out) {
        for (const auto& t : triples) {
            nlohmann::ordered_json j;
            j["query_id"] = t.query_id;
            j["pos_id"] = t.pos_id;
            j["neg_id"] = t.neg_id;
            out << j.dump() << '\n';
        }
    });
}

std::vector<TrainingTriple> load_triples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open triples: " + path.string());
    std::vector<TrainingTriple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            TrainingTriple t{j.at("query_id").get<std::string>(), j.at("pos_id").get<std::string>(),
                             j.at("neg_id").get<std::string>()};
            if (t.pos_id == t.neg_id) throw ParseError(path.string(), line_no, "pos_id equals neg_id");
            triples.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, std::string("bad triple: ") + e.what());
        }
    }
    return triples;
}

}  // namespace imrnn
