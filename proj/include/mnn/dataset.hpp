#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mnn/error.hpp"
#include "mnn/mesh.hpp"
#include "mnn/rng.hpp"

namespace mnn {

struct Sample {
    std::string id;
    Label label = 0;
    Vector embedding;
    std::optional<std::string> source;
    std::optional<std::string> date;  // YYYY-MM-DD
    std::optional<std::uint32_t> rank;
};

/// Labeled embedding vectors of one declared dimension with unique ids.
class Dataset {
public:
    explicit Dataset(std::uint32_t dimension = 0) : dimension_(dimension) {}

    std::uint32_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const std::vector<Sample>& samples() const noexcept { return samples_; }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }

    void add(Sample s) {
        if (dimension_ == 0) dimension_ = static_cast<std::uint32_t>(s.embedding.size());
        if (s.embedding.size() != static_cast<Eigen::Index>(dimension_))
            throw DataError("sample '" + s.id + "' has embedding length " + std::to_string(s.embedding.size()) +
                            ", dataset dimension is " + std::to_string(dimension_));
        if (!is_valid_label(s.label)) throw DataError("sample '" + s.id + "' has unknown label");
        if (s.rank && *s.rank < 1) throw DataError("sample '" + s.id + "' has rank < 1");
        if (!s.embedding.allFinite()) throw DataError("sample '" + s.id + "' has a non-finite embedding");
        if (!ids_.insert(s.id).second) throw DataError("duplicate sample id '" + s.id + "'");
        samples_.push_back(std::move(s));
    }

    /// D x N matrix of embeddings, one column per sample.
    Matrix inputs() const {
        Matrix xs(dimension_, static_cast<Eigen::Index>(samples_.size()));
        for (std::size_t i = 0; i < samples_.size(); ++i) xs.col(static_cast<Eigen::Index>(i)) = samples_[i].embedding;
        return xs;
    }

    std::vector<Label> labels() const {
        std::vector<Label> out;
        out.reserve(samples_.size());
        for (const auto& s : samples_) out.push_back(s.label);
        return out;
    }

private:
    std::uint32_t dimension_;
    std::vector<Sample> samples_;
    std::unordered_set<std::string> ids_;
};

// ---------------------------------------------------------------------------
// Text cleaning

inline const std::unordered_set<std::string>& default_stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",    "an",   "the",  "and",   "or",    "but",  "of",   "to",    "in",   "on",    "at",
        "by",   "for",  "with", "from",  "as",    "is",   "are",  "was",   "were", "be",    "been",
        "it",   "its",  "this", "that",  "these", "those", "i",   "we",    "you",  "they",  "he",
        "she",  "him",  "her",  "his",   "them",  "their", "our", "my",    "your", "me",    "us",
        "so",   "if",   "then", "than",  "there", "here", "also", "just",  "into", "about", "said",
        "says", "mr",   "mrs",  "ms",    "up",    "out",  "over", "after", "more", "which", "who",
        "what", "when", "new",  "news", "read", "story", "click", "advertisement", "subscribe", "reuters", "ap"};
    return words;
}

namespace detail {

inline const std::unordered_map<std::string_view, std::string_view>& irregular_contractions() {
    static const std::unordered_map<std::string_view, std::string_view> table = {
        {"won't", "will not"}, {"can't", "cannot"},  {"shan't", "shall not"}, {"ain't", "is not"},
        {"let's", "let us"},   {"it's", "it is"},    {"he's", "he is"},       {"she's", "she is"},
        {"that's", "that is"}, {"what's", "what is"}, {"there's", "there is"}, {"here's", "here is"},
        {"who's", "who is"},   {"where's", "where is"}, {"how's", "how is"},  {"y'all", "you all"}};
    return table;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

/// Expands one lowercase token; apostrophes left over afterwards are dropped
/// by the caller.
inline std::string expand_contraction(std::string_view tok) {
    if (auto it = irregular_contractions().find(tok); it != irregular_contractions().end())
        return std::string(it->second);
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 7> suffixes = {{
        {"n't", " not"}, {"'re", " are"}, {"'ve", " have"}, {"'ll", " will"}, {"'d", " would"}, {"'m", " am"},
        {"'s", ""},  // possessive
    }};
    for (auto [suffix, expansion] : suffixes) {
        if (tok.size() > suffix.size() && ends_with(tok, suffix))
            return std::string(tok.substr(0, tok.size() - suffix.size())) + std::string(expansion);
    }
    return std::string(tok);
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

} // namespace detail

/// Normalizes article text: newlines to spaces, HTML tags and entities
/// stripped, contractions expanded, specials removed, stopwords dropped
/// (case-insensitive). Output is lowercase [a-z0-9] tokens joined by single
/// spaces. Idempotent.
inline std::string clean_text(std::string_view raw,
                              const std::unordered_set<std::string>& stopwords = default_stopwords()) {
    std::string s;
    s.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(raw[i]);
        if (c == '<') {
            const auto close = raw.find('>', i + 1);
            if (close != std::string_view::npos) {
                s.push_back(' ');
                i = close;
                continue;
            }
        }
        if (c == '&') {
            std::size_t j = i + 1;
            if (j < raw.size() && raw[j] == '#') ++j;
            while (j < raw.size() && std::isalnum(static_cast<unsigned char>(raw[j]))) ++j;
            if (j < raw.size() && raw[j] == ';' && j > i + 1) {
                s.push_back(' ');
                i = j;
                continue;
            }
        }
        // U+2019 right single quotation mark, common in scraped text.
        if (c == 0xE2 && i + 2 < raw.size() && static_cast<unsigned char>(raw[i + 1]) == 0x80 &&
            static_cast<unsigned char>(raw[i + 2]) == 0x99) {
            s.push_back('\'');
            i += 2;
            continue;
        }
        if (std::isalnum(c) && c < 0x80)
            s.push_back(static_cast<char>(std::tolower(c)));
        else if (c == '\'')
            s.push_back('\'');
        else
            s.push_back(' ');
    }

    std::string expanded;
    for (auto& tok : detail::split_ws(s)) {
        std::string_view t = tok;
        while (!t.empty() && t.front() == '\'') t.remove_prefix(1);
        while (!t.empty() && t.back() == '\'') t.remove_suffix(1);
        std::string e = detail::expand_contraction(t);
        std::erase(e, '\'');
        expanded += e;
        expanded += ' ';
    }

    std::string out;
    for (auto& tok : detail::split_ws(expanded)) {
        if (stopwords.contains(tok)) continue;
        if (!out.empty()) out += ' ';
        out += tok;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hashing encoder
//
// Each whitespace token is hashed with 64-bit FNV-1a (offset basis
// 0xcbf29ce484222325, prime 0x100000001b3). Bucket = hash mod D, sign = +1
// when bit 63 is clear, -1 otherwise. The signed counts are L2-normalized.

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline Vector hash_encode(std::string_view cleaned, std::uint32_t dimension) {
    detail::require(dimension >= 1, "hash_encode dimension must be >= 1");
    Vector v = Vector::Zero(dimension);
    for (auto& tok : detail::split_ws(cleaned)) {
        const std::uint64_t h = fnv1a64(tok);
        v[static_cast<Eigen::Index>(h % dimension)] += (h >> 63) ? -1.0 : 1.0;
    }
    const double norm = v.norm();
    if (norm > 0) v /= norm;
    return v;
}

// ---------------------------------------------------------------------------
// JSON-lines ingestion

struct LoadOptions {
    std::uint32_t dimension = 0;  // 0: take from the first record
    std::unordered_set<std::string> stopwords = default_stopwords();
    std::uint32_t text_dimension = 512;  // used for text records when dimension == 0
};

namespace detail {

inline bool is_iso_day(const std::string& d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!std::isdigit(static_cast<unsigned char>(d[i]))) return false;
    const int month = std::stoi(d.substr(5, 2)), day = std::stoi(d.substr(8, 2));
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

inline Sample parse_sample(const nlohmann::json& j, const LoadOptions& opt, std::uint32_t dimension,
                           std::size_t line) {
    if (!j.is_object()) throw DataError("record is not a JSON object", line);
    Sample s;
    if (!j.contains("id") || !j["id"].is_string()) throw DataError("missing string field 'id'", line);
    s.id = j["id"].get<std::string>();
    if (!j.contains("label") || !j["label"].is_number_integer())
        throw DataError("missing integer field 'label'", line);
    const auto label = j["label"].get<long long>();
    if (label < -1 || label > 1) throw DataError("unknown label " + std::to_string(label), line);
    s.label = static_cast<Label>(label);

    if (j.contains("embedding")) {
        const auto& e = j["embedding"];
        if (!e.is_array()) throw DataError("'embedding' must be an array", line);
        s.embedding.resize(static_cast<Eigen::Index>(e.size()));
        for (std::size_t k = 0; k < e.size(); ++k) {
            if (!e[k].is_number()) throw DataError("'embedding' holds a non-number", line);
            s.embedding[static_cast<Eigen::Index>(k)] = e[k].get<double>();
        }
    } else if (j.contains("text")) {
        if (!j["text"].is_string()) throw DataError("'text' must be a string", line);
        const std::uint32_t d = dimension ? dimension : opt.text_dimension;
        s.embedding = hash_encode(clean_text(j["text"].get<std::string>(), opt.stopwords), d);
    } else {
        throw DataError("record needs 'embedding' or 'text'", line);
    }

    if (j.contains("source")) {
        if (!j["source"].is_string()) throw DataError("'source' must be a string", line);
        s.source = j["source"].get<std::string>();
    }
    if (j.contains("date")) {
        if (!j["date"].is_string() || !is_iso_day(j["date"].get<std::string>()))
            throw DataError("'date' must be an ISO-8601 day (YYYY-MM-DD)", line);
        s.date = j["date"].get<std::string>();
    }
    if (j.contains("rank")) {
        if (!j["rank"].is_number_integer() || j["rank"].get<long long>() < 1)
            throw DataError("'rank' must be a positive integer", line);
        s.rank = static_cast<std::uint32_t>(j["rank"].get<long long>());
    }
    return s;
}

} // namespace detail

inline Dataset parse_dataset(std::istream& in, const LoadOptions& opt = {}) {
    Dataset ds(opt.dimension);
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(std::string("malformed JSON: ") + e.what(), line);
        }
        Sample s = detail::parse_sample(j, opt, ds.dimension(), line);
        try {
            ds.add(std::move(s));
        } catch (const DataError& e) {
            throw DataError(e.what(), line);
        }
    }
    return ds;
}

inline Dataset load_dataset(const std::string& path, const LoadOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset '" + path + "'");
    return parse_dataset(in, opt);
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSets {
    Dataset train, val, test;
};

/// Label-stratified seeded split. Each class is shuffled and cut at the
/// rounded cumulative fractions, so per-class counts differ from the exact
/// proportions by less than one sample.
inline SplitSets split(const Dataset& ds, std::array<double, 3> fractions, std::uint64_t seed) {
    for (double f : fractions) detail::require(f > 0 && std::isfinite(f), "split fractions must be positive");
    detail::require(std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) < 1e-9,
                    "split fractions must sum to 1");

    std::map<Label, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < ds.size(); ++i) by_label[ds[i].label].push_back(i);

    Rng rng(seed);
    std::array<std::vector<std::size_t>, 3> parts;
    for (auto& [label, idx] : by_label) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const double n = static_cast<double>(idx.size());
        const auto cut1 = static_cast<std::size_t>(std::llround(n * fractions[0]));
        const auto cut2 = static_cast<std::size_t>(std::llround(n * (fractions[0] + fractions[1])));
        parts[0].insert(parts[0].end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut1));
        parts[1].insert(parts[1].end(), idx.begin() + static_cast<std::ptrdiff_t>(cut1),
                        idx.begin() + static_cast<std::ptrdiff_t>(cut2));
        parts[2].insert(parts[2].end(), idx.begin() + static_cast<std::ptrdiff_t>(cut2), idx.end());
    }

    SplitSets out{Dataset(ds.dimension()), Dataset(ds.dimension()), Dataset(ds.dimension())};
    std::array<Dataset*, 3> targets{&out.train, &out.val, &out.test};
    for (std::size_t p = 0; p < 3; ++p) {
        std::shuffle(parts[p].begin(), parts[p].end(), rng);
        for (auto i : parts[p]) targets[p]->add(ds[i]);
    }
    return out;
}

} // namespace mnn
