#pragma once

// Per-source bias aggregation over a trial window. Each day page is reduced
// to a position-weighted mean (weights decay geometrically with front-page
// rank) and the day values are averaged per source.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mnn/error.hpp"
#include "mnn/format.hpp"

namespace mnn {

inline constexpr double kSignificantBias = 0.5;

struct PageEntry {
    std::uint32_t rank;
    double label;  // predicted label, or any score in [-1, 1]
};

struct DayPage {
    std::string source;
    std::string date;
    std::vector<PageEntry> entries;

    /// Entries must be non-empty, carry values in [-1, 1], and use ranks
    /// 1..n exactly once each.
    void validate() const {
        if (entries.empty()) throw InvalidArgument("day page for '" + source + "' " + date + " is empty");
        std::vector<std::uint32_t> ranks;
        for (const auto& e : entries) {
            if (!(e.label >= -1.0 && e.label <= 1.0))
                throw InvalidArgument("page entry value outside [-1, 1] for '" + source + "' " + date);
            ranks.push_back(e.rank);
        }
        std::sort(ranks.begin(), ranks.end());
        for (std::size_t i = 0; i < ranks.size(); ++i)
            if (ranks[i] != i + 1)
                throw InvalidArgument("page ranks for '" + source + "' " + date + " are not 1..n");
    }
};

struct SourceReport {
    std::string source;
    double mean_bias = 0;
    double normalized_bias = 0;
    bool significant = false;
    std::size_t day_count = 0;
};

/// Sum of decay^(rank-1) * label over the sum of weights. decay = 1 is the
/// plain mean.
inline double rank_normalize(const DayPage& page, double decay) {
    detail::require(decay > 0 && decay <= 1, "decay must lie in (0, 1]");
    page.validate();
    double num = 0, den = 0;
    for (const auto& e : page.entries) {
        const double w = std::pow(decay, static_cast<double>(e.rank - 1));
        num += w * e.label;
        den += w;
    }
    return std::clamp(num / den, -1.0, 1.0);
}

inline SourceReport aggregate_source(const std::vector<DayPage>& pages, double decay) {
    if (pages.empty()) throw InvalidArgument("no day pages to aggregate");
    SourceReport r;
    r.source = pages.front().source;
    for (const auto& p : pages) {
        if (p.source != r.source)
            throw InvalidArgument("mixed sources in one aggregate: '" + r.source + "' and '" + p.source + "'");
        r.mean_bias += rank_normalize(p, 1.0);
        r.normalized_bias += rank_normalize(p, decay);
    }
    r.day_count = pages.size();
    r.mean_bias /= static_cast<double>(pages.size());
    r.normalized_bias /= static_cast<double>(pages.size());
    r.significant = std::abs(r.normalized_bias) > kSignificantBias;
    return r;
}

/// One report per source, in order of first appearance.
inline std::vector<SourceReport> build_report(const std::vector<DayPage>& pages, double decay) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<DayPage>> by_source;
    for (const auto& p : pages) {
        auto [it, inserted] = by_source.try_emplace(p.source);
        if (inserted) order.push_back(p.source);
        it->second.push_back(p);
    }
    std::vector<SourceReport> out;
    for (const auto& s : order) out.push_back(aggregate_source(by_source[s], decay));
    return out;
}

inline void write_report_csv(std::ostream& out, const std::vector<SourceReport>& reports) {
    out << "source,mean_bias,normalized_bias,significant,day_count\n";
    for (const auto& r : reports)
        out << r.source << ',' << format_real(r.mean_bias) << ',' << format_real(r.normalized_bias) << ','
            << (r.significant ? "true" : "false") << ',' << r.day_count << '\n';
}

/// Reads DayPage JSON lines: {"source", "date", "entries": [{"rank", "label"}...]}.
/// Entries may also be written as [rank, label] pairs.
inline std::vector<DayPage> parse_day_pages(std::istream& in) {
    std::vector<DayPage> pages;
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
        if (!j.is_object() || !j.contains("source") || !j["source"].is_string() || !j.contains("entries") ||
            !j["entries"].is_array())
            throw DataError("day page needs string 'source' and array 'entries'", line);
        DayPage p;
        p.source = j["source"].get<std::string>();
        if (j.contains("date")) {
            if (!j["date"].is_string()) throw DataError("'date' must be a string", line);
            p.date = j["date"].get<std::string>();
        }
        for (const auto& e : j["entries"]) {
            nlohmann::json rank, label;
            if (e.is_array() && e.size() == 2) {
                rank = e[0];
                label = e[1];
            } else if (e.is_object() && e.contains("rank") && e.contains("label")) {
                rank = e["rank"];
                label = e["label"];
            } else {
                throw DataError("page entry must be {rank, label} or [rank, label]", line);
            }
            if (!rank.is_number_integer() || rank.get<long long>() < 1)
                throw DataError("page entry rank must be a positive integer", line);
            if (!label.is_number()) throw DataError("page entry label must be a number", line);
            p.entries.push_back({static_cast<std::uint32_t>(rank.get<long long>()), label.get<double>()});
        }
        try {
            p.validate();
        } catch (const InvalidArgument& e) {
            throw DataError(e.what(), line);
        }
        pages.push_back(std::move(p));
    }
    return pages;
}

/// Groups per-article prediction records (source, date, rank, predicted)
/// into day pages, ordered by (source first appearance, date).
inline std::vector<DayPage> pages_from_predictions(std::istream& in) {
    std::vector<std::string> source_order;
    std::map<std::pair<std::string, std::string>, DayPage> grouped;
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
        if (!j.is_object() || !j.contains("source") || !j.contains("date") || !j.contains("rank") ||
            !j.contains("predicted"))
            throw DataError("prediction record needs source, date, rank and predicted", line);
        if (!j["source"].is_string() || !j["date"].is_string() || !j["rank"].is_number_integer() ||
            !j["predicted"].is_number())
            throw DataError("prediction record has a field of the wrong type", line);
        const auto source = j["source"].get<std::string>();
        const auto date = j["date"].get<std::string>();
        const auto rank = j["rank"].get<long long>();
        if (rank < 1) throw DataError("rank must be >= 1", line);
        auto [it, inserted] = grouped.try_emplace({source, date});
        if (inserted) {
            it->second.source = source;
            it->second.date = date;
            if (std::find(source_order.begin(), source_order.end(), source) == source_order.end())
                source_order.push_back(source);
        }
        it->second.entries.push_back({static_cast<std::uint32_t>(rank), j["predicted"].get<double>()});
    }
    std::vector<DayPage> pages;
    for (const auto& s : source_order)
        for (auto& [key, page] : grouped)
            if (key.first == s) {
                std::sort(page.entries.begin(), page.entries.end(),
                          [](const PageEntry& a, const PageEntry& b) { return a.rank < b.rank; });
                try {
                    page.validate();
                } catch (const InvalidArgument& e) {
                    throw DataError(e.what());
                }
                pages.push_back(page);
            }
    return pages;
}

} // namespace mnn
