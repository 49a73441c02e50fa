#include <sstream>

#include <gtest/gtest.h>

#include "mnn/bias_report.hpp"

using namespace mnn;

namespace {

DayPage page(const std::string& source, const std::string& date, std::vector<double> labels) {
    DayPage p{source, date, {}};
    for (std::size_t i = 0; i < labels.size(); ++i) p.entries.push_back({static_cast<std::uint32_t>(i + 1), labels[i]});
    return p;
}

} // namespace

TEST(RankNormalize, HandValues) {
    EXPECT_EQ(rank_normalize(page("s", "d", {1, 1, 1}), 0.3), 1.0);
    EXPECT_EQ(rank_normalize(page("s", "d", {1, -1}), 1.0), 0.0);
    EXPECT_NEAR(rank_normalize(page("s", "d", {1, -1}), 0.5), (1 - 0.5) / 1.5, 1e-15);
    // Ranks may arrive in any order.
    DayPage shuffled{"s", "d", {{2, -1}, {1, 1}}};
    EXPECT_NEAR(rank_normalize(shuffled, 0.5), 1.0 / 3, 1e-15);
}

TEST(RankNormalize, Errors) {
    EXPECT_THROW(rank_normalize(page("s", "d", {}), 0.5), InvalidArgument);
    EXPECT_THROW(rank_normalize(page("s", "d", {1}), 0.0), InvalidArgument);
    EXPECT_THROW(rank_normalize(page("s", "d", {1}), 1.5), InvalidArgument);
    EXPECT_THROW(rank_normalize(DayPage{"s", "d", {{1, 1}, {3, 0}}}, 0.5), InvalidArgument);
    EXPECT_THROW(rank_normalize(page("s", "d", {2}), 0.5), InvalidArgument);
}

TEST(Aggregate, AllConservativeSource) {
    std::vector<DayPage> pages;
    for (int d = 0; d < 5; ++d) pages.push_back(page("X", std::to_string(d), {-1, -1, -1}));
    const SourceReport r = aggregate_source(pages, 0.9);
    EXPECT_EQ(r.mean_bias, -1.0);
    EXPECT_EQ(r.normalized_bias, -1.0);
    EXPECT_TRUE(r.significant);
    EXPECT_EQ(r.day_count, 5U);
}

TEST(Aggregate, AlternatingDaysCancel) {
    std::vector<DayPage> pages;
    for (int d = 0; d < 50; ++d) pages.push_back(page("Y", std::to_string(d), {d % 2 ? -1.0 : 1.0}));
    const SourceReport r = aggregate_source(pages, 0.9);
    EXPECT_EQ(r.normalized_bias, 0.0);
    EXPECT_FALSE(r.significant);
}

TEST(Aggregate, FiveSourceValues) {
    const std::vector<std::pair<std::string, double>> table{
        {"Google News", -0.1618}, {"Fox News", 0.8934}, {"CNN", -0.7939}, {"NPR", -0.2132}, {"New York Times", -0.4623}};
    std::vector<DayPage> pages;
    for (const auto& [source, v] : table) pages.push_back(page(source, "2019-01-01", {v}));
    const auto reports = build_report(pages, 0.9);
    ASSERT_EQ(reports.size(), 5U);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(reports[i].source, table[i].first);
        EXPECT_EQ(reports[i].normalized_bias, table[i].second);
        EXPECT_EQ(reports[i].significant, table[i].first == "Fox News" || table[i].first == "CNN");
    }
}

TEST(Aggregate, ThresholdIsStrict) {
    EXPECT_FALSE(aggregate_source({page("s", "d", {0.5})}, 1.0).significant);
    EXPECT_FALSE(aggregate_source({page("s", "d", {-0.5})}, 1.0).significant);
    EXPECT_TRUE(aggregate_source({page("s", "d", {-0.5000001})}, 1.0).significant);
}

TEST(Aggregate, Errors) {
    EXPECT_THROW(aggregate_source({}, 0.9), InvalidArgument);
    EXPECT_THROW(aggregate_source({page("a", "d", {1}), page("b", "d", {1})}, 0.9), InvalidArgument);
}

TEST(Report, CsvAndOrdering) {
    const auto reports = build_report({page("B", "1", {1, 0}), page("A", "1", {-1}), page("B", "2", {1})}, 0.5);
    ASSERT_EQ(reports.size(), 2U);
    EXPECT_EQ(reports[0].source, "B");
    EXPECT_EQ(reports[0].day_count, 2U);
    std::ostringstream out;
    write_report_csv(out, reports);
    EXPECT_EQ(out.str(),
              "source,mean_bias,normalized_bias,significant,day_count\n"
              "B,0.75,0.8333333333333333,true,2\n"
              "A,-1,-1,true,1\n");
}

TEST(Report, ParseDayPages) {
    std::istringstream in(
        "{\"source\":\"CNN\",\"date\":\"2019-01-01\",\"entries\":[{\"rank\":1,\"label\":-1},{\"rank\":2,\"label\":0}]}\n"
        "\n"
        "{\"source\":\"NPR\",\"entries\":[[1,0.25]]}\n");
    const auto pages = parse_day_pages(in);
    ASSERT_EQ(pages.size(), 2U);
    EXPECT_EQ(pages[0].entries.size(), 2U);
    EXPECT_EQ(pages[1].entries[0].label, 0.25);

    auto line_of = [](const std::string& text) -> std::size_t {
        std::istringstream s(text);
        try {
            parse_day_pages(s);
        } catch (const DataError& e) {
            return e.line();
        }
        return 0;
    };
    const std::string good = "{\"source\":\"a\",\"entries\":[[1,1]]}\n";
    EXPECT_EQ(line_of(good + "{\"source\":\"a\",\"entries\":[[2,1]]}\n"), 2U);
    EXPECT_EQ(line_of(good + "{\"source\":\"a\",\"entries\":[[1,3]]}\n"), 2U);
    EXPECT_EQ(line_of("{\"entries\":[]}\n"), 1U);
    EXPECT_EQ(line_of("nope\n"), 1U);
    EXPECT_EQ(line_of("{\"source\":\"a\",\"entries\":[{\"rank\":0,\"label\":1}]}\n"), 1U);
}

TEST(Report, PagesFromPredictions) {
    std::istringstream in(
        "{\"id\":\"1\",\"source\":\"Fox\",\"date\":\"2019-01-02\",\"rank\":2,\"predicted\":1}\n"
        "{\"id\":\"2\",\"source\":\"CNN\",\"date\":\"2019-01-01\",\"rank\":1,\"predicted\":-1}\n"
        "{\"id\":\"3\",\"source\":\"Fox\",\"date\":\"2019-01-02\",\"rank\":1,\"predicted\":0}\n"
        "{\"id\":\"4\",\"source\":\"Fox\",\"date\":\"2019-01-01\",\"rank\":1,\"predicted\":1}\n");
    const auto pages = pages_from_predictions(in);
    ASSERT_EQ(pages.size(), 3U);
    EXPECT_EQ(pages[0].source, "Fox");
    EXPECT_EQ(pages[0].date, "2019-01-01");
    EXPECT_EQ(pages[1].date, "2019-01-02");
    EXPECT_EQ(pages[1].entries[0].rank, 1U);
    EXPECT_EQ(pages[1].entries[0].label, 0.0);
    EXPECT_EQ(pages[2].source, "CNN");

    std::istringstream gap("{\"source\":\"a\",\"date\":\"d\",\"rank\":2,\"predicted\":1}\n");
    EXPECT_THROW(pages_from_predictions(gap), DataError);
    std::istringstream missing("{\"source\":\"a\",\"rank\":1,\"predicted\":1}\n");
    EXPECT_THROW(pages_from_predictions(missing), DataError);
}
