#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mnn/dataset.hpp"
#include "mnn/synthetic.hpp"

using namespace mnn;

namespace {

Dataset parse(const std::string& text, LoadOptions opt = {}) {
    std::istringstream in(text);
    return parse_dataset(in, opt);
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const DataError& e) {
        return e.line();
    }
    ADD_FAILURE() << "accepted: " << text;
    return 0;
}

std::array<int, 3> class_counts(const Dataset& ds) {
    std::array<int, 3> c{};
    for (const auto& s : ds.samples()) ++c[static_cast<std::size_t>(index_from_label(s.label))];
    return c;
}

} // namespace

TEST(CleanText, HandExamples) {
    EXPECT_EQ(clean_text("He didn't\nvote", {"he"}), "did not vote");
    EXPECT_EQ(clean_text("", {}), "");
    EXPECT_EQ(clean_text("<p>Tax&nbsp;cut</p>", {}), "tax cut");
    EXPECT_EQ(clean_text("We'll see; they've WON'T", {}), "we will see they have will not");
    EXPECT_EQ(clean_text("the senator\xE2\x80\x99s plan", {"the"}), "senator plan");
    EXPECT_EQ(clean_text("Rock &amp; roll &#39;n&#x27; stuff!!", {}), "rock roll n stuff");
    EXPECT_EQ(clean_text("  'quoted'  words ", {}), "quoted words");
}

TEST(CleanText, DefaultStopwordsAreDropped) {
    EXPECT_EQ(clean_text("The tax bill was passed by the Senate"), "tax bill passed senate");
    EXPECT_FALSE(default_stopwords().contains("not"));
}

TEST(CleanText, Idempotent) {
    for (const char* raw : {"He didn't\nvote", "<b>It's</b> the GOP's  plan &amp; more", "I'm 100% sure",
                            "can't won't shouldn't", "x'y'z"}) {
        const std::string once = clean_text(raw);
        EXPECT_EQ(clean_text(once), once) << raw;
        for (char c : once) EXPECT_TRUE(std::islower(static_cast<unsigned char>(c)) || std::isdigit(c) || c == ' ');
    }
}

TEST(HashEncode, GoldenFnvValues) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
    EXPECT_EQ(fnv1a64("tax"), 0x56d7c8194448d63aULL);
    EXPECT_EQ(fnv1a64("cut"), 0xf5b9f7190cc182e3ULL);
}

TEST(HashEncode, BucketsAndSigns) {
    // tax -> bucket 2, sign +; cut -> bucket 3, sign -.
    const Vector v = hash_encode("tax tax cut", 8);
    Vector expect = Vector::Zero(8);
    expect[2] = 2 / std::sqrt(5.0);
    expect[3] = -1 / std::sqrt(5.0);
    EXPECT_LT((v - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(HashEncode, EmptyNormAndBagProperty) {
    EXPECT_TRUE(hash_encode("", 16).isZero(0.0));
    EXPECT_THROW(hash_encode("x", 0), InvalidArgument);
    const Vector a = hash_encode("senate passes tax bill today", 64);
    EXPECT_NEAR(a.norm(), 1.0, 1e-9);
    EXPECT_EQ(a, hash_encode("today bill tax passes senate", 64));
}

TEST(Load, ValidLines) {
    const auto ds = parse(
        "{\"id\":\"a\",\"label\":-1,\"embedding\":[1,2]}\n"
        "\n"
        "{\"id\":\"b\",\"label\":0,\"embedding\":[3,4],\"source\":\"CNN\",\"date\":\"2019-03-01\",\"rank\":2}\n"
        "{\"id\":\"c\",\"label\":1,\"embedding\":[5.5,-6]}\n");
    ASSERT_EQ(ds.size(), 3U);
    EXPECT_EQ(ds.dimension(), 2U);
    EXPECT_EQ(ds.labels(), (std::vector<Label>{-1, 0, 1}));
    EXPECT_EQ(ds.inputs(), (Matrix{{1, 3, 5.5}, {2, 4, -6}}));
    EXPECT_EQ(ds[1].source, "CNN");
    EXPECT_EQ(ds[1].date, "2019-03-01");
    EXPECT_EQ(ds[1].rank, 2U);
    EXPECT_FALSE(ds[0].source.has_value());
}

TEST(Load, TextRecordsAreHashed) {
    LoadOptions opt;
    opt.text_dimension = 32;
    const auto ds = parse("{\"id\":\"t\",\"label\":1,\"text\":\"<p>The tax cut</p>\"}\n", opt);
    EXPECT_EQ(ds.dimension(), 32U);
    EXPECT_EQ(ds[0].embedding, hash_encode("tax cut", 32));
}

TEST(Load, ErrorsCarryLineNumbers) {
    const std::string ok = "{\"id\":\"a\",\"label\":0,\"embedding\":[1,2]}\n";
    EXPECT_EQ(error_line(ok + "{\"id\":\"b\",\"label\":2,\"embedding\":[1,2]}\n"), 2U);
    EXPECT_EQ(error_line(ok + ok), 2U);  // duplicate id
    EXPECT_EQ(error_line(ok + "\n{\"id\":\"b\",\"label\":1,\"embedding\":[1,2,3]}\n"), 3U);
    EXPECT_EQ(error_line("{not json\n"), 1U);
    EXPECT_EQ(error_line("{\"id\":\"a\",\"label\":\"x\",\"embedding\":[1]}\n"), 1U);
    EXPECT_EQ(error_line("{\"id\":\"a\",\"label\":0}\n"), 1U);
    EXPECT_EQ(error_line("{\"id\":\"a\",\"label\":0,\"embedding\":[1,\"q\"]}\n"), 1U);
    EXPECT_EQ(error_line("{\"id\":\"a\",\"label\":0,\"embedding\":[1],\"date\":\"2019-13-01\"}\n"), 1U);
    EXPECT_EQ(error_line("{\"id\":\"a\",\"label\":0,\"embedding\":[1],\"rank\":0}\n"), 1U);
    EXPECT_EQ(error_line("[1,2]\n"), 1U);
    try {
        parse(ok + "{\"id\":\"b\",\"label\":2,\"embedding\":[1,2]}\n");
    } catch (const DataError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("line 2: ", 0), 0U);
    }
}

TEST(Load, DeclaredDimensionAndFiles) {
    LoadOptions opt;
    opt.dimension = 3;
    EXPECT_THROW(parse("{\"id\":\"a\",\"label\":0,\"embedding\":[1,2]}\n", opt), DataError);
    EXPECT_THROW(load_dataset("/nonexistent/data.jsonl"), DataError);
    const auto path = (std::filesystem::temp_directory_path() / "mnn_test_data.jsonl").string();
    std::ofstream(path) << "{\"id\":\"a\",\"label\":0,\"embedding\":[1,2]}\n";
    EXPECT_EQ(load_dataset(path).size(), 1U);
    std::filesystem::remove(path);
}

TEST(Dataset, AddValidates) {
    Dataset ds(2);
    Sample s{"x", 0, Vector{{1.0, std::nan("")}}, {}, {}, {}};
    EXPECT_THROW(ds.add(s), DataError);
    s.embedding = Vector{{1.0, 2.0}};
    s.label = 3;
    EXPECT_THROW(ds.add(s), DataError);
}

TEST(Split, StratifiedAndBalanced) {
    const Dataset ds = make_blobs(BlobSpec{300, 4, 1.0, 1.0, 1});
    ASSERT_EQ(class_counts(ds), (std::array<int, 3>{100, 100, 100}));
    const SplitSets s = split(ds, {0.8, 0.1, 0.1}, 9);
    EXPECT_EQ(s.train.size(), 240U);
    EXPECT_EQ(s.val.size(), 30U);
    EXPECT_EQ(s.test.size(), 30U);
    for (int c : class_counts(s.train)) EXPECT_NEAR(c, 80, 1);
    for (int c : class_counts(s.val)) EXPECT_NEAR(c, 10, 1);
    for (int c : class_counts(s.test)) EXPECT_NEAR(c, 10, 1);
}

TEST(Split, PartitionsAndIsSeeded) {
    const Dataset ds = make_blobs(BlobSpec{47, 3, 1.0, 1.0, 2});
    const SplitSets a = split(ds, {0.6, 0.25, 0.15}, 4);
    std::multiset<std::string> ids;
    for (const Dataset* d : {&a.train, &a.val, &a.test})
        for (const auto& smp : d->samples()) ids.insert(smp.id);
    EXPECT_EQ(ids.size(), 47U);
    EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), 47U);
    const SplitSets b = split(ds, {0.6, 0.25, 0.15}, 4);
    EXPECT_EQ(a.val.inputs(), b.val.inputs());
    EXPECT_THROW(split(ds, {0.5, 0.5, 0.1}, 1), InvalidArgument);
    EXPECT_THROW(split(ds, {1.0, 0.0, 0.0}, 1), InvalidArgument);
}

TEST(Blobs, ShapeAndDeterminism) {
    const BlobSpec spec{30, 5, 1.0, 0.5, 7};
    const Dataset a = make_blobs(spec), b = make_blobs(spec);
    EXPECT_EQ(a.size(), 30U);
    EXPECT_EQ(a.dimension(), 5U);
    EXPECT_EQ(a.inputs(), b.inputs());
    EXPECT_EQ(a[0].label, -1);
    EXPECT_EQ(a[1].label, 0);
    EXPECT_EQ(a[2].label, 1);
}

TEST(Blobs, SeparableByNearestCentroid) {
    // Nearest-centroid classifier fitted on a training half as a separability oracle.
    const Dataset ds = make_blobs(BlobSpec{300, 512, 0.5, 1.0, 1});
    const SplitSets s = split(ds, {0.5, 0.25, 0.25}, 1);
    Matrix centroids = Matrix::Zero(512, 3);
    Vector counts = Vector::Zero(3);
    for (const auto& smp : s.train.samples()) {
        centroids.col(index_from_label(smp.label)) += smp.embedding;
        counts[index_from_label(smp.label)] += 1;
    }
    for (int c = 0; c < 3; ++c) centroids.col(c) /= counts[c];
    int hits = 0;
    for (const auto& smp : s.test.samples()) {
        Eigen::Index best;
        (centroids.colwise() - smp.embedding).colwise().squaredNorm().minCoeff(&best);
        hits += label_from_index(best) == smp.label;
    }
    EXPECT_GE(static_cast<double>(hits) / static_cast<double>(s.test.size()), 0.95);
}
