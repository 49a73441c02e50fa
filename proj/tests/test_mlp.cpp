#include <cmath>

#include <gtest/gtest.h>

#include "mnn/dataset.hpp"
#include "mnn/mlp.hpp"

using namespace mnn;

namespace {

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (auto& v : m.reshaped()) v = n(rng);
    return m;
}

// Two well-separated 2-d clusters, labelled -1 and +1.
Dataset two_blobs(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 0.5);
    Dataset ds(2);
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i % 2 == 0;
        Sample s;
        s.id = "s" + std::to_string(i);
        s.label = pos ? 1 : -1;
        s.embedding = Vector{{(pos ? 2.0 : -2.0) + noise(rng), (pos ? 1.0 : -1.0) + noise(rng)}};
        ds.add(std::move(s));
    }
    return ds;
}

} // namespace

TEST(Mlp, BaselineVariants) {
    const auto& v = baseline_hidden_variants();
    ASSERT_EQ(v.size(), 3U);
    EXPECT_EQ(v[0], (std::vector<std::uint32_t>{128, 64, 32, 16}));
    EXPECT_EQ(v[1], (std::vector<std::uint32_t>{64, 32, 16, 10}));
    EXPECT_EQ(v[2], (std::vector<std::uint32_t>{256, 128, 64, 32, 10}));
}

TEST(Mlp, ZeroWeightsGiveOneHalf) {
    const Mlp mlp({4, 3, 2, 3});
    const Vector s = mlp_forward(mlp, Vector{{1.0, -2.0, 3.0, 0.5}});
    ASSERT_EQ(s.size(), 3);
    for (double v : s) EXPECT_EQ(v, 0.5);
}

TEST(Mlp, SingleHiddenUnitByHand) {
    Mlp mlp({2, 1, 3});
    mlp.weights[0] << 0.5, -0.25;
    mlp.biases[0] << 0.1;
    mlp.weights[1] << 1.0, -2.0, 0.5;
    mlp.biases[1] << 0.0, 0.3, -0.1;
    const double h = sig(0.5 * 1.0 - 0.25 * 2.0 + 0.1);
    const Vector s = mlp_forward(mlp, Vector{{1.0, 2.0}});
    EXPECT_NEAR(s[0], sig(1.0 * h), 1e-15);
    EXPECT_NEAR(s[1], sig(-2.0 * h + 0.3), 1e-15);
    EXPECT_NEAR(s[2], sig(0.5 * h - 0.1), 1e-15);
}

TEST(Mlp, OutputLengthAndShapeErrors) {
    Rng rng(1);
    const Mlp mlp = make_mlp({5, 4, 3}, rng);
    EXPECT_EQ(mlp_forward(mlp, Vector::Ones(5)).size(), 3);
    EXPECT_THROW(mlp_forward(mlp, Vector::Ones(4)), InvalidArgument);
    EXPECT_THROW(mlp_forward_batch(mlp, Matrix::Ones(6, 2)), InvalidArgument);
    EXPECT_THROW(Mlp({5}), InvalidArgument);
    EXPECT_THROW(Mlp({5, 0, 3}), InvalidArgument);
}

TEST(Mlp, InitIsBoundedByFanIn) {
    Rng rng(2);
    const Mlp mlp = make_mlp({16, 9, 3}, rng);
    EXPECT_LE(mlp.weights[0].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(16.0));
    EXPECT_LE(mlp.weights[1].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(9.0));
    Rng again(2);
    EXPECT_EQ(make_mlp({16, 9, 3}, again), mlp);
}

TEST(Mlp, LossMatchesCrossEntropyOfProbabilities) {
    Rng rng(3);
    const Mlp mlp = make_mlp({4, 5, 3}, rng);
    const Matrix xs = random_matrix(4, 6, rng);
    const Matrix ys = one_hot({-1, 0, 1, 1, 0, -1});
    const Matrix p = mlp_forward_batch(mlp, xs);
    double expect = 0;
    for (Eigen::Index j = 0; j < 6; ++j)
        for (Eigen::Index k = 0; k < 3; ++k)
            expect -= ys(k, j) * std::log(p(k, j)) + (1 - ys(k, j)) * std::log(1 - p(k, j));
    EXPECT_NEAR(mlp_loss(mlp, xs, ys), expect / 6, 1e-12);
}

TEST(Mlp, OneHotLayout) {
    const Matrix y = one_hot({1, -1});
    EXPECT_EQ(y, (Matrix{{0, 1}, {0, 0}, {1, 0}}));
    EXPECT_THROW(one_hot({2}), InvalidArgument);
}

TEST(Mlp, GradientsMatchCentralDifferences) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        Mlp mlp = make_mlp({4, 6, 5, 3}, rng);
        for (auto& w : mlp.weights) w *= 3.0;
        const Matrix xs = random_matrix(4, 5, rng);
        const Matrix ys = one_hot({-1, 0, 1, 0, 1});
        const MlpGradients g = mlp_gradients(mlp, xs, ys);
        const double h = 1e-5;
        auto check = [&](double& param, double analytic) {
            const double keep = param;
            param = keep + h;
            const double up = mlp_loss(mlp, xs, ys);
            param = keep - h;
            const double down = mlp_loss(mlp, xs, ys);
            param = keep;
            const double numeric = (up - down) / (2 * h);
            EXPECT_LT(std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6}), 1e-4);
        };
        for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
            for (Eigen::Index i = 0; i < mlp.weights[l].size(); ++i)
                check(mlp.weights[l].data()[i], g.weights[l].data()[i]);
            for (Eigen::Index i = 0; i < mlp.biases[l].size(); ++i) check(mlp.biases[l][i], g.biases[l][i]);
        }
    }
}

TEST(Mlp, LearnsSeparableBlobs) {
    const Dataset ds = two_blobs(200, 7);
    std::vector<EpochStats> log;
    const Mlp mlp = train_mlp(ds, TrainSpec{}, {2, 8, 3}, &log);
    ASSERT_EQ(log.size(), 200U);
    EXPECT_EQ(log.front().epoch, 1U);
    EXPECT_LT(log.back().loss, log.front().loss);
    EXPECT_GE(mlp_accuracy(mlp, ds.inputs(), ds.labels()), 0.95);
    EXPECT_EQ(log.back().accuracy, mlp_accuracy(mlp, ds.inputs(), ds.labels()));
}

TEST(Mlp, TrainingIsDeterministic) {
    const Dataset ds = two_blobs(60, 8);
    TrainSpec spec;
    spec.epochs = 10;
    EXPECT_EQ(train_mlp(ds, spec, {2, 4, 3}), train_mlp(ds, spec, {2, 4, 3}));
    spec.batch_size = 0;
    EXPECT_EQ(train_mlp(ds, spec, {2, 4, 3}), train_mlp(ds, spec, {2, 4, 3}));
}

TEST(Mlp, TrainingPreconditions) {
    const Dataset ds = two_blobs(10, 9);
    TrainSpec spec;
    spec.epochs = 0;
    EXPECT_THROW(train_mlp(ds, spec, {2, 4, 3}), InvalidArgument);
    EXPECT_THROW(train_mlp(Dataset(2), TrainSpec{}, {2, 4, 3}), InvalidArgument);
    EXPECT_THROW(train_mlp(ds, TrainSpec{}, {3, 4, 3}), InvalidArgument);
    EXPECT_THROW(train_mlp(ds, TrainSpec{}, {2, 4, 2}), InvalidArgument);
    spec.epochs = 5;
    spec.learning_rate = 0;
    EXPECT_THROW(train_mlp(ds, spec, {2, 4, 3}), InvalidArgument);
}
