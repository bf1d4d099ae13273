#include <gtest/gtest.h>

#include <cstdio>
#include <string>

#include "attribkit/dataset.hpp"
#include "attribkit/model.hpp"
#include "attribkit/model_io.hpp"
#include "attribkit/train.hpp"
#include "test_util.hpp"

using namespace attribkit;

namespace {

// conv(k=2, 1 filter) -> dense, 1 channel, length 3, hand-checkable.
Model tiny_conv_model() {
    Model m;
    m.architecture = Architecture::temporal;
    m.n_channels = 1;
    m.input_length = 3;
    m.n_classes = 1;
    Layer conv;
    conv.spec = {LayerKind::temporal_conv, 2, 0, 1, 1, ActivationKind::tanh, 0};
    conv.weights = Tensor({1, 1, 2}, {2.0, -1.0});
    conv.bias = Tensor({1}, {0.5});
    Layer dense;
    dense.spec = {LayerKind::dense, 0, 0, 2, 1, ActivationKind::tanh, 0};
    dense.weights = Tensor({1, 2}, {3.0, 4.0});
    dense.bias = Tensor({1}, {-1.0});
    m.layers.push_back(std::move(conv));
    m.layers.push_back(std::move(dense));
    validate_model(m);
    return m;
}

}  // namespace

TEST(ModelTest, DenseForwardAndGradientMatchHandComputation) {
    const Model m = make_dense_model(1, 2, 2, {1, 2, 3, 4}, {0.5, -0.5});
    const Record r = make_record("r", -1, 1, 2, {10, 20});
    const auto logits = forward_logits(m, r);
    ASSERT_EQ(logits.size(), 2u);
    EXPECT_DOUBLE_EQ(logits[0], 50.5);
    EXPECT_DOUBLE_EQ(logits[1], 109.5);
    const Gradient g0 = input_gradient(m, r, 0);
    EXPECT_DOUBLE_EQ(g0.values[0], 1.0);
    EXPECT_DOUBLE_EQ(g0.values[1], 2.0);
    const Gradient g1 = input_gradient(m, r, 1);
    EXPECT_DOUBLE_EQ(g1.values[0], 3.0);
    EXPECT_DOUBLE_EQ(g1.values[1], 4.0);
}

TEST(ModelTest, TemporalConvForwardAndGradientMatchHandComputation) {
    const Model m = tiny_conv_model();
    const Record r = make_record("r", -1, 1, 3, {1, 2, 3});
    // y = [2*1 - 2 + 0.5, 2*2 - 3 + 0.5] = [0.5, 1.5]; logit = 3*0.5 + 4*1.5 - 1.
    EXPECT_DOUBLE_EQ(forward(m, r, 0), 6.5);
    const Gradient g = input_gradient(m, r, 0);
    EXPECT_DOUBLE_EQ(g.values[0], 6.0);   // 3*2
    EXPECT_DOUBLE_EQ(g.values[1], 5.0);   // 3*(-1) + 4*2
    EXPECT_DOUBLE_EQ(g.values[2], -4.0);  // 4*(-1)
}

TEST(ModelTest, AveragePoolForwardAndGradientMatchHandComputation) {
    Model m = tiny_conv_model();
    Layer pool;
    pool.spec = {LayerKind::average_pool, 0, 0, 1, 1, ActivationKind::tanh, 2};
    Layer dense;
    dense.spec = {LayerKind::dense, 0, 0, 1, 1, ActivationKind::tanh, 0};
    dense.weights = Tensor({1, 1}, {5.0});
    dense.bias = Tensor({1}, {0.0});
    m.layers.pop_back();
    m.layers.push_back(std::move(pool));
    m.layers.push_back(std::move(dense));
    validate_model(m);
    const Record r = make_record("r", -1, 1, 3, {1, 2, 3});
    // pooled = (0.5 + 1.5) / 2 = 1.0; logit = 5.0.
    EXPECT_DOUBLE_EQ(forward(m, r, 0), 5.0);
    const Gradient g = input_gradient(m, r, 0);
    EXPECT_DOUBLE_EQ(g.values[0], 5.0);   // 2.5*2
    EXPECT_DOUBLE_EQ(g.values[1], 2.5);   // 2.5*(-1) + 2.5*2
    EXPECT_DOUBLE_EQ(g.values[2], -2.5);  // 2.5*(-1)
}

TEST(ModelTest, ValidateRejectsMalformedModels) {
    Model m = make_dense_model(1, 2, 1, {1, 2}, {0});
    Model extra = m;
    extra.layers.push_back(m.layers[0]);  // dense before final layer
    EXPECT_THROW(validate_model(extra), std::invalid_argument);

    Model bad_bias = m;
    bad_bias.layers[0].bias = Tensor({2}, {0, 0});
    EXPECT_THROW(validate_model(bad_bias), std::invalid_argument);

    Model nan_w = m;
    nan_w.layers[0].weights[0] = std::nan("");
    EXPECT_THROW(validate_model(nan_w), std::invalid_argument);

    EXPECT_THROW(make_temporal_model(0, 16, 2, 1), std::invalid_argument);
    EXPECT_THROW(make_temporal_model(3, 2, 2, 1), std::invalid_argument);
}

TEST(ModelTest, RejectsWrongInputShapeAndClass) {
    const Model m = make_temporal_model(3, 16, 2, 9);
    const Record bad = make_record("b", -1, 2, 16, std::vector<double>(32, 0.0));
    EXPECT_THROW(forward_logits(m, bad), std::invalid_argument);
    const Record ok = make_record("ok", -1, 3, 16, std::vector<double>(48, 0.0));
    EXPECT_THROW(forward(m, ok, 2), std::invalid_argument);
    EXPECT_THROW(input_gradient(m, ok, -1), std::invalid_argument);
}

TEST(ModelTest, GradientMatchesFiniteDifferencesTemporal) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Model m = make_temporal_model(3, 16, 2, seed);
        const Record r = testutil::random_record(3, 16, Rng::mix(seed, 77));
        for (int c = 0; c < 2; ++c) {
            const Gradient g = input_gradient(m, r, c);
            const Tensor fd = testutil::fd_gradient(m, r, c);
            for (std::size_t i = 0; i < fd.size(); ++i) {
                EXPECT_NEAR(g.values[i], fd[i], 1e-6)
                    << "seed " << seed << " class " << c << " flat " << i;
            }
        }
    }
}

TEST(ModelTest, GradientMatchesFiniteDifferencesSpatiotemporal) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Model m = make_spatiotemporal_model(3, 16, 2, seed);
        const Record r = testutil::random_record(3, 16, Rng::mix(seed, 78));
        const Gradient g = input_gradient(m, r, 0);
        const Tensor fd = testutil::fd_gradient(m, r, 0);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            EXPECT_NEAR(g.values[i], fd[i], 1e-6) << "seed " << seed << " flat " << i;
        }
    }
}

TEST(ModelTest, ReluGradientMatchesFiniteDifferencesAwayFromKinks) {
    Model m = tiny_conv_model();
    Layer act;
    act.spec = {LayerKind::activation, 0, 0, 1, 1, ActivationKind::relu, 0};
    m.layers.insert(m.layers.begin() + 1, std::move(act));
    validate_model(m);
    // Inputs chosen so both preactivations stay well away from zero.
    const Record r = make_record("r", -1, 1, 3, {3.0, 1.0, 4.0});
    const Gradient g = input_gradient(m, r, 0);
    const Tensor fd = testutil::fd_gradient(m, r, 0);
    for (std::size_t i = 0; i < fd.size(); ++i) {
        EXPECT_NEAR(g.values[i], fd[i], 1e-6);
    }
    // y = [2*3 - 1 + 0.5, 2*1 - 4 + 0.5] = [5.5, -1.5]; relu kills the second.
    EXPECT_DOUBLE_EQ(forward(m, r, 0), 3.0 * 5.5 - 1.0);
}

TEST(ModelTest, ZeroChannelWeightsMakesChannelDead) {
    for (Architecture arch : {Architecture::temporal, Architecture::spatiotemporal}) {
        Model m = arch == Architecture::temporal ? make_temporal_model(4, 16, 2, 3)
                                                 : make_spatiotemporal_model(4, 16, 2, 3);
        zero_channel_weights(m, 1);
        const Record r = testutil::random_record(4, 16, 5);
        Record shifted = r;
        for (int t = 0; t < 16; ++t) shifted.values.at(1, t) += 10.0;
        EXPECT_DOUBLE_EQ(forward(m, r, 0), forward(m, shifted, 0)) << to_string(arch);
        const Gradient g = input_gradient(m, r, 0);
        for (int t = 0; t < 16; ++t) {
            EXPECT_EQ(g.values.at(1, t), 0.0) << to_string(arch);
        }
    }
}

TEST(ModelTest, TiedDenseWeightsMakeChannelsExchangeable) {
    Model m = make_temporal_model(4, 16, 2, 11);
    tie_channel_dense_weights(m, 0, 2);
    for (int i = 0; i < 10; ++i) {
        const Record r = testutil::random_record(4, 16, 100 + i);
        const Record s = swap_channels(r, 0, 2);
        for (int c = 0; c < 2; ++c) {
            EXPECT_NEAR(forward(m, r, c), forward(m, s, c), 1e-12);
        }
    }
}

TEST(ModelTest, PermutedHiddenUnitsComputeTheSameFunction) {
    for (Architecture arch : {Architecture::temporal, Architecture::spatiotemporal}) {
        const Model m = arch == Architecture::temporal ? make_temporal_model(3, 16, 2, 21)
                                                       : make_spatiotemporal_model(3, 16, 2, 21);
        const Model p = permute_hidden_units(m, 99);
        bool weights_differ = false;
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            if (!(m.layers[i].weights == p.layers[i].weights)) weights_differ = true;
        }
        EXPECT_TRUE(weights_differ) << "permutation should reshuffle at least one layer";
        for (int i = 0; i < 10; ++i) {
            const Record r = testutil::random_record(3, 16, 200 + i);
            const auto a = forward_logits(m, r);
            const auto b = forward_logits(p, r);
            for (std::size_t c = 0; c < a.size(); ++c) {
                EXPECT_NEAR(a[c], b[c], 1e-12) << to_string(arch);
            }
        }
    }
}

TEST(ModelIoTest, JsonRoundTripIsByteIdentical) {
    for (Architecture arch : {Architecture::temporal, Architecture::spatiotemporal}) {
        const Model m = arch == Architecture::temporal ? make_temporal_model(6, 64, 2, 42)
                                                       : make_spatiotemporal_model(6, 64, 2, 42);
        const std::string text = model_to_json(m);
        const Model back = model_from_json(text);
        EXPECT_EQ(model_to_json(back), text);
        const Record r = testutil::random_record(6, 64, 7);
        const auto a = forward_logits(m, r);
        const auto b = forward_logits(back, r);
        for (std::size_t c = 0; c < a.size(); ++c) {
            EXPECT_EQ(a[c], b[c]) << "weights must round-trip exactly";
        }
    }
}

TEST(ModelIoTest, SaveAndLoadThroughFile) {
    const Model m = make_temporal_model(3, 16, 2, 5);
    const std::string path = ::testing::TempDir() + "/model_io_test.json";
    save_model(m, path);
    const Model back = load_model(path);
    EXPECT_EQ(model_to_json(back), model_to_json(m));
    std::remove(path.c_str());
}

TEST(ModelIoTest, RejectsMalformedDocuments) {
    EXPECT_THROW(model_from_json("not json"), std::invalid_argument);
    EXPECT_THROW(model_from_json("{}"), std::invalid_argument);
    EXPECT_THROW(model_from_json(R"({"format":"other","version":1})"), std::invalid_argument);
    const Model m = make_temporal_model(3, 16, 2, 5);
    std::string text = model_to_json(m);
    const auto pos = text.find("\"version\": 1");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 12, "\"version\": 9");
    EXPECT_THROW(model_from_json(text), std::invalid_argument);
}

TEST(TrainTest, LossDecreasesAndBeatsChance) {
    const auto data = generate_synthetic([] {
        SyntheticConfig cfg;
        cfg.train_per_class = 30;
        cfg.eval_per_class = 30;
        return cfg;
    }());
    Model m = make_temporal_model(data.config.n_channels, data.config.length,
                                  data.config.n_classes, 42);
    TrainConfig cfg;
    cfg.epochs = 80;
    const TrainReport report = train_model(m, data.train.records, cfg);
    ASSERT_EQ(report.epoch_loss.size(), 80u);
    EXPECT_LT(report.epoch_loss.back(), report.epoch_loss.front());
    EXPECT_GT(accuracy(m, data.eval.records), 0.6);
}

TEST(TrainTest, SameSeedReproducesWeightsBitwise) {
    const auto data = generate_synthetic([] {
        SyntheticConfig cfg;
        cfg.train_per_class = 20;
        cfg.eval_per_class = 5;
        return cfg;
    }());
    TrainConfig cfg;
    cfg.epochs = 3;
    Model a = make_temporal_model(6, 64, 2, 42);
    Model b = make_temporal_model(6, 64, 2, 42);
    const TrainReport ra = train_model(a, data.train.records, cfg);
    const TrainReport rb = train_model(b, data.train.records, cfg);
    EXPECT_EQ(ra.epoch_loss, rb.epoch_loss);
    EXPECT_EQ(model_to_json(a), model_to_json(b));
}
