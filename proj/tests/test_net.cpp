#include <doctest.h>

#include <mcunas/net/fold.hpp>
#include <mcunas/net/quantize.hpp>
#include <mcunas/net/train.hpp>

#include "oracles.hpp"

using namespace mcunas;
using namespace mcunas::net;

namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0)
{
    Tensor<double> t(std::move(shape));
    for (int64_t i = 0; i < t.size(); ++i)
        t.at(i) = rng.normal() * scale;
    return t;
}

/// tiny labelled batch for loss-based gradient checks
std::vector<int> cycle_labels(int n, int k)
{
    std::vector<int> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<size_t>(i)] = i % k;
    return v;
}

double graph_fd_check(const ArchGraph& graph, const Shape& in_shape, uint64_t seed,
                      int batch = 2)
{
    Rng rng(seed);
    WeightStore<double> store = init_weights<double>(graph, in_shape, rng.derive("init"));
    Shape bshape = {batch, in_shape[0], in_shape[1], in_shape[2]};
    Tensor<double> x = random_tensor(bshape, rng);
    ForwardCache<double> cache;
    cache.training = true;
    Tensor<double> logits = forward(graph, store, x, &cache);
    const std::vector<int> labels = cycle_labels(batch, logits.extent(1));
    Tensor<double> dlogits;
    softmax_cross_entropy(logits, labels, &dlogits);
    WeightStore<double> grads = backward(graph, store, cache, dlogits);

    auto loss = [&]() {
        ForwardCache<double> c;
        c.training = true;
        Tensor<double> l = forward(graph, store, x, &c);
        return static_cast<double>(softmax_cross_entropy(l, labels));
    };
    return oracles::finite_difference_check(store, grads, loss).max_rel_err;
}

} // namespace

TEST_CASE("relu maps [-1,0,2] to [0,0,2]")
{
    Tensor<float> x({1, 3}, {-1.f, 0.f, 2.f});
    LayerSpec relu{LayerKind::ReLU};
    Tensor<float> y = apply_layer<float>(relu, nullptr, {&x});
    CHECK(y(0, 0) == 0.f);
    CHECK(y(0, 1) == 0.f);
    CHECK(y(0, 2) == 2.f);
}

TEST_CASE("conv shape arithmetic matches the loop-nest reference")
{
    Rng rng(3);
    Tensor<double> x = random_tensor({2, 1, 28, 28}, rng);
    Tensor<double> w = random_tensor({8, 1, 3, 3}, rng);
    Tensor<double> b = random_tensor({8}, rng);

    Tensor<double> y = conv2d_forward(x, w, b, Padding::Same);
    CHECK(y.shape() == Shape{2, 8, 28, 28});

    Tensor<double> ref = oracles::conv2d_reference(x, w, b, Padding::Same);
    CHECK((y.array() - ref.array()).abs().maxCoeff() < 1e-12);

    Tensor<double> yv = conv2d_forward(x, w, b, Padding::Valid);
    CHECK(yv.shape() == Shape{2, 8, 26, 26});
    Tensor<double> refv = oracles::conv2d_reference(x, w, b, Padding::Valid);
    CHECK((yv.array() - refv.array()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("even kernels use trailing same-padding and match the reference")
{
    Rng rng(5);
    Tensor<double> x = random_tensor({1, 3, 9, 9}, rng);
    Tensor<double> w = random_tensor({4, 3, 2, 2}, rng);
    Tensor<double> b = random_tensor({4}, rng);
    Tensor<double> y = conv2d_forward(x, w, b, Padding::Same);
    Tensor<double> ref = oracles::conv2d_reference(x, w, b, Padding::Same);
    CHECK(y.shape() == Shape{1, 4, 9, 9});
    CHECK((y.array() - ref.array()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("separable conv with all-zero weights yields all-zero output")
{
    ArchGraph g;
    g.add_node("sep", {LayerKind::SeparableConv2D, 3, 5, Padding::Same}, {kGraphInput});
    g.add_node("fc", {LayerKind::FullyConnected, 0, 2}, {0});
    Rng rng(4);
    WeightStore<float> store = init_weights<float>(g, {2, 6, 6}, rng);
    store.at(0).get("dw").array().setZero();
    store.at(0).get("pw").array().setZero();
    Tensor<float> x({1, 2, 6, 6}, 1.5f);
    ForwardCache<float> cache;
    forward(g, store, x, &cache);
    CHECK(cache.outputs[0].array().abs().maxCoeff() == 0.f);
}

TEST_CASE("downsampled conv reduces channels then convolves")
{
    ArchGraph g;
    LayerSpec sp{LayerKind::DownsampledConv2D, 3, 6, Padding::Same};
    sp.downsample_fraction = 0.4; // ceil(0.4 * 10) = 4 intermediate channels
    g.add_node("dc", sp, {kGraphInput});
    g.add_node("fc", {LayerKind::FullyConnected, 0, 2}, {0});
    Rng rng(9);
    WeightStore<float> store = init_weights<float>(g, {10, 7, 7}, rng);
    CHECK(store.at(0).get("rw").shape() == Shape{4, 10});
    CHECK(store.at(0).get("w").shape() == Shape{6, 4, 3, 3});
    Tensor<float> x({1, 10, 7, 7}, 0.1f);
    ForwardCache<float> cache;
    forward(g, store, x, &cache);
    CHECK(cache.outputs[0].shape() == Shape{1, 6, 7, 7});
    CHECK(cache.aux.at(0).shape() == Shape{1, 4, 7, 7});
}

TEST_CASE("single FC with identity-like weights selects the weight column")
{
    ArchGraph g;
    g.add_node("fc", {LayerKind::FullyConnected, 0, 3}, {kGraphInput});
    WeightStore<float> store;
    NodeWeights<float>& nw = store.by_node[0];
    Tensor<float> w({3, 4});
    for (int o = 0; o < 3; ++o)
        for (int i = 0; i < 4; ++i)
            w(o, i) = static_cast<float>(10 * o + i);
    nw.add("w", w);
    nw.add("b", Tensor<float>({3}));
    Tensor<float> x({1, 1, 1, 4}); // one-hot on feature 2
    x.at(2) = 1.f;
    Tensor<float> y = forward(g, store, x);
    CHECK(y(0, 0) == w(0, 2));
    CHECK(y(0, 1) == w(1, 2));
    CHECK(y(0, 2) == w(2, 2));
}

TEST_CASE("shape mismatch raises a structured error naming the node")
{
    ArchGraph g;
    g.add_node("conv-a", {LayerKind::Conv2D, 5, 4, Padding::Valid}, {kGraphInput});
    g.add_node("fc", {LayerKind::FullyConnected, 0, 2}, {0});
    Rng rng(1);
    WeightStore<float> store = init_weights<float>(g, {1, 8, 8}, rng);
    Tensor<float> tiny({1, 1, 3, 3}, 0.5f); // smaller than the 5x5 kernel
    try {
        forward(g, store, tiny);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("conv-a") != std::string::npos);
    }
}

TEST_CASE("merge sum is commutative and zero-pads the narrower operand")
{
    LayerSpec sum{LayerKind::MergeSum};
    Tensor<float> a({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor<float> b({2, 2}, {10, 20, 30, 40});
    Tensor<float> ab = apply_layer<float>(sum, nullptr, {&a, &b});
    Tensor<float> ba = apply_layer<float>(sum, nullptr, {&b, &a});
    CHECK(ab.shape() == Shape{2, 3});
    CHECK(ab(0, 0) == 11.f);
    CHECK(ab(0, 2) == 3.f); // padded slot keeps the wider operand's value
    CHECK((ab.array() == ba.array()).all());
}

TEST_CASE("merge concat stacks features in operand order")
{
    LayerSpec cat{LayerKind::MergeConcat};
    Tensor<float> a({1, 2}, {1, 2});
    Tensor<float> b({1, 3}, {3, 4, 5});
    Tensor<float> y = apply_layer<float>(cat, nullptr, {&a, &b});
    CHECK(y.shape() == Shape{1, 5});
    for (int i = 0; i < 5; ++i)
        CHECK(y(0, i) == static_cast<float>(i + 1));
}

TEST_CASE("gradients match central finite differences per layer type")
{
    // each graph ends in an FC head so the loss reaches every weight
    auto chain = [](std::vector<LayerSpec> specs) {
        ArchGraph g;
        int prev = kGraphInput;
        int i = 0;
        for (const LayerSpec& sp : specs)
            prev = g.add_node("n" + std::to_string(i++), sp, {prev});
        g.add_node("head", {LayerKind::FullyConnected, 0, 3}, {prev});
        return g;
    };

    SUBCASE("conv2d")
    {
        CHECK(graph_fd_check(chain({{LayerKind::Conv2D, 3, 4, Padding::Same}}), {2, 6, 6}, 21)
              < 1e-5);
    }
    SUBCASE("conv2d valid")
    {
        CHECK(graph_fd_check(chain({{LayerKind::Conv2D, 3, 4, Padding::Valid}}), {2, 6, 6}, 22)
              < 1e-5);
    }
    SUBCASE("separable")
    {
        CHECK(graph_fd_check(chain({{LayerKind::SeparableConv2D, 3, 4, Padding::Same}}),
                             {3, 6, 6}, 23)
              < 1e-5);
    }
    SUBCASE("downsampled")
    {
        LayerSpec sp{LayerKind::DownsampledConv2D, 3, 4, Padding::Same};
        sp.downsample_fraction = 0.5;
        CHECK(graph_fd_check(chain({sp}), {4, 6, 6}, 24) < 1e-5);
    }
    SUBCASE("batchnorm after conv")
    {
        CHECK(graph_fd_check(chain({{LayerKind::Conv2D, 3, 3, Padding::Same},
                                    {LayerKind::BatchNorm}}),
                             {2, 5, 5}, 25)
              < 1e-5);
    }
    SUBCASE("relu and maxpool")
    {
        LayerSpec pool{LayerKind::MaxPool};
        pool.pool = 2;
        CHECK(graph_fd_check(chain({{LayerKind::Conv2D, 3, 3, Padding::Same},
                                    {LayerKind::ReLU}, pool}),
                             {2, 6, 6}, 26)
              < 1e-5);
    }
    SUBCASE("fully connected stack")
    {
        CHECK(graph_fd_check(chain({{LayerKind::FullyConnected, 0, 8}, {LayerKind::ReLU}}),
                             {1, 4, 4}, 27)
              < 1e-5);
    }
    SUBCASE("merge sum across branches")
    {
        ArchGraph g;
        int a = g.add_node("a", {LayerKind::Conv2D, 3, 4, Padding::Same}, {kGraphInput});
        int b = g.add_node("b", {LayerKind::Conv2D, 3, 2, Padding::Same}, {kGraphInput});
        int m = g.add_node("m", {LayerKind::MergeSum}, {a, b});
        g.add_node("head", {LayerKind::FullyConnected, 0, 3}, {m});
        CHECK(graph_fd_check(g, {2, 5, 5}, 28) < 1e-5);
    }
    SUBCASE("merge concat across branches")
    {
        ArchGraph g;
        int a = g.add_node("a", {LayerKind::FullyConnected, 0, 5}, {kGraphInput});
        int b = g.add_node("b", {LayerKind::FullyConnected, 0, 3}, {kGraphInput});
        int m = g.add_node("m", {LayerKind::MergeConcat}, {a, b});
        g.add_node("head", {LayerKind::FullyConnected, 0, 3}, {m});
        CHECK(graph_fd_check(g, {1, 4, 4}, 29) < 1e-5);
    }
    SUBCASE("input downsample mid-graph")
    {
        ArchGraph g;
        int c = g.add_node("c", {LayerKind::Conv2D, 3, 3, Padding::Same}, {kGraphInput});
        LayerSpec ds{LayerKind::InputDownsample};
        ds.pool = 2;
        ds.depth_pool = true;
        int d = g.add_node("d", ds, {c});
        g.add_node("head", {LayerKind::FullyConnected, 0, 3}, {d});
        CHECK(graph_fd_check(g, {2, 6, 6}, 30) < 1e-5);
    }
}

TEST_CASE("gradient of half squared norm is the weight itself")
{
    // d/dw (0.5 ||w x||^2) with x = e_j reduces to the selected column
    ArchGraph g;
    g.add_node("fc", {LayerKind::FullyConnected, 0, 4}, {kGraphInput});
    Rng rng(31);
    WeightStore<double> store = init_weights<double>(g, {1, 1, 4}, rng);
    Tensor<double> x({1, 1, 1, 4});
    x.at(1) = 1.0;
    ForwardCache<double> cache;
    Tensor<double> y = forward(g, store, x, &cache);
    Tensor<double> dy(y.shape());
    dy.array() = y.array(); // d(0.5||y||^2)/dy = y
    WeightStore<double> grads = backward(g, store, cache, dy);
    const Tensor<double>& w = store.at(0).get("w");
    const Tensor<double>& gw = grads.at(0).get("w");
    for (int o = 0; o < 4; ++o) {
        CHECK(gw(o, 1) == doctest::Approx(w(o, 1)).epsilon(1e-12));
        CHECK(gw(o, 0) == 0.0);
    }
}

TEST_CASE("relu gradient at negative input is zero")
{
    ArchGraph g;
    g.add_node("fc", {LayerKind::FullyConnected, 0, 2}, {kGraphInput});
    g.add_node("r", {LayerKind::ReLU}, {0});
    g.add_node("head", {LayerKind::FullyConnected, 0, 2}, {1});
    WeightStore<double> store;
    store.by_node[0].add("w", Tensor<double>({2, 2}, {-1, 0, 0, 1}));
    store.by_node[0].add("b", Tensor<double>({2}));
    store.by_node[2].add("w", Tensor<double>({2, 2}, {1, 1, 1, 1}));
    store.by_node[2].add("b", Tensor<double>({2}));
    Tensor<double> x({1, 1, 1, 2}, {1, 1}); // fc outputs (-1, 1): first unit negative
    ForwardCache<double> cache;
    Tensor<double> y = forward(g, store, x, &cache);
    Tensor<double> dy(y.shape(), 1.0);
    WeightStore<double> grads = backward(g, store, cache, dy);
    CHECK(grads.at(0).get("w")(0, 0) == 0.0); // blocked by the dead relu unit
    CHECK(grads.at(0).get("w")(1, 1) != 0.0);
}

TEST_CASE("forward is pure")
{
    ArchGraph g;
    g.add_node("c", {LayerKind::Conv2D, 3, 4, Padding::Same}, {kGraphInput});
    g.add_node("fc", {LayerKind::FullyConnected, 0, 3}, {0});
    Rng rng(8);
    WeightStore<float> store = init_weights<float>(g, {1, 6, 6}, rng);
    Rng xr(9);
    Tensor<float> x({2, 1, 6, 6});
    for (int64_t i = 0; i < x.size(); ++i)
        x.at(i) = static_cast<float>(xr.normal());
    Tensor<float> y1 = forward(g, store, x);
    Tensor<float> y2 = forward(g, store, x);
    CHECK((y1.array() == y2.array()).all());
}

namespace {

/// two separable gaussian blobs in a 2x1x1 "image"
LabeledData blobs(int n, uint64_t seed, double gap = 6.0)
{
    Rng rng(seed);
    LabeledData d;
    d.num_classes = 2;
    d.x = Tensor<float>({n, 2, 1, 1});
    d.labels.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int label = i % 2;
        d.labels[static_cast<size_t>(i)] = label;
        const double cx = label == 0 ? -gap / 2 : gap / 2;
        d.x(i, 0, 0, 0) = static_cast<float>(cx + rng.normal() * 0.4);
        d.x(i, 1, 0, 0) = static_cast<float>(rng.normal() * 0.4);
    }
    return d;
}

/// margin certificate: classes separated along the first coordinate
bool is_linearly_separable(const LabeledData& d)
{
    float max0 = -1e30f, min1 = 1e30f;
    for (int i = 0; i < d.count(); ++i) {
        const float v = d.x(i, 0, 0, 0);
        if (d.labels[static_cast<size_t>(i)] == 0)
            max0 = std::max(max0, v);
        else
            min1 = std::min(min1, v);
    }
    return max0 < min1;
}

} // namespace

TEST_CASE("linear model reaches accuracy 1.0 on separable blobs")
{
    LabeledData tr = blobs(128, 100);
    LabeledData va = blobs(64, 101);
    REQUIRE(is_linearly_separable(tr));
    REQUIRE(is_linearly_separable(va));

    ArchGraph g;
    g.add_node("fc", {LayerKind::FullyConnected, 0, 2}, {kGraphInput});
    Rng rng(5);
    WeightStore<float> store = init_weights<float>(g, {2, 1, 1}, rng);
    TrainHyperparams hp;
    hp.epochs = 30;
    hp.batch_size = 16;
    hp.learning_rate = 0.05;
    hp.seed = 7;
    TrainResult res = train(g, store, tr, va, hp);
    CHECK(res.ok);
    CHECK(res.val_accuracy == 1.0);
}

TEST_CASE("zero epochs returns initial weights unchanged")
{
    ArchGraph g;
    g.add_node("fc", {LayerKind::FullyConnected, 0, 2}, {kGraphInput});
    Rng rng(5);
    WeightStore<float> store = init_weights<float>(g, {2, 1, 1}, rng);
    WeightStore<float> before = store;
    LabeledData tr = blobs(32, 1);
    TrainHyperparams hp;
    hp.epochs = 0;
    train(g, store, tr, tr, hp);
    CHECK((store.at(0).get("w").array() == before.at(0).get("w").array()).all());
}

TEST_CASE("training is bit-deterministic for a fixed seed")
{
    LabeledData tr = blobs(64, 2);
    LabeledData va = blobs(32, 3);
    auto run = [&]() {
        ArchGraph g;
        g.add_node("c", {LayerKind::Conv2D, 1, 3, Padding::Same}, {kGraphInput});
        g.add_node("r", {LayerKind::ReLU}, {0});
        g.add_node("fc", {LayerKind::FullyConnected, 0, 2}, {1});
        WeightStore<float> store = init_weights<float>(g, {2, 1, 1}, Rng(77));
        TrainHyperparams hp;
        hp.epochs = 5;
        hp.seed = 13;
        TrainResult r = train(g, store, tr, va, hp);
        return std::make_pair(r.val_accuracy, store.at(2).get("w")(0, 0));
    };
    auto [a1, w1] = run();
    auto [a2, w2] = run();
    CHECK(a1 == a2);
    CHECK(w1 == w2);
}

TEST_CASE("quantization obeys the symmetric linear rule")
{
    SUBCASE("all-zero tensor")
    {
        Tensor<float> z({4});
        QuantizedTensor q = quantize(z);
        CHECK(q.scale == 1.0);
        CHECK(q.nonzeros() == 0);
    }
    SUBCASE("max 1.27 maps to 127 at scale 0.01")
    {
        Tensor<float> t({3}, {1.27f, -0.005f, 0.64f});
        QuantizedTensor q = quantize(t);
        CHECK(q.scale == doctest::Approx(0.01).epsilon(1e-6));
        CHECK(q.values[0] == 127);
    }
    SUBCASE("round trip error bounded by half the scale")
    {
        Rng rng(55);
        for (int rep = 0; rep < 50; ++rep) {
            Tensor<double> t({64});
            for (int64_t i = 0; i < t.size(); ++i)
                t.at(i) = rng.normal() * rng.uniform(0.01, 10.0);
            QuantizedTensor q = quantize(t);
            Tensor<double> back = dequantize<double>(q);
            CHECK((t.array() - back.array()).abs().maxCoeff() <= q.scale / 2 + 1e-12);
        }
    }
}

TEST_CASE("batchnorm folding preserves inference outputs")
{
    ArchGraph g;
    g.add_node("c", {LayerKind::Conv2D, 3, 4, Padding::Same}, {kGraphInput});
    g.add_node("bn", {LayerKind::BatchNorm}, {0});
    g.add_node("r", {LayerKind::ReLU}, {1});
    g.add_node("fc", {LayerKind::FullyConnected, 0, 3}, {2});
    Rng rng(61);
    WeightStore<double> store = init_weights<double>(g, {2, 5, 5}, rng);
    // make the running stats non-trivial
    NodeWeights<double>& bn = store.at(1);
    for (int c = 0; c < 4; ++c) {
        bn.get("rmean")(c) = 0.1 * c;
        bn.get("rvar")(c) = 0.5 + 0.2 * c;
        bn.get("gamma")(c) = 1.0 + 0.1 * c;
        bn.get("beta")(c) = -0.05 * c;
    }
    Tensor<double> x({2, 2, 5, 5});
    Rng xr(62);
    for (int64_t i = 0; i < x.size(); ++i)
        x.at(i) = xr.normal();

    Tensor<double> y_ref = forward(g, store, x);
    FoldedNet<double> folded = fold_batchnorm(g, store);
    CHECK(folded.graph.size() == g.size() - 1);
    Tensor<double> y_fold = forward(folded.graph, folded.store, x);
    CHECK((y_ref.array() - y_fold.array()).abs().maxCoeff() < 1e-10);
}
