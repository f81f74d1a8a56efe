#include <doctest.h>

#include <mcunas/common.hpp>
#include <mcunas/graph.hpp>
#include <mcunas/tensor.hpp>

using namespace mcunas;

TEST_CASE("rng streams are deterministic and independent")
{
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i)
        CHECK(a.next_u64() == b.next_u64());

    Rng c(42);
    Rng d1 = c.derive("alpha"), d2 = c.derive("beta");
    CHECK(d1.next_u64() != d2.next_u64());
    CHECK(c.derive("alpha", 3).seed() == Rng(42).derive("alpha", 3).seed());
}

TEST_CASE("rng uniform_int covers inclusive bounds uniformly enough")
{
    Rng r(7);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 5000; ++i)
        counts[static_cast<size_t>(r.uniform_int(0, 4))]++;
    for (int c : counts)
        CHECK(c > 800);
}

TEST_CASE("rng normal has sane moments")
{
    Rng r(11);
    double s = 0, s2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / n) < 0.03);
    CHECK(std::abs(s2 / n - 1.0) < 0.05);
}

TEST_CASE("tensor shape arithmetic and indexing")
{
    Tensor<float> t({2, 3, 4});
    CHECK(t.size() == 24);
    t(1, 2, 3) = 5.0f;
    CHECK(t.at(23) == 5.0f);
    CHECK(t.nonzeros() == 1);
    CHECK_THROWS_AS(Tensor<float>({0, 3}), ShapeError);

    Tensor<float> v({3}, {-1.f, 0.f, 2.f});
    CHECK(v(0) == -1.f);
    CHECK(v.nonzeros() == 2);
}

TEST_CASE("graph structural validation")
{
    ArchGraph g;
    const int a = g.add_node("a", {LayerKind::ReLU}, {kGraphInput});
    const int b = g.add_node("b", {LayerKind::ReLU}, {a});
    CHECK(g.output_node() == b);
    CHECK(g.consumers(a) == std::vector<int>{b});

    ArchGraph two_sinks;
    two_sinks.add_node("a", {LayerKind::ReLU}, {kGraphInput});
    two_sinks.add_node("b", {LayerKind::ReLU}, {kGraphInput});
    CHECK_THROWS_AS(two_sinks.check_structure(), GraphError);

    ArchGraph g2;
    CHECK_THROWS_AS(g2.add_node("x", {LayerKind::ReLU}, {3}), GraphError);
}

TEST_CASE("graph hash is stable and wiring-sensitive")
{
    auto make = [](int k) {
        ArchGraph g;
        LayerSpec conv{LayerKind::Conv2D, k, 4, Padding::Same};
        int c = g.add_node("c", conv, {kGraphInput});
        g.add_node("fc", {LayerKind::FullyConnected, 0, 2}, {c});
        return g;
    };
    CHECK(make(3).structure_hash() == make(3).structure_hash());
    CHECK(make(3).structure_hash() != make(5).structure_hash());
}
