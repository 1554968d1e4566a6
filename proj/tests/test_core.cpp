#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nudgeda/field.hpp"
#include "nudgeda/rng.hpp"

using namespace nudgeda;

TEST_CASE("uniform grid construction") {
    const Grid1D g = make_uniform_grid(0.0, 2.0 * M_PI, 800, GridLayout::PeriodicCells);
    CHECK(g.dx == doctest::Approx(2.0 * M_PI / 800).epsilon(1e-15));
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(799) == doctest::Approx(2.0 * M_PI - g.dx));

    const Grid1D r = make_uniform_grid(0.0, 1.0, 300, GridLayout::PeriodicCells);
    CHECK(r.dx == doctest::Approx(1.0 / 300).epsilon(1e-15));

    const Grid1D c = make_uniform_grid(0.0, 1.0, 11, GridLayout::EndpointInclusive);
    CHECK(c.dx == doctest::Approx(0.1));
    CHECK(c.node(10) == doctest::Approx(1.0));

    CHECK_THROWS_WITH_AS(make_uniform_grid(1.0, 0.0, 100, GridLayout::PeriodicCells),
                         doctest::Contains("invalid-range"), Error);
    CHECK_THROWS_WITH_AS(make_uniform_grid(0.0, 1.0, 2, GridLayout::EndpointInclusive),
                         doctest::Contains("too-coarse"), Error);
}

TEST_CASE("norms: nodal quadrature and relative mode") {
    const Grid1D g = make_uniform_grid(0.0, 1.0, 100, GridLayout::PeriodicCells);
    Field one(AnyGrid{g}, 1);
    for (auto& v : one.values) v = 1.0;
    CHECK(norm(one, NormKind::L1) == doctest::Approx(1.0).epsilon(1e-14));

    // relative error of a field against itself is zero
    CHECK(norm(one, NormKind::L1, &one) == 0.0);

    const Grid1D gs = make_uniform_grid(0.0, 2.0 * M_PI, 800, GridLayout::PeriodicCells);
    const Field s = field_from_function(gs, {[](double x) { return std::sin(x); }});
    CHECK(norm(s, NormKind::L2) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-3));

    Field zero(AnyGrid{g}, 1);
    CHECK(norm(zero, NormKind::L1) == 0.0);
    CHECK_THROWS_WITH_AS(norm(one, NormKind::L1, &zero), doctest::Contains("division-by-zero"),
                         Error);

    const Grid1D other = make_uniform_grid(0.0, 1.0, 64, GridLayout::PeriodicCells);
    Field mism(AnyGrid{other}, 1);
    CHECK_THROWS_WITH_AS(norm(one, NormKind::L1, &mism), doctest::Contains("grid-mismatch"),
                         Error);
}

TEST_CASE("norm is zero only for the zero field, triangle inequality holds") {
    const Grid1D g = make_uniform_grid(0.0, 1.0, 64, GridLayout::PeriodicCells);
    const CounterRng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        Field f(AnyGrid{g}, 2), h(AnyGrid{g}, 2);
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            f.values[i] = rng.normal(trial * 1000 + i);
            h.values[i] = rng.normal(500000 + trial * 1000 + i);
        }
        const Field sum = lincomb(1.0, f, 1.0, h);
        for (auto kind : {NormKind::L1, NormKind::L2, NormKind::Linf})
            CHECK(norm(sum, kind) <= norm(f, kind) + norm(h, kind) + 1e-12);
        CHECK(norm(f, NormKind::L1) > 0.0);
    }
}

TEST_CASE("snapshot buffer: eviction and monotone times") {
    const Grid1D g = make_uniform_grid(0.0, 1.0, 8, GridLayout::PeriodicCells);
    Field f(AnyGrid{g}, 1);

    SnapshotBuffer buf(2);
    buf.push(0.0, f);
    buf.push(1.0, f);
    buf.push(2.0, f);
    CHECK(buf.size() == 2);
    CHECK(buf.time(0) == 1.0);
    CHECK(buf.time(1) == 2.0);

    CHECK_THROWS_WITH_AS(buf.push(2.0, f), doctest::Contains("non-monotone-time"), Error);

    SnapshotBuffer b3(3);
    for (int k = 0; k < 10; ++k) {
        b3.push(0.1 * k, f);
        CHECK(b3.size() <= 3);
        for (int i = 1; i < b3.size(); ++i) CHECK(b3.time(i) > b3.time(i - 1));
    }
}

TEST_CASE("counter rng: determinism and normality sanity") {
    const CounterRng a(42), b(42), c(43);
    CHECK(a.normal(7) == b.normal(7));
    CHECK(a.normal(7) != c.normal(7));
    CHECK(a.split(1).normal(0) != a.split(2).normal(0));

    double mean = 0.0, var = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) mean += a.normal(i);
    mean /= n;
    for (int i = 0; i < n; ++i) {
        const double d = a.normal(i) - mean;
        var += d * d;
    }
    var /= n;
    CHECK(std::abs(mean) < 0.03);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}
