#include "doctest.h"

#include "ipns/topology.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace ipns;
using spline::KnotVector;
using spline::Patch;

namespace {

Patch bilinear_patch(int id, std::array<double, 2> x_range,
                     std::array<double, 2> y_range)
{
    std::vector<KnotVector> kv{KnotVector({-1, -1, 1, 1}, 1),
                               KnotVector({-1, -1, 1, 1}, 1)};
    std::vector<double> cps;
    for (double x : x_range) {
        for (double y : y_range) {
            cps.push_back(x);
            cps.push_back(y);
        }
    }
    return Patch(id, 2, 2, kv, cps, std::vector<double>(4, 1.0));
}

Patch quarter_annulus(int id, double r0, double r1)
{
    std::vector<KnotVector> kv{KnotVector({-1, -1, -1, 1, 1, 1}, 2),
                               KnotVector({-1, -1, 1, 1}, 1)};
    const double arc[3][2] = {{1, 0}, {1, 1}, {0, 1}};
    const double s2 = std::sqrt(2.0) / 2.0;
    const double arc_w[3] = {1.0, s2, 1.0};
    std::vector<double> cps;
    std::vector<double> w;
    for (int i = 0; i < 3; ++i) {
        for (double r : {r0, r1}) {
            cps.push_back(arc[i][0] * r);
            cps.push_back(arc[i][1] * r);
            w.push_back(arc_w[i]);
        }
    }
    return Patch(id, 2, 2, kv, cps, w);
}

// Rectangle that is quadratic along the second axis, so its vertical
// edges carry a movable interior control point.
Patch quad_y_patch(int id, std::array<double, 2> x_range,
                   std::array<double, 2> y_range, double bump = 0.0)
{
    std::vector<KnotVector> kv{KnotVector({-1, -1, 1, 1}, 1),
                               KnotVector({-1, -1, -1, 1, 1, 1}, 2)};
    std::vector<double> cps;
    for (int ix = 0; ix < 2; ++ix) {
        const double x = x_range[ix];
        const double ymid = 0.5 * (y_range[0] + y_range[1]);
        const double ys[3] = {y_range[0], ymid, y_range[1]};
        for (int iy = 0; iy < 3; ++iy) {
            cps.push_back(x + ((ix == 0 && iy == 1) ? bump : 0.0));
            cps.push_back(ys[iy]);
        }
    }
    return Patch(id, 2, 2, kv, cps, std::vector<double>(6, 1.0));
}

model::MultiPatchModel two_squares()
{
    return model::MultiPatchModel(
        {bilinear_patch(0, {0, 1}, {0, 1}), bilinear_patch(1, {1, 2}, {0, 1})},
        {});
}

// L-shaped three-patch layout with a triple corner at (1,1).
model::MultiPatchModel l_three_patches(
    std::vector<model::BoundaryRecord> bcs = {})
{
    return model::MultiPatchModel({bilinear_patch(1, {0, 1}, {0, 1}),
                                   bilinear_patch(2, {1, 2}, {0, 1}),
                                   bilinear_patch(3, {1, 2}, {1, 2})},
                                  std::move(bcs));
}

const topology::InterfaceEntity& find_entity(const topology::PatchTopology& t,
                                             std::vector<int> mi, int q)
{
    for (const auto& e : t.entities()) {
        if (e.multi_index == mi && e.q == q) {
            return e;
        }
    }
    REQUIRE(false);
    return t.entities().front();
}

}  // namespace

TEST_CASE("two squares: one shared edge plus subordinate endpoints")
{
    const auto topo = topology::detect_interfaces(two_squares());
    REQUIRE(topo.entities().size() == 3);
    int n_edges = 0;
    int n_sub = 0;
    for (const auto& e : topo.entities()) {
        CHECK(e.multi_index == std::vector<int>{0, 1});
        if (e.q == 1) {
            ++n_edges;
            CHECK(!e.subordinate);
        } else {
            CHECK(e.q == 0);
            CHECK(e.subordinate);
            ++n_sub;
        }
    }
    CHECK(n_edges == 1);
    CHECK(n_sub == 2);

    const auto j0 = topo.multi_index_set(0);
    REQUIRE(j0.size() == 1);
    CHECK(j0[0] == std::vector<int>{0, 1});

    // Shared edge localizations: facet x1+ of patch 0, x1- of patch 1.
    const auto& edge = find_entity(topo, {0, 1}, 1);
    CHECK(edge.localization(0).subfacet.fixed_axes == std::vector<int>{0});
    CHECK(edge.localization(0).subfacet.fixed_signs == std::vector<double>{1.0});
    CHECK(edge.localization(1).subfacet.fixed_signs ==
          std::vector<double>{-1.0});
}

TEST_CASE("three-patch corner entity and multi-index sets")
{
    const auto m = l_three_patches();
    const auto topo = topology::detect_interfaces(m);
    const auto& corner = find_entity(topo, {1, 2, 3}, 0);
    CHECK(!corner.subordinate);
    CHECK(!corner.on_dirichlet);
    // All members embed the corner to the physical point (1, 1).
    for (int pid : {1, 2, 3}) {
        const auto x = corner.embed(pid, std::span<const double>{});
        const auto f =
            m.patch(pid).eval(std::span<const double>(x.data(), 2));
        CHECK(f[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f[1] == doctest::Approx(1.0).epsilon(1e-12));
    }

    CHECK(topo.multi_index_set(1) ==
          std::vector<std::vector<int>>{{1, 2}, {1, 2, 3}});
    CHECK(topo.multi_index_set(2) ==
          std::vector<std::vector<int>>{{1, 2}, {1, 2, 3}, {2, 3}});
    CHECK(topo.multi_index_set(3) ==
          std::vector<std::vector<int>>{{1, 2, 3}, {2, 3}});
}

TEST_CASE("entities on the Dirichlet boundary are excluded from J sets")
{
    // Top facet of patch 1 is Dirichlet; the triple corner (1,1) lies
    // on it, so only the open interfaces remain.
    const auto topo = topology::detect_interfaces(l_three_patches(
        {{1, model::parse_facet("x2+", 2), model::BoundaryType::Dirichlet,
          0.0}}));
    const auto& corner = find_entity(topo, {1, 2, 3}, 0);
    CHECK(corner.on_dirichlet);
    CHECK(topo.multi_index_set(1) == std::vector<std::vector<int>>{{1, 2}});
    CHECK(topo.multi_index_set(3) == std::vector<std::vector<int>>{{2, 3}});
}

TEST_CASE("reversed edge parametrization yields a sign flip")
{
    model::MultiPatchModel m(
        {bilinear_patch(0, {0, 1}, {0, 1}), bilinear_patch(1, {1, 2}, {1, 0})},
        {});
    const auto topo = topology::detect_interfaces(m);
    const auto& edge = find_entity(topo, {0, 1}, 1);
    const auto om = topology::facet_correspondence(edge, 1);
    CHECK(om.src[0] == 0);
    CHECK(om.sign[0] == -1.0);
    // Embeddings agree pointwise across the interface.
    for (double s : {-0.7, 0.1, 0.9}) {
        const auto xa = edge.embed(0, std::span<const double>(&s, 1));
        const auto xb = edge.embed(1, std::span<const double>(&s, 1));
        const auto fa = m.patch(0).eval(std::span<const double>(xa.data(), 2));
        const auto fb = m.patch(1).eval(std::span<const double>(xb.data(), 2));
        CHECK(fa[0] == doctest::Approx(fb[0]).epsilon(1e-13));
        CHECK(fa[1] == doctest::Approx(fb[1]).epsilon(1e-13));
    }
}

TEST_CASE("permuted axes on a 3D face are resolved")
{
    std::vector<KnotVector> kv3(3, KnotVector({-1, -1, 1, 1}, 1));
    auto cube = [&](int id, auto point_of) {
        std::vector<double> cps;
        for (int i0 = 0; i0 < 2; ++i0) {
            for (int i1 = 0; i1 < 2; ++i1) {
                for (int i2 = 0; i2 < 2; ++i2) {
                    const auto p = point_of(i0, i1, i2);
                    cps.insert(cps.end(), p.begin(), p.end());
                }
            }
        }
        return Patch(id, 3, 3, kv3, cps, std::vector<double>(8, 1.0));
    };
    // Patch 0: identity axes on [0,1]^3. Patch 1: [1,2]x[0,1]x[0,1]
    // with local axes mapped to (z, x, y).
    auto a = cube(0, [](int i0, int i1, int i2) {
        return std::array<double, 3>{1.0 * i0, 1.0 * i1, 1.0 * i2};
    });
    auto b = cube(1, [](int i0, int i1, int i2) {
        return std::array<double, 3>{1.0 + i1, 1.0 * i2, 1.0 * i0};
    });
    model::MultiPatchModel m({std::move(a), std::move(b)}, {});
    const auto topo = topology::detect_interfaces(m);
    const auto& face = find_entity(topo, {0, 1}, 2);
    CHECK(!face.subordinate);
    // Shared face: x1+ on patch 0, x2- on patch 1.
    CHECK(face.localization(1).subfacet.fixed_axes == std::vector<int>{1});
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const std::array<double, 2> s{dist(rng), dist(rng)};
        const auto xa = face.embed(0, s);
        const auto xb = face.embed(1, s);
        const auto fa = m.patch(0).eval(std::span<const double>(xa.data(), 3));
        const auto fb = m.patch(1).eval(std::span<const double>(xb.data(), 3));
        for (int k = 0; k < 3; ++k) {
            CHECK(fa[k] == doctest::Approx(fb[k]).epsilon(1e-13));
        }
    }
    // Full sub-entity inventory of two conforming cubes: 1 face, 4
    // subordinate edges, 4 subordinate corners.
    CHECK(topo.entities().size() == 9);
    for (const auto& e : topo.entities()) {
        CHECK(e.subordinate == (e.q < 2));
    }
}

TEST_CASE("curved conforming interface passes a tight conformity check")
{
    model::MultiPatchModel m(
        {quarter_annulus(0, 1.0, 2.0), quarter_annulus(1, 2.0, 3.0)}, {});
    const auto topo = topology::detect_interfaces(m);
    const auto& edge = find_entity(topo, {0, 1}, 1);
    const auto rep = topology::conformity_check(m, edge, 80, 1e-10);
    CHECK(rep.pass);
    CHECK(rep.max_point_mismatch < 1e-12);
}

TEST_CASE("perturbed control point is reported as non-conforming")
{
    const double bump = 1e-3;
    model::MultiPatchModel clean(
        {quad_y_patch(0, {0, 1}, {0, 1}), quad_y_patch(1, {1, 2}, {0, 1})},
        {});
    // Same topology, interior edge control point of patch 1 moved.
    model::MultiPatchModel bent(
        {quad_y_patch(0, {0, 1}, {0, 1}),
         quad_y_patch(1, {1, 2}, {0, 1}, bump)},
        {});

    const auto topo = topology::detect_interfaces(clean);
    const auto& edge = find_entity(topo, {0, 1}, 1);
    const auto rep = topology::conformity_check(bent, edge, 50, 1e-9);
    CHECK(!rep.pass);
    // Midpoint displacement of the quadratic edge is bump / 2.
    CHECK(rep.max_point_mismatch > 0.2 * bump);
    CHECK(rep.max_point_mismatch < 1.0 * bump);

    // Detection itself refuses the perturbed geometry.
    CHECK_THROWS_AS((void)topology::detect_interfaces(bent),
                    std::runtime_error);
}

TEST_CASE("hard errors: periodic, hanging node, overlap")
{
    // Left and right facets coincide: periodic topology.
    model::MultiPatchModel periodic({bilinear_patch(0, {0, 0}, {0, 1})}, {});
    CHECK_THROWS_WITH_AS((void)topology::detect_interfaces(periodic),
                         doctest::Contains("periodic"), std::runtime_error);

    // T-junction: half edge against full edge, no common entity.
    model::MultiPatchModel hanging(
        {bilinear_patch(0, {0, 2}, {0, 1}), bilinear_patch(1, {0, 1}, {1, 2})},
        {});
    CHECK_THROWS_WITH_AS((void)topology::detect_interfaces(hanging),
                         doctest::Contains("no conforming interface"),
                         std::runtime_error);

    // Interpenetrating interiors without coincident boundary samples.
    model::MultiPatchModel overlap(
        {bilinear_patch(0, {0, 1}, {0, 1}),
         bilinear_patch(1, {0.3, 1.4}, {0.1, 0.9})},
        {});
    CHECK_THROWS_WITH_AS((void)topology::detect_interfaces(overlap),
                         doctest::Contains("overlap"), std::runtime_error);
}

TEST_CASE("detection is deterministic")
{
    for (int rep = 0; rep < 2; ++rep) {
        const auto a = topology::detect_interfaces(l_three_patches());
        const auto b = topology::detect_interfaces(l_three_patches());
        REQUIRE(a.entities().size() == b.entities().size());
        for (std::size_t i = 0; i < a.entities().size(); ++i) {
            CHECK(a.entities()[i].multi_index == b.entities()[i].multi_index);
            CHECK(a.entities()[i].q == b.entities()[i].q);
        }
    }
}
