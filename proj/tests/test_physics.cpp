#include "doctest.h"

#include "ipns/gradient.hpp"
#include "ipns/physics.hpp"

#include <cmath>
#include <numbers>
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

net::NetworkSpec chain(std::vector<int> widths, int phi = 0)
{
    net::NetworkSpec spec;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        spec.layer_dims.emplace_back(widths[i], widths[i + 1]);
    }
    spec.param_input_count = phi;
    return spec;
}

// Single free patch with a one-layer linear "network" so fields can be
// dictated exactly: u_c = W_{c,k} xhat_k + b_c.
struct LinearRig {
    model::MultiPatchModel model;
    ansatz::GlobalAnsatz g;
    std::vector<double> params;

    LinearRig(Patch patch, int comps)
        : model({std::move(patch)}, {})
    {
        ansatz::NetPlan plan;
        plan.components = comps;
        plan.interior = chain({2, comps});
        g = ansatz::build_ansatz(model, topology::detect_interfaces(model),
                                 plan, 1);
        params.assign(g.parameter_count(), 0.0);
    }

    void set(int c, double w0, double w1, double bias)
    {
        const int comps = g.components;
        params[static_cast<std::size_t>(c) * 2 + 0] = w0;
        params[static_cast<std::size_t>(c) * 2 + 1] = w1;
        params[static_cast<std::size_t>(comps) * 2 + c] = bias;
    }
};

std::vector<physics::EnergySample> volume_samples(
    const model::MultiPatchModel& model, int per_patch, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<physics::EnergySample> out;
    for (const auto& p : model.patches()) {
        for (int i = 0; i < per_patch; ++i) {
            physics::EnergySample s;
            s.patch_id = p.id();
            for (int k = 0; k < model.dim(); ++k) {
                s.xhat[k] = dist(rng);
            }
            s.weight = 4.0 / per_patch;
            out.push_back(s);
        }
    }
    return out;
}

std::vector<physics::EnergySample> facet_samples(int patch_id, int facet,
                                                 int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<physics::EnergySample> out;
    for (int i = 0; i < n; ++i) {
        physics::EnergySample s;
        s.patch_id = patch_id;
        s.facet = facet;
        s.xhat[0] = dist(rng);
        s.xhat[1] = dist(rng);
        s.xhat[spline::facet_axis(facet)] = spline::facet_side(facet);
        s.weight = 2.0 / n;
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST_CASE("magnetostatic energy of linear fields is exact")
{
    // Identity patch, u = xhat1: energy 1/2 over area 4.
    LinearRig rig(bilinear_patch(0, {-1, 1}, {-1, 1}), 1);
    rig.set(0, 1.0, 0.0, 0.0);
    physics::Problem prob;
    prob.type = physics::ProblemType::Magnetostatic2D;
    prob.magnetostatic.nu[0] = 1.0;
    const auto samples = volume_samples(rig.model, 500, 3);
    const double loss =
        physics::total_loss<double>(rig.model, rig.g, prob, samples, {},
                                    rig.params);
    CHECK(loss == doctest::Approx(2.0).epsilon(1e-12));

    // Affine patch [0,2]x[0,1]: K = diag(0.5, 2), so the density of
    // u = xhat1 is 0.25 per unit reference volume.
    LinearRig rig2(bilinear_patch(0, {0, 2}, {0, 1}), 1);
    rig2.set(0, 1.0, 0.0, 0.0);
    physics::Problem prob2 = prob;
    const auto samples2 = volume_samples(rig2.model, 400, 5);
    const double loss2 = physics::total_loss<double>(
        rig2.model, rig2.g, prob2, samples2, {}, rig2.params);
    CHECK(loss2 == doctest::Approx(1.0).epsilon(1e-12));

    // Zero field: zero loss even with a source.
    LinearRig rig3(bilinear_patch(0, {-1, 1}, {-1, 1}), 1);
    physics::Problem prob3 = prob;
    prob3.magnetostatic.j_z[0] = 7.95e8;
    const double loss3 = physics::total_loss<double>(
        rig3.model, rig3.g, prob3, samples, {}, rig3.params);
    CHECK(loss3 == 0.0);
}

TEST_CASE("manufactured Poisson energy at the exact solution")
{
    CHECK_THROWS_AS((void)physics::manufactured_case("nope"),
                    std::invalid_argument);
    const auto& mc = physics::manufactured_case("lshape-sine");
    model::MultiPatchModel m({bilinear_patch(1, {0, 1}, {0, 1}),
                              bilinear_patch(2, {1, 2}, {0, 1}),
                              bilinear_patch(3, {1, 2}, {1, 2})},
                             {});
    // Monte Carlo estimate of the functional with u* plugged in as a
    // frozen field; compare to the analytic minimum -3 pi^2 / 4.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const int per_patch = 150000;
    double total = 0.0;
    for (const auto& p : m.patches()) {
        for (int i = 0; i < per_patch; ++i) {
            const std::vector<double> x{dist(rng), dist(rng)};
            const auto jd = p.jacobian(x);
            const auto xp = p.eval(x);
            ansatz::FieldEval<double> u;
            u.value[0] = mc.u_star(xp);
            const auto gp = mc.grad_u_star(xp);
            for (int k = 0; k < 2; ++k) {
                double acc = 0.0;
                for (int mm = 0; mm < 2; ++mm) {
                    acc += jd.J[mm * spline::kMaxDim + k] * gp[mm];
                }
                u.grad[0][k] = acc;
            }
            total += physics::scalar_energy_density(u, jd, 2, 1.0,
                                                    mc.source(xp)) *
                     (4.0 / per_patch);
        }
    }
    const double exact = -3.0 * std::numbers::pi * std::numbers::pi / 4.0;
    CHECK(std::abs(total - exact) / std::abs(exact) < 0.01);
}

TEST_CASE("SVK density: zero field, exact rotation, uniaxial stretch")
{
    physics::ElasticMaterial mat;
    mat.lambda = 1153.846;
    mat.mu = 769.231;
    mat.validate();
    physics::Problem prob;
    prob.type = physics::ProblemType::SvkContact;
    prob.elastic = mat;

    LinearRig rig(bilinear_patch(0, {-1, 1}, {-1, 1}), 2);
    const auto samples = volume_samples(rig.model, 300, 9);

    // Zero displacement.
    double loss = physics::total_loss<double>(rig.model, rig.g, prob, samples,
                                              {}, rig.params);
    CHECK(loss == 0.0);

    // Finite rigid rotation: u = (R - I) x, F = R, psi = 0.
    const double a = 0.6;
    rig.set(0, std::cos(a) - 1.0, -std::sin(a), 0.0);
    rig.set(1, std::sin(a), std::cos(a) - 1.0, 0.0);
    loss = physics::total_loss<double>(rig.model, rig.g, prob, samples, {},
                                       rig.params);
    CHECK(std::abs(loss) < 1e-12);

    // Uniaxial stretch F = diag(1+e, 1).
    const double e = 0.08;
    LinearRig rig2(bilinear_patch(0, {-1, 1}, {-1, 1}), 2);
    rig2.set(0, e, 0.0, 0.0);
    const double E11 = e + 0.5 * e * e;
    const double psi = (0.5 * mat.lambda + mat.mu) * E11 * E11;
    loss = physics::total_loss<double>(rig2.model, rig2.g, prob, samples, {},
                                       rig2.params);
    CHECK(loss == doctest::Approx(4.0 * psi).epsilon(1e-12));
}

TEST_CASE("contact penalty against the rigid plane")
{
    physics::ElasticMaterial mat;
    mat.lambda = 1000.0;
    mat.mu = 800.0;
    mat.eps_n = 1e3;
    physics::ContactPlane plane;
    plane.axis = 1;
    plane.side = -1;
    mat.contact_planes.push_back(plane);
    mat.contact_facets.emplace_back(0, 2);  // facet x2-

    physics::Problem prob;
    prob.type = physics::ProblemType::SvkContact;
    prob.elastic = mat;

    LinearRig rig(bilinear_patch(0, {-1, 1}, {-1, 1}), 2);
    const auto bsamples = facet_samples(0, 2, 200, 13);

    // Obstacle below the body: no contact.
    prob.elastic.contact_planes[0].c0 = -1.2;
    double loss = physics::total_loss<double>(rig.model, rig.g, prob, bsamples,
                                              {}, rig.params);
    CHECK(loss == 0.0);

    // Plane exactly at the boundary: onset, still zero.
    prob.elastic.contact_planes[0].c0 = -1.0;
    loss = physics::total_loss<double>(rig.model, rig.g, prob, bsamples, {},
                                       rig.params);
    CHECK(loss == 0.0);

    // Uniform penetration depth 0.1 of the undeformed facet: quartic
    // penalty density 0.5 eps_N delta^4 over facet length 2.
    prob.elastic.contact_planes[0].c0 = -0.9;
    loss = physics::total_loss<double>(rig.model, rig.g, prob, bsamples, {},
                                       rig.params);
    const double delta = 0.1;
    CHECK(loss ==
          doctest::Approx(2.0 * 0.5 * mat.eps_n * std::pow(delta, 4))
              .epsilon(1e-12));

    // Conventional quadratic variant through the config switch.
    prob.elastic.quartic_penalty = false;
    loss = physics::total_loss<double>(rig.model, rig.g, prob, bsamples, {},
                                       rig.params);
    CHECK(loss ==
          doctest::Approx(2.0 * 0.5 * mat.eps_n * delta * delta)
              .epsilon(1e-12));
    prob.elastic.quartic_penalty = true;

    // phi moves the plane: x2 = -1.2 + 0.5 phi_1.
    prob.elastic.contact_planes[0].c0 = -1.2;
    prob.elastic.contact_planes[0].phi_coeff = {0.5};
    const std::vector<double> phi{0.6};  // plane at -0.9 again
    // phi inputs require matching networks; reuse params of a
    // phi-aware rig.
    ansatz::NetPlan plan;
    plan.components = 2;
    plan.phi_count = 1;
    plan.interior = chain({3, 2}, 1);
    const auto gphi = ansatz::build_ansatz(
        rig.model, topology::detect_interfaces(rig.model), plan, 1);
    std::vector<double> pz(gphi.parameter_count(), 0.0);
    loss = physics::total_loss<double>(rig.model, gphi, prob, bsamples, phi,
                                       pz);
    CHECK(loss ==
          doctest::Approx(2.0 * 0.5 * mat.eps_n * std::pow(delta, 4))
              .epsilon(1e-12));

    // Extent clause: obstacle only under x1 <= 0.
    prob.elastic.contact_planes[0].phi_coeff.clear();
    prob.elastic.contact_planes[0].c0 = -0.9;
    prob.elastic.contact_planes[0].extent_axis = 0;
    prob.elastic.contact_planes[0].extent_max = 0.0;
    loss = physics::total_loss<double>(rig.model, rig.g, prob, bsamples, {},
                                       rig.params);
    CHECK(loss ==
          doctest::Approx(0.5 * (2.0 * 0.5 * mat.eps_n * std::pow(delta, 4)))
              .epsilon(0.1));  // roughly half the samples are engaged
    prob.elastic.contact_planes[0].extent_axis = -1;

    // Inverted configuration: clamped, counted.
    LinearRig rig2(bilinear_patch(0, {-1, 1}, {-1, 1}), 2);
    rig2.set(0, -2.0, 0.0, 0.0);  // F = diag(-1, 1)
    rig2.set(1, 0.0, 0.0, -0.05);
    prob.elastic.contact_planes[0].c0 = -1.0;
    physics::ContactStats stats;
    loss = physics::total_loss<double>(rig2.model, rig2.g, prob, bsamples, {},
                                       rig2.params, &stats);
    CHECK(stats.inverted == 200);
    CHECK(loss > 1e9);
    CHECK(std::isfinite(loss));
}

TEST_CASE("two seeds agree within Monte Carlo error")
{
    model::MultiPatchModel m({bilinear_patch(0, {-1, 1}, {-1, 1})}, {});
    ansatz::NetPlan plan;
    plan.interior = chain({2, 8, 8, 1});
    plan.interior.activation = net::Activation::Tanh;
    const auto g =
        ansatz::build_ansatz(m, topology::detect_interfaces(m), plan, 31);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dist(-0.8, 0.8);
    std::vector<double> p(g.parameter_count());
    for (auto& x : p) {
        x = dist(rng);
    }
    physics::Problem prob;
    prob.type = physics::ProblemType::Magnetostatic2D;
    prob.magnetostatic.nu[0] = 1.0;
    prob.magnetostatic.j_z[0] = 2.5;

    // Per-sample standard error from a pilot batch.
    const auto pilot = volume_samples(m, 4000, 1);
    double mean = 0.0;
    double m2 = 0.0;
    int n = 0;
    for (const auto& s : pilot) {
        const double v = physics::total_loss<double>(
                             m, g, prob, std::span(&s, 1), {}, p) /
                         s.weight;
        ++n;
        const double dlt = v - mean;
        mean += dlt / n;
        m2 += dlt * (v - mean);
    }
    const double var = m2 / (n - 1);

    const int M = 100000;
    const double l1 = physics::total_loss<double>(
        m, g, prob, volume_samples(m, M, 100), {}, p);
    const double l2 = physics::total_loss<double>(
        m, g, prob, volume_samples(m, M, 200), {}, p);
    const double se = 4.0 * std::sqrt(var / M);  // of the weighted sum
    CHECK(std::abs(l1 - l2) < 6.0 * se);
}

TEST_CASE("reverse-mode gradients of the loss match finite differences")
{
    model::MultiPatchModel m(
        {bilinear_patch(0, {0, 1}, {0, 1}), bilinear_patch(1, {1, 2}, {0, 1})},
        {{0, model::parse_facet("x1-", 2), model::BoundaryType::Dirichlet,
          0.0}});
    const auto topo = topology::detect_interfaces(m);

    physics::Problem mag;
    mag.type = physics::ProblemType::Magnetostatic2D;
    mag.magnetostatic.nu[0] = 1.0;
    mag.magnetostatic.nu[1] = 2.0;
    mag.magnetostatic.j_z[1] = 3.0;

    physics::Problem svk;
    svk.type = physics::ProblemType::SvkContact;
    svk.elastic.lambda = 10.0;
    svk.elastic.mu = 7.0;
    svk.elastic.eps_n = 50.0;
    svk.elastic.body_force[0] = {0.0, -1.0, 0.0};
    svk.elastic.tractions.push_back({1, 3, {0.5, 0.2, 0.0}});
    physics::ContactPlane plane;
    plane.axis = 1;
    plane.side = -1;
    plane.c0 = 0.4;  // deep inside so the penalty branch is active
    svk.elastic.contact_planes.push_back(plane);
    svk.elastic.contact_facets.emplace_back(0, 2);

    for (int which : {0, 1}) {
        const physics::Problem& prob = which == 0 ? mag : svk;
        ansatz::NetPlan plan;
        plan.components = which == 0 ? 1 : 2;
        plan.interior = chain({2, 6, 6, plan.components});
        plan.interface_nets[1] = chain({1, 5, plan.components});
        const auto g = ansatz::build_ansatz(m, topo, plan, 41 + which);
        // Keep the SVK state clear of inversion: the det F <= 0 clamp
        // floods the loss and breaks finite differences.
        std::mt19937_64 rng(5 + which);
        std::uniform_real_distribution<double> dist(which == 0 ? -0.4 : -0.15,
                                                    which == 0 ? 0.4 : 0.15);
        std::vector<double> p(g.parameter_count());
        for (auto& x : p) {
            x = dist(rng);
        }
        auto samples = volume_samples(m, 8, 17);
        const auto bs = facet_samples(0, 2, 6, 19);
        const auto ts = facet_samples(1, 3, 6, 23);
        if (which == 1) {
            samples.insert(samples.end(), bs.begin(), bs.end());
            samples.insert(samples.end(), ts.begin(), ts.end());
        }
        auto loss_fn = [&](ad::Tape&, std::span<const ad::Var> theta) {
            return physics::total_loss<ad::Var>(m, g, prob, samples, {},
                                                theta);
        };
        const auto grad = ad::loss_gradient(loss_fn, p);
        auto plain = [&](std::span<const double> theta) {
            return physics::total_loss<double>(m, g, prob, samples, {},
                                               theta);
        };
        double scale = 1e-8;
        for (const double gi : grad) {
            scale = std::max(scale, std::abs(gi));
        }
        std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
        double max_rel = 0.0;
        for (int rep = 0; rep < 40; ++rep) {
            const std::size_t i = pick(rng);
            auto pp = p;
            const double h = 1e-6;
            pp[i] += h;
            const double fp = plain(pp);
            pp[i] -= 2.0 * h;
            const double fm = plain(pp);
            const double fd = (fp - fm) / (2.0 * h);
            max_rel = std::max(max_rel, std::abs(grad[i] - fd) / scale);
        }
        CHECK(max_rel < 1e-5);
    }
}

TEST_CASE("non-finite contributions are reported with provenance")
{
    LinearRig rig(bilinear_patch(0, {-1, 1}, {-1, 1}), 1);
    rig.params[0] = std::numeric_limits<double>::quiet_NaN();
    physics::Problem prob;
    prob.type = physics::ProblemType::Magnetostatic2D;
    prob.magnetostatic.nu[0] = 1.0;
    const auto samples = volume_samples(rig.model, 4, 3);
    CHECK_THROWS_WITH_AS(
        (void)physics::total_loss<double>(rig.model, rig.g, prob, samples, {},
                                          rig.params),
        doctest::Contains("patch 0"), std::runtime_error);
}
