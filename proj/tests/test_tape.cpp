#include "doctest.h"

#include "ipns/dual.hpp"
#include "ipns/gradient.hpp"
#include "ipns/tape.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace ipns;

namespace {

double fd_gradient(const std::function<double(std::span<const double>)>& f,
                   std::vector<double> x, std::size_t i, double h)
{
    x[i] += h;
    const double fp = f(x);
    x[i] -= 2.0 * h;
    const double fm = f(x);
    return (fp - fm) / (2.0 * h);
}

}  // namespace

TEST_CASE("gradient of squared norm is the parameter vector")
{
    std::vector<double> theta{0.3, -1.2, 2.5, 0.0, 4.1};
    auto loss = [](ad::Tape&, std::span<const ad::Var> p) {
        ad::Var acc = 0.5 * (p[0] * p[0]);
        for (std::size_t i = 1; i < p.size(); ++i) {
            acc = acc + 0.5 * (p[i] * p[i]);
        }
        return acc;
    };
    const auto g = ad::loss_gradient(loss, theta);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        CHECK(g[i] == doctest::Approx(theta[i]).epsilon(1e-14));
    }
}

TEST_CASE("elementary operations match finite differences")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(0.2, 1.5);
    auto f_plain = [](std::span<const double> p) {
        return std::tanh(p[0] * p[1]) / (p[2] + 2.0) - std::sqrt(p[3]) +
               (p[0] > 0.0 ? p[0] * p[0] : 0.0) * p[1];
    };
    auto f_tape = [](ad::Tape&, std::span<const ad::Var> p) {
        return tanh(p[0] * p[1]) / (p[2] + 2.0) - sqrt(p[3]) +
               sqrelu(p[0]) * p[1];
    };
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x{dist(rng), dist(rng), dist(rng), dist(rng)};
        const auto g = ad::loss_gradient(f_tape, x);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double fd = fd_gradient(f_plain, x, i, 1e-6);
            CHECK(g[i] == doctest::Approx(fd).epsilon(1e-7));
        }
    }
}

TEST_CASE("gradient is linear in the loss")
{
    std::vector<double> theta{0.7, -0.4, 1.1};
    auto l1 = [](ad::Tape&, std::span<const ad::Var> p) {
        return p[0] * p[1] + tanh(p[2]);
    };
    auto l2 = [](ad::Tape&, std::span<const ad::Var> p) {
        return p[2] * p[2] * p[0] - p[1];
    };
    const double a = 1.7;
    const double b = -0.3;
    auto combined = [&](ad::Tape& t, std::span<const ad::Var> p) {
        return a * l1(t, p) + b * l2(t, p);
    };
    const auto g1 = ad::loss_gradient(l1, theta);
    const auto g2 = ad::loss_gradient(l2, theta);
    const auto gc = ad::loss_gradient(combined, theta);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        CHECK(gc[i] == doctest::Approx(a * g1[i] + b * g2[i]).epsilon(1e-12));
    }
}

TEST_CASE("tape rewind keeps leaves and accumulates gradients")
{
    ad::Tape tape;
    std::vector<ad::Var> p;
    for (double v : {1.5, -2.0}) {
        p.emplace_back(tape, tape.leaf(v));
    }
    const auto mark = tape.checkpoint();
    std::vector<double> grad(2, 0.0);
    // Sum of two separately recorded terms: p0*p0 and p0*p1.
    {
        const ad::Var t = p[0] * p[0];
        tape.backward(t.idx, 1.0, grad);
        tape.rewind(mark);
    }
    {
        const ad::Var t = p[0] * p[1];
        tape.backward(t.idx, 1.0, grad);
        tape.rewind(mark);
    }
    CHECK(grad[0] == doctest::Approx(2.0 * 1.5 + (-2.0)).epsilon(1e-14));
    CHECK(grad[1] == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("nested spatial tangents are differentiated exactly")
{
    // loss(theta) = sum over points of |d/dx (theta0 * tanh(theta1 * x))|^2,
    // a spatial-gradient-dependent loss recorded through Dual<Var>.
    std::vector<double> theta{0.8, 1.3};
    const std::vector<double> xs{-0.7, -0.1, 0.4, 0.9};
    auto loss_tape = [&](ad::Tape& t, std::span<const ad::Var> p) {
        ad::Var acc = ad::Var::constant(t, 0.0);
        for (double x : xs) {
            ad::Dual<ad::Var> xd(ad::Var::constant(t, x), 1);
            xd.d[0] = ad::Var::constant(t, 1.0);
            ad::Dual<ad::Var> p1(p[1], 1);
            p1.d[0] = ad::Var::constant(t, 0.0);
            ad::Dual<ad::Var> p0(p[0], 1);
            p0.d[0] = ad::Var::constant(t, 0.0);
            const auto u = p0 * tanh(p1 * xd);
            acc = acc + u.d[0] * u.d[0];
        }
        return acc;
    };
    auto loss_plain = [&](std::span<const double> p) {
        double acc = 0.0;
        for (double x : xs) {
            const double t = std::tanh(p[1] * x);
            const double du = p[0] * (1.0 - t * t) * p[1];
            acc += du * du;
        }
        return acc;
    };
    const auto g = ad::loss_gradient(loss_tape, theta);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double fd = fd_gradient(loss_plain, theta, i, 1e-6);
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("non-finite loss raises")
{
    std::vector<double> theta{0.0};
    auto loss = [](ad::Tape&, std::span<const ad::Var> p) {
        return 1.0 / p[0];
    };
    CHECK_THROWS_AS((void)ad::loss_gradient(loss, theta), std::runtime_error);
}
