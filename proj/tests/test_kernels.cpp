#include "doctest.h"

#include "ipns/kernels.hpp"
#include "ipns/network.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <vector>

using namespace ipns;

TEST_CASE("dispatched dense kernel matches the scalar reference")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const auto dense = kernels::dense_forward();
    for (const auto [batch, n_in, n_out] :
         {std::array{1, 1, 1}, std::array{3, 5, 4}, std::array{7, 8, 8},
          std::array{16, 13, 2}, std::array{5, 64, 33}}) {
        std::vector<double> W(static_cast<std::size_t>(n_in) * n_out);
        std::vector<double> bias(n_out);
        std::vector<double> in(static_cast<std::size_t>(batch) * n_in);
        for (auto& x : W) {
            x = dist(rng);
        }
        for (auto& x : bias) {
            x = dist(rng);
        }
        for (auto& x : in) {
            x = dist(rng);
        }
        std::vector<double> ref(static_cast<std::size_t>(batch) * n_out);
        std::vector<double> got(ref.size(), -1.0);
        kernels::dense_forward_scalar(W.data(), bias.data(), in.data(),
                                      ref.data(), batch, n_in, n_out);
        dense(W.data(), bias.data(), in.data(), got.data(), batch, n_in,
              n_out);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-13));
        }
        // Null bias means zero bias.
        kernels::dense_forward_scalar(W.data(), nullptr, in.data(),
                                      ref.data(), batch, n_in, n_out);
        dense(W.data(), nullptr, in.data(), got.data(), batch, n_in, n_out);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("batched forward agrees with the per-point dual path")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (const auto activation :
         {net::Activation::Tanh, net::Activation::SquaredRelu}) {
        net::NetworkSpec spec;
        spec.layer_dims = {{3, 6}, {6, 6}, {6, 2}};
        spec.skip_connections = {1};
        spec.activation = activation;
        spec.param_input_count = 1;  // two spatial inputs plus phi
        const auto params = net::init_network(spec, 5);
        const int batch = 17;
        std::vector<double> points(static_cast<std::size_t>(batch) * 3);
        for (auto& x : points) {
            x = dist(rng);
        }
        const auto out =
            net::forward_with_input_grad(spec, params, points, batch);

        std::vector<ad::Dual<double>> in(3);
        std::vector<ad::Dual<double>> res(2);
        for (int b = 0; b < batch; ++b) {
            for (int i = 0; i < 3; ++i) {
                in[i] = ad::Dual<double>(points[b * 3 + i], 2);
                for (int k = 0; k < 2; ++k) {
                    in[i].d[k] = i == k ? 1.0 : 0.0;
                }
            }
            net::forward<double>(spec, params, in, res);
            for (int j = 0; j < 2; ++j) {
                CHECK(out.values[b * 2 + j] ==
                      doctest::Approx(res[j].v).epsilon(1e-12));
                for (int k = 0; k < 2; ++k) {
                    CHECK(out.input_grads[(b * 2 + j) * 2 + k] ==
                          doctest::Approx(res[j].d[k]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("parallel_for covers the range in disjoint chunks")
{
    std::vector<std::atomic<int>> hits(1000);
    kernels::parallel_for(hits.size(), [&](std::size_t lo, std::size_t hi) {
        CHECK(lo <= hi);
        for (std::size_t i = lo; i < hi; ++i) {
            ++hits[i];
        }
    });
    for (const auto& h : hits) {
        CHECK(h.load() == 1);
    }
    bool ran_empty = false;
    kernels::parallel_for(0, [&](std::size_t lo, std::size_t hi) {
        ran_empty = true;
        CHECK(lo == hi);
    });
    CHECK(ran_empty);
}
