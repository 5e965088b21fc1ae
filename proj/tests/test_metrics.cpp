#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "dtw_oracle.hpp"
#include "vitalcast/metrics.hpp"
#include "vitalcast/rng.hpp"
#include "vitalcast/tensor.hpp"

using namespace vitalcast;

TEST_CASE("mse_horizon hand values") {
    std::vector<double> p{1.0, 3.0}, a{0.0, 1.0};
    CHECK(mse_horizon(p, a) == doctest::Approx(2.5).epsilon(1e-15));

    std::vector<double> p2{0.2, 0.4}, a2{0.0, 0.0};
    CHECK(mse_horizon(p2, a2) == doctest::Approx(0.10).epsilon(1e-12));

    // A constant +0.01 offset lands exactly on one table unit (1e-4).
    std::vector<double> p3(36, 0.51), a3(36, 0.50);
    CHECK(mse_horizon(p3, a3) == doctest::Approx(1e-4).epsilon(1e-12));

    std::vector<double> s1{1.0}, s2{1.0, 2.0}, empty;
    CHECK_THROWS_AS(mse_horizon(s1, s2), ShapeError);
    CHECK_THROWS_AS(mse_horizon(empty, empty), ShapeError);
}

TEST_CASE("mse_horizon matches the differentiable loss") {
    Rng rng(404);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> p(12), a(12);
        for (auto& v : p) v = rng.uniform(-2.0, 2.0);
        for (auto& v : a) v = rng.uniform(-2.0, 2.0);
        Tape tape(false);
        auto loss = tape.mse_loss(tensor_of({12}, p), tensor_of({12}, a));
        CHECK(std::fabs(mse_horizon(p, a) - loss->at(0)) <= 1e-15);
    }
}

TEST_CASE("dtw basics") {
    std::vector<double> x{0.0, 0.0}, y{1.0, 1.0};
    CHECK(dtw_distance(x, y) == 2.0);

    // Alignment never beats zero pointwise distance.
    std::vector<double> z{0.3, -1.2, 0.8, 0.8};
    CHECK(dtw_distance(z, z) == 0.0);

    // Warping absorbs a time shift that pointwise comparison cannot.
    std::vector<double> a{0, 1, 2, 3}, b{0, 0, 1, 2};
    double pointwise = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) pointwise += std::fabs(a[i] - b[i]);
    CHECK(dtw_distance(a, b) < pointwise);
    CHECK(dtw_distance(a, b) == 1.0); // only the final 3 vs 2 mismatch remains
}

TEST_CASE("dtw against exhaustive path enumeration") {
    Rng rng(28);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> x(1 + rng.next_below(6)), y(1 + rng.next_below(6));
        for (auto& v : x) v = 0.5 * static_cast<double>(rng.next_below(3));
        for (auto& v : y) v = 0.5 * static_cast<double>(rng.next_below(3));
        CHECK(dtw_distance(x, y) == dtw_exhaustive(x, y));
    }
}

TEST_CASE("dtw symmetry and self distance on random pairs") {
    Rng rng(29);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> x(1 + rng.next_below(20)), y(1 + rng.next_below(20));
        for (auto& v : x) v = rng.uniform(-3.0, 3.0);
        for (auto& v : y) v = rng.uniform(-3.0, 3.0);
        CHECK(dtw_distance(x, y) == dtw_distance(y, x));
        CHECK(dtw_distance(x, x) == 0.0);
    }
}

TEST_CASE("persistence repeats the last target observation") {
    // Two channels, history 3; target is row 1, whose last value is 0.7.
    std::vector<double> input{0.1, 0.2, 0.3, 0.5, 0.6, 0.7};
    auto f = persistence_forecast(input, 2, 3, 1, 4);
    CHECK(f == std::vector<double>(4, 0.7));

    auto g = persistence_forecast(input, 2, 3, 0, 2);
    CHECK(g == std::vector<double>(2, 0.3));
}

TEST_CASE("persistence error on a linear ramp has a closed form") {
    // Signal v(t) = s t. Persistence predicts the last history value for the
    // whole horizon, so the h-th error is s h and the MSE over H steps is
    // s^2 (H+1)(2H+1)/6. For s = 0.001, H = 36 that is 4.5016667e-4.
    const double s = 0.001;
    const std::size_t L = 72, H = 36;
    std::vector<double> input(L), actual(H);
    for (std::size_t t = 0; t < L; ++t) input[t] = s * static_cast<double>(t);
    for (std::size_t h = 0; h < H; ++h) actual[h] = s * static_cast<double>(L + h);
    auto pred = persistence_forecast(input, 1, L, 0, H);
    CHECK(mse_horizon(pred, actual) == doctest::Approx(4.5016667e-4).epsilon(1e-7));
}

TEST_CASE("report CSV formatting is fixed") {
    MetricsReport rep;
    rep.rows.push_back({"persistence", "-", "HR", 2.5e-3, 0.75, 12});
    rep.rows.push_back({"nhits+attention", "with", "HR", 1.2345e-4, 2.5e-3, 12});
    const std::string expect =
        "model,covariates,target,mse,mse_table,dtw,dtw_table,n_windows\n"
        "persistence,-,HR,2.5000000000e-03,25.0000,7.5000000000e-01,750.0000,12\n"
        "nhits+attention,with,HR,1.2345000000e-04,1.2345,2.5000000000e-03,2.5000,12\n";
    CHECK(rep.to_csv() == expect);
    CHECK(rep.to_csv() == rep.to_csv());
}

TEST_CASE("table-unit helpers") {
    MetricsRow row;
    row.mse = 6.97e-4;
    row.dtw = 18.2e-3;
    CHECK(row.mse_table() == doctest::Approx(6.97));
    CHECK(row.dtw_table() == doctest::Approx(18.2));
}
