#pragma once

#include "pate/data.hpp"

#include <cstring>
#include <random>

namespace testutil {

using pate::Index;
using pate::Matrix;
using pate::Vector;

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (const double x : v) out(i++) = x;
    return out;
}

// One covariate column x plus treatment and outcome.
inline pate::ExperimentalSample sample_1d(const Vector& x, const Vector& t, const Vector& y) {
    return pate::make_experimental({"x"}, x, t, y);
}

struct Synthetic {
    pate::ExperimentalSample exp;
    pate::PopulationSample pop;
    Vector w;
    Vector predicted;
};

// Two covariates, nonlinear outcome, positive weights, a noisy prediction.
inline Synthetic synthetic(std::uint64_t seed, Index n = 200, Index n_pop = 400) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.3, 3.0);
    Matrix x(n, 2);
    Vector t(n), y(n), w(n), pred(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = z(rng);
        x(i, 1) = z(rng);
        t(i) = i % 2 == 0 ? 1.0 : 0.0;
        y(i) = 1.0 + 2.0 * x(i, 0) + x(i, 1) + 0.5 * x(i, 0) * x(i, 0) + t(i) * (1.0 + 0.5 * x(i, 1)) + z(rng);
        w(i) = u(rng);
        pred(i) = 2.0 * x(i, 0) + x(i, 1) + 0.3 * z(rng);
    }
    Synthetic s;
    s.exp = pate::make_experimental({"x1", "x2"}, x, t, y);
    Matrix xp(n_pop, 2);
    Vector yp(n_pop);
    for (Index i = 0; i < n_pop; ++i) {
        xp(i, 0) = z(rng) + 0.2;
        xp(i, 1) = z(rng);
        yp(i) = 1.0 + 2.0 * xp(i, 0) + xp(i, 1) + 0.5 * xp(i, 0) * xp(i, 0) + z(rng);
    }
    s.pop.covariate_names = {"x1", "x2"};
    s.pop.covariates = xp;
    s.pop.outcome = yp;
    s.w = w;
    s.predicted = pred;
    return s;
}

inline bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace testutil
