#pragma once

#include "errors.hpp"
#include "linalg.hpp"

namespace gpdrobust {

// Multipliers of a clipped IF: ψ(x) = Y(x)·min{1, b/|Y(x)|} with Y = AΛ − a.
struct LagrangeTriple {
    Mat2 A = Mat2::identity();
    Vec2 a;
    double b = 1.0;
    friend bool operator==(const LagrangeTriple&, const LagrangeTriple&) = default;
};

// Moves a triple solved at (ξ, 1) to (ξ, beta).
inline LagrangeTriple rescale_triple(const LagrangeTriple& t, double beta) {
    if (!(beta > 0.0)) throw invalid_parameter("rescale_triple: beta must be positive");
    const Mat2 d = d_beta(beta);
    return {d * t.A * d, d * t.a, t.b};
}

} // namespace gpdrobust
