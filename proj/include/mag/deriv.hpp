#pragma once

#include <array>
#include <functional>
#include <vector>

#include "mag/vec.hpp"

namespace mag {

// 9-point central stencil values of d^g/dt^g f(t0) for g = 1..4 from samples
// f(t0 + m*h), m = -4..4. Sixth-order accurate.
struct Stencil9 {
    static std::array<double, 4> derivatives(const std::array<double, 9>& f, double h);
};

// All directional derivatives d^g/dt^g B(x + t d)|_{t=0} for g = 1..4 at once.
// Returns one Vec3 per order.
std::array<Vec3, 4> directional_derivatives(const std::function<Vec3(const Vec3&)>& field,
                                            const Vec3& x, const Vec3& dir, double h);

// Same for a scalar function.
std::array<double, 4> directional_derivatives_scalar(const std::function<double(const Vec3&)>& f,
                                                     const Vec3& x, const Vec3& dir, double h);

// First derivative (gradient / Jacobian action) via 5-point 4th order stencil.
Vec3 gradient_fd(const std::function<double(const Vec3&)>& f, const Vec3& x, double h);
Vec3 curl_fd(const std::function<Vec3(const Vec3&)>& field, const Vec3& x, double h);
double divergence_fd(const std::function<Vec3(const Vec3&)>& field, const Vec3& x, double h);

// Fixed deterministic set of 26 probe directions (face/edge/corner of the cube),
// used to turn derivative tensors into a computable directional sup-norm.
const std::vector<Vec3>& probe_directions();

// Halton low-discrepancy sequence point i (bases 2,3,5), in [0,1)^3.
Vec3 halton3(int i);
// Deterministic low-discrepancy points in the unit ball.
std::vector<Vec3> ball_lowdisc_points(int n);

}  // namespace mag
