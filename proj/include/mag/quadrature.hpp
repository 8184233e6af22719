#pragma once

#include <functional>
#include <vector>

#include "mag/vec.hpp"

namespace mag {

// Gauss-Legendre nodes/weights on [-1,1], computed once and cached per order.
struct GaussLegendre {
    std::vector<double> nodes, weights;
    explicit GaussLegendre(int n);
};
const GaussLegendre& gauss_legendre(int n);

// fixed-order GL on [a,b]
double gl_integrate(const std::function<double(double)>& f, double a, double b, int order = 16);

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
    bool converged = true;
};

// Adaptive bisection with embedded GL(n)/GL(2n) error estimate.
QuadResult adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                              double rel_tol = 1e-10, double abs_tol = 0.0, int max_depth = 40);

// Adaptive integral of an exponentially decaying integrand on (a, infinity):
// integrates on dyadic windows until the window contribution falls below tolerance.
QuadResult adaptive_integrate_decaying(const std::function<double(double)>& f, double a,
                                       double window, double rel_tol = 1e-10, int max_windows = 200);

// Adaptive axis-aligned box quadrature (octree refinement, GL2 per axis per cell)
// with a two-level Richardson error estimate.
QuadResult adaptive_box_integrate(const std::function<double(const Vec3&)>& f, const Box& box,
                                  double rel_tol = 1e-7, int max_cells = 200000);

}  // namespace mag
