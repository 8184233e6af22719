#include "mag/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>

#include "mag/errors.hpp"

namespace mag {

GaussLegendre::GaussLegendre(int n) {
    nodes.resize(n);
    weights.resize(n);
    // Newton iteration on Legendre polynomials, symmetric nodes.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
}

const GaussLegendre& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussLegendre> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, GaussLegendre(n)).first;
    return it->second;
}

double gl_integrate(const std::function<double(double)>& f, double a, double b, int order) {
    const auto& gl = gauss_legendre(order);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < order; ++i) s += gl.weights[i] * f(mid + half * gl.nodes[i]);
    return s * half;
}

namespace {

void adaptive_rec(const std::function<double(double)>& f, double a, double b, double tol,
                  int depth, int max_depth, QuadResult& out) {
    double coarse = gl_integrate(f, a, b, 8);
    double mid = 0.5 * (a + b);
    double fine = gl_integrate(f, a, mid, 8) + gl_integrate(f, mid, b, 8);
    out.evaluations += 24;
    double err = std::abs(fine - coarse);
    double accept = std::max(tol, 4e-15 * std::abs(fine));  // round-off floor
    if (err <= accept || depth >= max_depth) {
        out.value += fine;
        out.error_estimate += err;
        if (depth >= max_depth && err > accept) out.converged = false;
        return;
    }
    adaptive_rec(f, a, mid, 0.5 * tol, depth + 1, max_depth, out);
    adaptive_rec(f, mid, b, 0.5 * tol, depth + 1, max_depth, out);
}

}  // namespace

QuadResult adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, double abs_tol, int max_depth) {
    QuadResult out;
    double scale = std::abs(gl_integrate(f, a, b, 16));
    double tol = std::max(abs_tol, rel_tol * std::max(scale, 1e-300));
    adaptive_rec(f, a, b, tol, 0, max_depth, out);
    return out;
}

QuadResult adaptive_integrate_decaying(const std::function<double(double)>& f, double a,
                                       double window, double rel_tol, int max_windows) {
    QuadResult out;
    double lo = a;
    double w = window;
    for (int k = 0; k < max_windows; ++k) {
        QuadResult part = adaptive_integrate(f, lo, lo + w, rel_tol, 0.0, 30);
        out.value += part.value;
        out.error_estimate += part.error_estimate;
        out.evaluations += part.evaluations;
        if (std::abs(part.value) <= rel_tol * std::max(std::abs(out.value), 1e-300) && k > 2) return out;
        lo += w;
        w *= 2.0;
    }
    out.converged = false;
    return out;
}

namespace {

struct Cell {
    Box box;
    double value;   // GL2^3 estimate
    double error;   // |refined - coarse|
    bool operator<(const Cell& o) const { return error < o.error; }
};

double gl2_cell(const std::function<double(const Vec3&)>& f, const Box& b) {
    static const double g = 1.0 / std::sqrt(3.0);
    Vec3 c = b.center(), h = b.side() * 0.5;
    double s = 0.0;
    for (int i = -1; i <= 1; i += 2)
        for (int j = -1; j <= 1; j += 2)
            for (int k = -1; k <= 1; k += 2)
                s += f({c.x + g * h.x * i, c.y + g * h.y * j, c.z + g * h.z * k});
    return s * b.volume() / 8.0;
}

Cell make_cell(const std::function<double(const Vec3&)>& f, const Box& b) {
    double coarse = gl2_cell(f, b);
    double fine = 0.0;
    Vec3 c = b.center();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                Box sub;
                sub.lo = {i ? c.x : b.lo.x, j ? c.y : b.lo.y, k ? c.z : b.lo.z};
                sub.hi = {i ? b.hi.x : c.x, j ? b.hi.y : c.y, k ? b.hi.z : c.z};
                fine += gl2_cell(f, sub);
            }
    return Cell{b, fine, std::abs(fine - coarse)};
}

}  // namespace

QuadResult adaptive_box_integrate(const std::function<double(const Vec3&)>& f, const Box& box,
                                  double rel_tol, int max_cells) {
    QuadResult out;
    std::priority_queue<Cell> heap;
    heap.push(make_cell(f, box));
    double total = heap.top().value, toterr = heap.top().error;
    int ncells = 1;
    while (toterr > rel_tol * std::max(std::abs(total), 1e-300) && ncells < max_cells) {
        Cell top = heap.top();
        heap.pop();
        total -= top.value;
        toterr -= top.error;
        Vec3 c = top.box.center();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) {
                    Box sub;
                    sub.lo = {i ? c.x : top.box.lo.x, j ? c.y : top.box.lo.y, k ? c.z : top.box.lo.z};
                    sub.hi = {i ? top.box.hi.x : c.x, j ? top.box.hi.y : c.y, k ? top.box.hi.z : c.z};
                    Cell cc = make_cell(f, sub);
                    total += cc.value;
                    toterr += cc.error;
                    heap.push(cc);
                }
        ncells += 7;
    }
    out.value = total;
    out.error_estimate = toterr;
    out.evaluations = ncells * 72;
    out.converged = toterr <= rel_tol * std::max(std::abs(total), 1e-300);
    return out;
}

}  // namespace mag
