#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <iosfwd>

namespace mag {

using cplx = std::complex<double>;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }

// 2x2 complex matrix in row-major order, enough for spinor algebra.
struct Mat2c {
    std::array<cplx, 4> a{};  // [ a0 a1 ; a2 a3 ]

    cplx& operator()(int i, int j) { return a[2 * i + j]; }
    cplx operator()(int i, int j) const { return a[2 * i + j]; }

    Mat2c operator+(const Mat2c& o) const {
        Mat2c r;
        for (int i = 0; i < 4; ++i) r.a[i] = a[i] + o.a[i];
        return r;
    }
    Mat2c operator-(const Mat2c& o) const {
        Mat2c r;
        for (int i = 0; i < 4; ++i) r.a[i] = a[i] - o.a[i];
        return r;
    }
    Mat2c operator*(const Mat2c& o) const {
        Mat2c r;
        r.a[0] = a[0] * o.a[0] + a[1] * o.a[2];
        r.a[1] = a[0] * o.a[1] + a[1] * o.a[3];
        r.a[2] = a[2] * o.a[0] + a[3] * o.a[2];
        r.a[3] = a[2] * o.a[1] + a[3] * o.a[3];
        return r;
    }
    Mat2c operator*(cplx s) const {
        Mat2c r;
        for (int i = 0; i < 4; ++i) r.a[i] = a[i] * s;
        return r;
    }
    std::array<cplx, 2> operator*(const std::array<cplx, 2>& v) const {
        return {a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]};
    }
    Mat2c adjoint() const {
        Mat2c r;
        r.a[0] = std::conj(a[0]); r.a[1] = std::conj(a[2]);
        r.a[2] = std::conj(a[1]); r.a[3] = std::conj(a[3]);
        return r;
    }
    cplx trace() const { return a[0] + a[3]; }
};

inline Mat2c mat2_identity() { return Mat2c{{cplx(1, 0), 0, 0, cplx(1, 0)}}; }

// sigma . v for a real 3-vector v
inline Mat2c sigma_dot(const Vec3& v) {
    Mat2c m;
    m.a[0] = cplx(v.z, 0);
    m.a[1] = cplx(v.x, -v.y);
    m.a[2] = cplx(v.x, v.y);
    m.a[3] = cplx(-v.z, 0);
    return m;
}

// operator norm of a 2x2 complex matrix (largest singular value)
double mat2_norm(const Mat2c& m);
// eigenvalues of a Hermitian 2x2 matrix, ascending
std::array<double, 2> mat2_herm_eigs(const Mat2c& m);

struct Box {
    Vec3 lo, hi;
    Vec3 side() const { return hi - lo; }
    Vec3 center() const { return (lo + hi) * 0.5; }
    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
    Box padded(double pad) const { return {lo - Vec3{pad, pad, pad}, hi + Vec3{pad, pad, pad}}; }
    double volume() const { Vec3 s = side(); return s.x * s.y * s.z; }
};

std::ostream& operator<<(std::ostream& os, const Vec3& v);

}  // namespace mag
