#include "mag/profiles.hpp"

#include <algorithm>
#include <cmath>

namespace mag {

double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}
double smoothstep5_d1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}

double smoothstep9(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double t5 = t * t * t * t * t;
    return t5 * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + 70.0 * t))));
}
double smoothstep9_d1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    double u = t * (1.0 - t);
    return 630.0 * u * u * u * u;
}

namespace {
double moll(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::exp(-1.0 / (t * (1.0 - t)));
}
}  // namespace

MollifierStep::MollifierStep() : n_(4096) {
    tab_.resize(n_ + 1);
    // composite Simpson accumulation
    double acc = 0.0;
    double h = 1.0 / n_;
    tab_[0] = 0.0;
    for (int i = 0; i < n_; ++i) {
        double a = i * h, b = a + h;
        acc += (h / 6.0) * (moll(a) + 4.0 * moll(0.5 * (a + b)) + moll(b));
        tab_[i + 1] = acc;
    }
    for (auto& v : tab_) v /= acc;
}

double MollifierStep::value(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double s = t * n_;
    int i = std::min(int(s), n_ - 1);
    double u = s - i;
    double h = 1.0 / n_;
    // cubic Hermite with exact nodal derivatives
    double Z = tab_.back();  // == 1 after normalization
    (void)Z;
    double f0 = tab_[i], f1 = tab_[i + 1];
    double d0 = derivative(i * h) * h, d1 = derivative((i + 1) * h) * h;
    double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * f0 + (u3 - 2 * u2 + u) * d0 + (-2 * u3 + 3 * u2) * f1 + (u3 - u2) * d1;
}

double MollifierStep::derivative(double t) const {
    static const double Z = [] {
        // normalization constant of the mollifier integral
        double acc = 0.0;
        int n = 8192;
        double h = 1.0 / n;
        for (int i = 0; i < n; ++i) {
            double a = i * h, b = a + h;
            acc += (h / 6.0) * (moll(a) + 4.0 * moll(0.5 * (a + b)) + moll(b));
        }
        return acc;
    }();
    return moll(t) / Z;
}

const MollifierStep& mollifier_step() {
    static const MollifierStep s;
    return s;
}

RadialCutoff::RadialCutoff(double r_one, double r_zero, int kind) : r1_(r_one), r0_(r_zero), kind_(kind) {}

double RadialCutoff::value(double r) const {
    if (r <= r1_) return 1.0;
    if (r >= r0_) return 0.0;
    double t = (r0_ - r) / (r0_ - r1_);
    switch (kind_) {
        case 0: return smoothstep5(t);
        case 2: return mollifier_step().value(t);
        default: return smoothstep9(t);
    }
}

double RadialCutoff::slope(double r) const {
    if (r <= r1_ || r >= r0_) return 0.0;
    double t = (r0_ - r) / (r0_ - r1_);
    double dt = -1.0 / (r0_ - r1_);
    switch (kind_) {
        case 0: return smoothstep5_d1(t) * dt;
        case 2: return mollifier_step().derivative(t) * dt;
        default: return smoothstep9_d1(t) * dt;
    }
}

}  // namespace mag
