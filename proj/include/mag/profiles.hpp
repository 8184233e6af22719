#pragma once

#include <vector>

namespace mag {

// Smooth monotone transitions 0 -> 1 on [0,1].
// smoothstep5: quintic, C^2 at the ends, max slope 15/8.
double smoothstep5(double t);
double smoothstep5_d1(double t);
// smoothstep9: degree-9, C^4 at the ends (first four derivatives vanish there).
double smoothstep9(double t);
double smoothstep9_d1(double t);

// C^infinity transition built from the standard exp(-1/(t(1-t))) mollifier,
// pre-tabulated with exact first derivative at the nodes.
class MollifierStep {
public:
    MollifierStep();
    double value(double t) const;       // 0 for t<=0, 1 for t>=1
    double derivative(double t) const;  // exact closed form
private:
    std::vector<double> tab_;  // S at uniform nodes
    int n_;
};
const MollifierStep& mollifier_step();

// Radial plateau profile: 1 on [0, r1], smooth transition down to 0 at r0 > r1.
// kind 0: smoothstep5, kind 1: smoothstep9, kind 2: mollifier step.
class RadialCutoff {
public:
    RadialCutoff(double r_one, double r_zero, int kind = 1);
    double value(double r) const;
    double slope(double r) const;  // d/dr
    double r_one() const { return r1_; }
    double r_zero() const { return r0_; }
private:
    double r1_, r0_;
    int kind_;
};

}  // namespace mag
