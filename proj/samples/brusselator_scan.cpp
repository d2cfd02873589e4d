// Walks the Brusselator steady state across b at fixed a and prints both classifications.
#include <cstdio>

#include "kccstab/kccstab.hpp"

using namespace kccstab;

int main() {
  const double a = 2.0;
  std::printf("%5s %-14s %-15s %10s %10s %s\n", "b", "linear", "jacobi", "4*P11", "disc", "region");
  for (double b = 0.25; b <= 6.5 + 1e-9; b += 0.5) {
    const Model m = make_model(ModelName::Brusselator, {{"a", a}, {"b", b}});
    const Vec2 p = m.refs.at(m.primary_point).location;
    const LinearReport lin = linearize(m.field, p);
    const TheoremCheck tc = theorem_check(m.field, p, m.elimination);
    const JacobiReport jac = classify_jacobi(tc.p11);
    std::printf("%5.2f %-14s %-15s %10.5f %10.5f %s\n", b, std::string(to_string(lin.cls)).c_str(),
                std::string(to_string(jac.cls)).c_str(), tc.lhs, tc.rhs,
                std::string(to_string(brusselator_regions(a, b).region)).c_str());
  }
}
