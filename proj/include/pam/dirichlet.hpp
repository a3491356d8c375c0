#pragma once

#include <cstdint>
#include <vector>

#include "pam/lattice.hpp"

namespace pam {

// Axis-aligned box of lattice sites, inclusive bounds per coordinate.
struct Box {
    Site lo;
    Site hi;
    int dim = 0;

    std::int64_t site_count() const {
        std::int64_t n = 1;
        for (int i = 0; i < dim; ++i) {
            if (hi[i] < lo[i]) return 0;
            n *= hi[i] - lo[i] + 1;
        }
        return n;
    }
};

inline Box make_box(int dim, const Site& lo, const Site& hi) {
    Box b;
    b.dim = dim;
    b.lo = lo;
    b.hi = hi;
    return b;
}

// Principal Dirichlet eigenvalue of kappa*Delta on Q (zero boundary), with
// Delta the nearest-neighbour lattice Laplacian. Always <= 0. Power iteration
// on I + c*kappa*Delta_Q with c small enough that the operator is positive;
// Rayleigh quotient converged to 1e-10.
double dirichlet_eigenvalue(const Box& q, double kappa);

}  // namespace pam
