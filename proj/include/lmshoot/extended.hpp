#pragma once

// Extended-precision shooting.
//
// Some Neumann solutions sit so close to a trajectory that ends on the stable
// manifold of the saddle (0, 0) that neighbouring branches differ in u(0) by far
// less than one double ulp. Shots for those data are carried in a 200-bit MPFR
// float; everything else in the library stays in double.

#include "lmshoot/integrator.hpp"

#include <boost/multiprecision/mpfr.hpp>

#include <string>

namespace lmshoot {

/// 60 significant decimal digits (about 200 bits, MPFR), no expression templates.
using Extended = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<60>,
                                               boost::multiprecision::et_off>;

/// Closed forms exist for the built-in reaction terms only; custom terms are
/// available in double precision.
bool supports_extended(const Nonlinearity& f);

/// Result of an extended-precision shot: the double-rounded trajectory plus the
/// end state in full precision.
struct ExtendedShot {
    Trajectory trajectory;
    Extended u_R = 0;
    Extended v_R = 0;
};

/// Same integration as integrate_shoot, carried out in Extended. Throws
/// ValidationError when the reaction term has no extended form.
ExtendedShot integrate_shoot_extended(const Problem& p, const Extended& d,
                                      const IntegratorSettings& settings,
                                      ShootingSystem system = ShootingSystem::auxiliary);

/// Decimal representation with every significant digit.
std::string to_decimal(const Extended& x);

}  // namespace lmshoot
