#pragma once

#include "eschil/lti_model.hpp"
#include "eschil/netlist.hpp"

namespace eschil {

/// Assemble the modified-nodal system for the given switch configuration
/// (on-switches and conducting diodes stamp 1/R_on, off/blocked stamp
/// 1/R_off), eliminate the algebraic unknowns by dense LU, and return the
/// state-space reduction. Throws SimError("circuit", ...) when the nodal
/// matrix is numerically singular (degenerate netlist).
LtiModel stamp_and_reduce(const Netlist& net, const SwitchConfig& cfg);

}  // namespace eschil
