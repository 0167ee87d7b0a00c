#pragma once

#include "polyvem/projectors.hpp"

namespace vem {

// The five stabilization forms, composed with (I - Pi) on both sides per the
// stabilized bilinear form. Elasticity scales S1, S2, S4 and S5 by the trace
// of the consistency matrix; S3 is left unscaled.
Matrix stab_matrix(int kind, const ElementOps& ops, const Matrix& consistency);

// The raw form before composition with (I - Pi) (S5: I - D (D^T D)^{-1} D^T).
Matrix stab_matrix_raw(int kind, const ElementOps& ops, const Matrix& consistency);

// Mean of the consistency-matrix eigenvalues: trace / dimension.
double tau_mean(const Matrix& consistency);

}  // namespace vem
