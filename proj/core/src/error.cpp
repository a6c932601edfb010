#include "welander/error.hpp"

namespace welander {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameters: return "invalid_parameters";
    case ErrorCode::ComplexSpectrum: return "complex_spectrum";
    case ErrorCode::SingularMatrix: return "singular_matrix";
    case ErrorCode::ZeroEigenvalue: return "zero_eigenvalue";
    case ErrorCode::NoSignChange: return "no_sign_change";
    case ErrorCode::NotSlidingPoint: return "not_sliding_point";
    case ErrorCode::BoundaryEquilibriumCollision: return "boundary_equilibrium_collision";
    case ErrorCode::TangencyDegenerate: return "tangency_degenerate";
    case ErrorCode::DegenerateAlpha: return "degenerate_alpha";
    case ErrorCode::NonpositiveSmoothing: return "nonpositive_smoothing";
    case ErrorCode::WrongRegime: return "wrong_regime";
    case ErrorCode::DegenerateBeta: return "degenerate_beta";
    case ErrorCode::OutOfDomain: return "out_of_domain";
    case ErrorCode::AsymptoteReached: return "asymptote_reached";
    case ErrorCode::BracketFailure: return "bracket_failure";
    case ErrorCode::NonzeroOffset: return "nonzero_offset";
    case ErrorCode::EscapingStart: return "escaping_start";
    case ErrorCode::IntegrationDefect: return "integration_defect";
  }
  return "unknown";
}

}  // namespace welander
