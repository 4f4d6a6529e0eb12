#pragma once

#include <stdexcept>
#include <string>

namespace seriesband {

// Failure taxonomy shared across the library. Each value maps to one CLI
// exit class (config / data / numerical / study guard).
enum class errc {
  invalid_spec,
  invalid_config,
  unknown_study,
  parse_error,
  out_of_domain,
  dimension_too_large,
  dimension_mismatch,
  not_positive_definite,
  not_psd,
  singular_design,
  non_positive_weight,
  not_differentiable,
  zero_loading,
  degenerate_variance,
  insufficient_draws,
  insufficient_reps,
  bootstrap_failure,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(errc code) {
  switch (code) {
    case errc::invalid_spec: return "InvalidSpec";
    case errc::invalid_config: return "InvalidConfig";
    case errc::unknown_study: return "UnknownStudy";
    case errc::parse_error: return "ParseError";
    case errc::out_of_domain: return "OutOfDomain";
    case errc::dimension_too_large: return "DimensionTooLarge";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::not_positive_definite: return "NotPositiveDefinite";
    case errc::not_psd: return "NotPSD";
    case errc::singular_design: return "SingularDesign";
    case errc::non_positive_weight: return "NonPositiveWeight";
    case errc::not_differentiable: return "NotDifferentiable";
    case errc::zero_loading: return "ZeroLoading";
    case errc::degenerate_variance: return "DegenerateVariance";
    case errc::insufficient_draws: return "InsufficientDraws";
    case errc::insufficient_reps: return "InsufficientReps";
    case errc::bootstrap_failure: return "BootstrapFailure";
  }
  return "Error";
}

}  // namespace seriesband
