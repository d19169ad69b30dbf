#pragma once

#include <stdexcept>
#include <string>

namespace hubnet {

// Every failure mode raised by the library carries one of these codes so
// callers (and tests) can react to the exact condition instead of parsing
// message text.
enum class Errc {
  empty_group,
  non_binary_entry,
  duplicate_label,
  hub_not_member,
  malformed_file,
  io_failure,
  dimension_mismatch,
  zero_probability_group,
  all_restarts_degenerate,
  empty_community,
  zero_association,
  singular_denominator,
  degenerate_degree_sequence,
  invalid_argument,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::empty_group: return "EmptyGroup";
    case Errc::non_binary_entry: return "NonBinaryEntry";
    case Errc::duplicate_label: return "DuplicateLabel";
    case Errc::hub_not_member: return "HubNotMember";
    case Errc::malformed_file: return "MalformedFile";
    case Errc::io_failure: return "IoFailure";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::zero_probability_group: return "ZeroProbabilityGroup";
    case Errc::all_restarts_degenerate: return "AllRestartsDegenerate";
    case Errc::empty_community: return "EmptyCommunity";
    case Errc::zero_association: return "ZeroAssociation";
    case Errc::singular_denominator: return "SingularDenominator";
    case Errc::degenerate_degree_sequence: return "DegenerateDegreeSequence";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace hubnet
