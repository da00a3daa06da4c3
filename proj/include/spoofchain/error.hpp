#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spoofchain {

enum class ErrorCode {
  // header-model
  malformed_fold,
  illegal_field_name,
  empty_result,
  reject_null_member,
  // attack-corpus
  unsupported_knob,
  locus_not_found,
  incompatible_combination,
  // auth-engine
  missing_from_header,
  domain_is_suffix,
  instance_gap,
  bad_key,
  // chain-simulator
  no_forward_target,
  scenario_incomplete,
  // live-tester
  consent_required,
  rate_limited,
  connection_failed,
  rejected,
  append_rejected,
  precondition,
  // plumbing
  config,
  io,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spoofchain
