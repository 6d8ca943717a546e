#pragma once

// Mini-language for linear coordinate restrictions, e.g.
//   beta[2]=1     beta[1,3]=0     gamma[2]=1     beta[1]=0; gamma[2]=1
// Indices are 1-based.

#include "dpdsurv/robust_inference.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace dpdsurv::cli {

class HypothesisSyntaxError : public std::runtime_error {
 public:
  HypothesisSyntaxError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  /// 0-based character offset of the offending token.
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

struct Restriction {
  bool is_beta = true;
  int index = 1;  ///< 1-based
  double value = 0.0;
};

std::vector<Restriction> parse_restrictions(const std::string& text);

/// Builds the hypothesis for a model; throws DomainError when an index does
/// not exist in the model or a coordinate is restricted twice.
inference::HypothesisSpec build_hypothesis(const std::vector<Restriction>& restrictions,
                                           const mdpde::ModelSpec& spec,
                                           const std::string& label);

/// Stacked-theta coordinate (0-based) of a restriction.
int restriction_coordinate(const Restriction& r, const mdpde::ModelSpec& spec);

}  // namespace dpdsurv::cli
