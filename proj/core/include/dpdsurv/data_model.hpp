#pragma once

// Right-censored regression samples (x_i, delta_i, z_i) and their CSV
// ingestion.

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpdsurv::data {

using Vector = Eigen::VectorXd;

struct CensoredObservation {
  double x = 0.0;  ///< observed time min(T, C)
  int delta = 1;   ///< 1 when the event was observed
  Vector z;        ///< covariates, length p
};

/// Immutable collection of observations sharing one covariate dimension.
class CensoredDataset {
 public:
  CensoredDataset() = default;
  /// Throws DataError if an observation breaks the invariants (negative or
  /// non-finite time, delta outside {0, 1}, non-finite or wrongly sized z).
  /// Empty names are replaced by z1, z2, ...
  CensoredDataset(std::vector<CensoredObservation> observations, int p,
                  std::vector<std::string> covariate_names = {});

  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }
  int p() const { return p_; }
  const std::vector<CensoredObservation>& observations() const { return observations_; }
  const CensoredObservation& operator[](std::size_t i) const { return observations_[i]; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  std::size_t events() const;
  double total_time() const;
  double censored_fraction() const;

 private:
  std::vector<CensoredObservation> observations_;
  int p_ = 0;
  std::vector<std::string> names_;
};

/// Throws PreconditionError if the sample cannot be fitted (empty or no events).
void require_fittable(const CensoredDataset& d);

/// Human-readable warnings about a freshly loaded sample (e.g. no events).
std::vector<std::string> dataset_warnings(const CensoredDataset& d);

struct CsvColumns {
  std::string time = "time";
  std::string status = "status";
  std::vector<std::string> covariates;
  /// When set, a status cell equal to this token means delta = 1 and any
  /// other non-empty token means delta = 0. Otherwise status must be 0 or 1.
  std::optional<std::string> status_true;
};

/// Reads a comma-separated file with a header row. Errors carry the 1-based
/// data row: SchemaError (missing column), ParseError (bad or missing cell),
/// DataError (no usable rows).
CensoredDataset load_csv(const std::string& path, const CsvColumns& columns);
CensoredDataset read_csv(std::istream& in, const CsvColumns& columns);

/// Writes time, status, covariates with round-trip precision.
void write_csv(std::ostream& out, const CensoredDataset& d,
               const std::string& time_name = "time",
               const std::string& status_name = "status");

/// Keeps the covariates at the given 0-based indices, in the given order.
CensoredDataset subset_covariates(const CensoredDataset& d,
                                  const std::vector<int>& indices);

}  // namespace dpdsurv::data
