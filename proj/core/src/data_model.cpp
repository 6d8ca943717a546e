#include "dpdsurv/data_model.hpp"

#include "dpdsurv/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace dpdsurv::data {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record. Double quotes group a field and "" is a literal quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".";
}

double parse_number(const std::string& cell, const std::string& column, std::size_t row) {
  if (is_missing(cell)) {
    throw ParseError("row " + std::to_string(row) + ": missing value in column '" + column + "'",
                     row);
  }
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError("row " + std::to_string(row) + ": column '" + column +
                         "' is not a finite number: '" + cell + "'",
                     row);
  }
  return value;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

CensoredDataset::CensoredDataset(std::vector<CensoredObservation> observations, int p,
                                 std::vector<std::string> covariate_names)
    : observations_(std::move(observations)), p_(p), names_(std::move(covariate_names)) {
  if (p_ < 0) throw DataError("covariate dimension must be nonnegative");
  if (!names_.empty() && names_.size() != static_cast<std::size_t>(p_)) {
    throw DataError("expected " + std::to_string(p_) + " covariate names, got " +
                    std::to_string(names_.size()));
  }
  if (names_.empty()) {
    for (int j = 0; j < p_; ++j) names_.push_back("z" + std::to_string(j + 1));
  }
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& o = observations_[i];
    const std::size_t row = i + 1;
    if (!std::isfinite(o.x) || o.x < 0.0) {
      throw DataError("row " + std::to_string(row) + ": time must be finite and >= 0", row);
    }
    if (o.delta != 0 && o.delta != 1) {
      throw DataError("row " + std::to_string(row) + ": status must be 0 or 1", row);
    }
    if (o.z.size() != p_) {
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(p_) +
                          " covariates",
                      row);
    }
    if (!o.z.allFinite()) {
      throw DataError("row " + std::to_string(row) + ": non-finite covariate", row);
    }
  }
}

std::size_t CensoredDataset::events() const {
  return static_cast<std::size_t>(std::count_if(observations_.begin(), observations_.end(),
                                                [](const auto& o) { return o.delta == 1; }));
}

double CensoredDataset::total_time() const {
  double s = 0.0;
  for (const auto& o : observations_) s += o.x;
  return s;
}

double CensoredDataset::censored_fraction() const {
  if (observations_.empty()) return 0.0;
  return 1.0 - static_cast<double>(events()) / static_cast<double>(observations_.size());
}

void require_fittable(const CensoredDataset& d) {
  if (d.empty()) throw PreconditionError("cannot fit an empty dataset");
  if (d.events() == 0) {
    throw PreconditionError("cannot fit: every observation is censored (no events)");
  }
}

std::vector<std::string> dataset_warnings(const CensoredDataset& d) {
  std::vector<std::string> out;
  if (!d.empty() && d.events() == 0) {
    out.push_back("status column has no events; fitting will fail");
  }
  return out;
}

CensoredDataset read_csv(std::istream& in, const CsvColumns& columns) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_record(line);
      break;
    }
  }
  if (header.empty()) throw DataError("empty input: no header row");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  std::set<std::string> seen;
  for (const auto& c : columns.covariates) {
    if (!seen.insert(c).second) throw SchemaError("covariate column '" + c + "' listed twice");
  }
  const std::size_t time_idx = find_column(header, columns.time);
  const std::size_t status_idx = find_column(header, columns.status);
  std::vector<std::size_t> cov_idx;
  for (const auto& c : columns.covariates) cov_idx.push_back(find_column(header, c));
  const int p = static_cast<int>(cov_idx.size());

  std::vector<CensoredObservation> obs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_record(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                           std::to_string(header.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       row);
    }
    CensoredObservation o;
    o.x = parse_number(cells[time_idx], columns.time, row);
    if (o.x < 0.0) {
      throw ParseError("row " + std::to_string(row) + ": negative time " + cells[time_idx], row);
    }
    const std::string& status = cells[status_idx];
    if (is_missing(status)) {
      throw ParseError("row " + std::to_string(row) + ": missing value in column '" +
                           columns.status + "'",
                       row);
    }
    if (columns.status_true) {
      o.delta = status == *columns.status_true ? 1 : 0;
    } else {
      const double s = parse_number(status, columns.status, row);
      if (s != 0.0 && s != 1.0) {
        throw ParseError("row " + std::to_string(row) + ": status must be 0 or 1, got '" +
                             status + "' (use a truthy-token mapping for labels)",
                         row);
      }
      o.delta = static_cast<int>(s);
    }
    o.z.resize(p);
    for (int j = 0; j < p; ++j) {
      o.z(j) = parse_number(cells[cov_idx[j]], columns.covariates[j], row);
    }
    obs.push_back(std::move(o));
  }
  if (obs.empty()) throw DataError("no usable data rows");
  return CensoredDataset(std::move(obs), p, columns.covariates);
}

CensoredDataset load_csv(const std::string& path, const CsvColumns& columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, columns);
}

void write_csv(std::ostream& out, const CensoredDataset& d, const std::string& time_name,
               const std::string& status_name) {
  const auto old_precision = out.precision();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << time_name << ',' << status_name;
  for (const auto& n : d.covariate_names()) out << ',' << n;
  out << '\n';
  for (const auto& o : d.observations()) {
    out << o.x << ',' << o.delta;
    for (Eigen::Index j = 0; j < o.z.size(); ++j) out << ',' << o.z(j);
    out << '\n';
  }
  out.precision(old_precision);
}

CensoredDataset subset_covariates(const CensoredDataset& d, const std::vector<int>& indices) {
  std::set<int> distinct;
  for (const int j : indices) {
    if (j < 0 || j >= d.p()) {
      throw DomainError("covariate index " + std::to_string(j) + " out of range for p = " +
                        std::to_string(d.p()));
    }
    if (!distinct.insert(j).second) {
      throw DomainError("covariate index " + std::to_string(j) + " repeated");
    }
  }
  std::vector<CensoredObservation> obs;
  obs.reserve(d.size());
  for (const auto& o : d.observations()) {
    CensoredObservation s{o.x, o.delta, Vector(indices.size())};
    for (std::size_t k = 0; k < indices.size(); ++k) s.z(k) = o.z(indices[k]);
    obs.push_back(std::move(s));
  }
  std::vector<std::string> names;
  for (const int j : indices) names.push_back(d.covariate_names()[j]);
  return CensoredDataset(std::move(obs), static_cast<int>(indices.size()), std::move(names));
}

}  // namespace dpdsurv::data
