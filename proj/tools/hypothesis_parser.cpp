#include "hypothesis_parser.hpp"

#include "dpdsurv/error.hpp"

#include <cctype>
#include <charconv>
#include <set>

namespace dpdsurv::cli {

namespace {

class Scanner {
 public:
  explicit Scanner(const std::string& text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool done() {
    skip_space();
    return pos_ >= text_.size();
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  std::string word() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }
  int integer() {
    skip_space();
    const std::size_t start = pos_;
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("expected an index");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    if (value < 1) {
      pos_ = start;
      fail("indices are 1-based");
    }
    return value;
  }
  double number() {
    skip_space();
    double value = 0.0;
    std::size_t start = pos_;
    if (start < text_.size() && text_[start] == '+') ++start;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }
  std::size_t position() const { return pos_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw HypothesisSyntaxError("hypothesis syntax error at position " + std::to_string(pos_ + 1) +
                                    ": " + what + " in \"" + text_ + "\"",
                                pos_);
  }
  [[noreturn]] void fail_at(std::size_t at, const std::string& what) {
    pos_ = at;
    fail(what);
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<Restriction> parse_restrictions(const std::string& text) {
  Scanner sc(text);
  std::vector<Restriction> out;
  if (sc.done()) sc.fail("empty hypothesis");
  do {
    sc.skip_space();
    const std::size_t start = sc.position();
    const std::string name = sc.word();
    if (name != "beta" && name != "gamma") sc.fail_at(start, "expected 'beta' or 'gamma'");
    sc.expect('[');
    std::vector<int> indices{sc.integer()};
    while (sc.accept(',')) indices.push_back(sc.integer());
    sc.expect(']');
    sc.expect('=');
    const double value = sc.number();
    for (const int j : indices) out.push_back({name == "beta", j, value});
  } while (sc.accept(';'));
  if (!sc.done()) sc.fail("unexpected trailing text");
  return out;
}

int restriction_coordinate(const Restriction& r, const mdpde::ModelSpec& spec) {
  if (r.is_beta) {
    if (r.index > spec.p) {
      throw DomainError("beta[" + std::to_string(r.index) + "] does not exist: the model has " +
                        std::to_string(spec.p) + " covariates");
    }
    return spec.q() + r.index - 1;
  }
  if (r.index > spec.q()) {
    throw DomainError("gamma[" + std::to_string(r.index) + "] does not exist: the " +
                      spec.family() + " baseline has " + std::to_string(spec.q()) +
                      " parameters");
  }
  return r.index - 1;
}

inference::HypothesisSpec build_hypothesis(const std::vector<Restriction>& restrictions,
                                           const mdpde::ModelSpec& spec,
                                           const std::string& label) {
  if (restrictions.empty()) throw DomainError("hypothesis has no restrictions");
  numerics::Matrix A = numerics::Matrix::Zero(static_cast<Eigen::Index>(restrictions.size()),
                                              spec.dim());
  numerics::Vector b(static_cast<Eigen::Index>(restrictions.size()));
  std::set<int> used;
  for (std::size_t k = 0; k < restrictions.size(); ++k) {
    const int c = restriction_coordinate(restrictions[k], spec);
    if (!used.insert(c).second) throw DomainError("a coordinate is restricted twice");
    A(static_cast<Eigen::Index>(k), c) = 1.0;
    b(static_cast<Eigen::Index>(k)) = restrictions[k].value;
  }
  return inference::linear_restriction(A, b, label);
}

}  // namespace dpdsurv::cli
