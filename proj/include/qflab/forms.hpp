#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qflab/common.hpp"
#include "qflab/exact_scalar.hpp"

namespace qfl {

struct ExactMatrix {
  int dim = 0;
  std::vector<ExactScalar> entries;  // row-major

  ExactMatrix() = default;
  explicit ExactMatrix(int d) : dim(d), entries(static_cast<std::size_t>(d) * d) {}
  ExactScalar& operator()(int i, int j) { return entries[static_cast<std::size_t>(i) * dim + j]; }
  const ExactScalar& operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) * dim + j]; }
  static ExactMatrix diagonal(const std::vector<ExactScalar>& diag);
  Eigen::MatrixXd to_double() const;
};

using FormEntries = std::variant<ExactMatrix, Eigen::MatrixXd>;

struct Signature {
  int positive = 0;
  int negative = 0;
};

enum class RationalityKind { rational, irrational, unknown };

struct RationalityVerdict {
  RationalityKind kind = RationalityKind::unknown;
  // rational: smallest M > 0 with M * (exact entries) integral; M_value is
  // the same constant relative to matrix() (they differ by exact_scale).
  ExactScalar M;
  double M_value = 0.0;
  std::pair<int, int> witness_a{-1, -1};  // irrational: two entries (row, col)
  std::pair<int, int> witness_b{-1, -1};
  std::string detail;
};

class QuadraticForm {
 public:
  int dim() const { return dim_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double entry(int i, int j) const { return matrix_(i, j); }

  // Q[x] and Q[x - a]
  double operator()(const Vec& x) const;
  double shifted(const Vec& x, const Vec& a) const;
  long double shifted_ld(const Vec& x, const Vec& a) const;
  // Evaluation through the eigen-decomposition.
  double eigen_evaluate(const Vec& x) const;

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }  // ascending
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }  // columns
  double q0() const { return q0_; }
  double q() const { return q_; }
  Signature signature() const { return signature_; }
  bool is_positive() const { return signature_.negative == 0; }
  bool is_indefinite() const { return signature_.positive > 0 && signature_.negative > 0; }
  bool is_diagonal() const { return diagonal_; }
  Vec diagonal() const;
  double det() const;

  // Exact entries, proportional to matrix(): matrix() == exact / exact_scale.
  const std::optional<ExactMatrix>& exact() const { return exact_; }
  double exact_scale() const { return exact_scale_; }
  bool exact_is_literal() const { return exact_ && exact_scale_ == 1.0; }

  std::string describe() const;

 private:
  friend QuadraticForm build_form(const FormEntries&, bool);
  int dim_ = 0;
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  double q0_ = 0, q_ = 0;
  Signature signature_;
  bool diagonal_ = false;
  std::optional<ExactMatrix> exact_;
  double exact_scale_ = 1.0;
};

QuadraticForm build_form(const FormEntries& entries, bool normalize);
QuadraticForm diagonal_form(const std::vector<ExactScalar>& diag, bool normalize = false);
QuadraticForm diagonal_form(const Vec& diag, bool normalize = false);
QuadraticForm scaled(const QuadraticForm& form, const ExactScalar& c);

RationalityVerdict classify_rationality(const QuadraticForm& form);

// Form file: `kind: exact|float` header then d*d entries, row-major,
// separated by whitespace or commas. '#' starts a comment.
FormEntries parse_form_text(const std::string& text);
QuadraticForm load_form_file(const std::string& path, bool normalize);

struct ShiftVector {
  Vec a;
  // a = reduced + shift, reduced in [0,1)^d, shift integral
  Vec reduced() const;
  std::vector<long long> integer_part() const;
};

}  // namespace qfl
