#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prh/series.hpp"

namespace prh {

// Dense matrix over B_n.
class SeriesMatrix {
 public:
  SeriesMatrix() = default;
  SeriesMatrix(const ModelRing* ring, int rows, int cols);
  static SeriesMatrix identity(const ModelRing* ring, int r);

  const ModelRing* ring() const { return ring_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Series& at(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  const Series& at(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  SeriesMatrix operator+(const SeriesMatrix& o) const;
  SeriesMatrix operator-(const SeriesMatrix& o) const;
  SeriesMatrix operator*(const SeriesMatrix& o) const;
  SeriesMatrix scale(const Series& s) const;
  SeriesMatrix transpose() const;
  SeriesMatrix inverse() const;
  SeriesMatrix truncate(const ModelRing* smaller) const;
  SeriesMatrix cap_abs(long long abs_pi) const;
  bool is_zero() const;
  bool equals(const SeriesMatrix& o) const { return (*this - o).is_zero(); }
  long long gauss_w() const;
  long long abs_precision() const;

 private:
  const ModelRing* ring_ = nullptr;
  int rows_ = 0, cols_ = 0;
  std::vector<Series> a_;
};

using SparseVec = std::vector<std::pair<int, Series>>;

struct SparseMatrix {
  const ModelRing* ring = nullptr;
  int rows = 0, cols = 0;
  std::vector<SparseVec> row;
  static SparseMatrix from_dense(const SeriesMatrix& m);
  SparseMatrix transpose() const;
  SparseVec apply(const SparseVec& x) const;
};

// t_adic: elimination over the chain ring B_n (pivot on minimal t-order, then minimal
// p-adic valuation of the leading coefficient, ties by lowest column then row).
// p_adic: n = 1, elimination over the ring of integers (pivot on minimal valuation).
enum class OrderMode { t_adic, p_adic };

struct KernelVector {
  SparseVec v;
  int torsion;  // generator spans a copy of B_n/t^torsion; torsion == n means free
};

class Echelon {
 public:
  // Columns >= pivot_limit are carried along (right-hand sides) but never pivoted.
  // A finite modulus (pi-units) makes the elimination work in O/pi^modulus.
  Echelon(const ModelRing* ring, std::vector<SparseVec> rows, int ncols, int pivot_limit,
          OrderMode mode = OrderMode::t_adic, long long modulus = kInfVal);

  int rank() const { return static_cast<int>(pivots_.size()); }
  std::vector<int> pivot_orders() const;
  std::vector<int> pivot_columns() const;
  // smallest absolute precision (pi-units) of an entry that was treated as zero
  long long decided_precision() const { return decided_; }
  std::vector<KernelVector> kernel() const;
  // solution of A x = column rhs_col (restricted to pivot columns), if one exists
  std::optional<SparseVec> solve(int rhs_col) const;
  // length of the row module (t_adic)
  int span_length() const;

 private:
  struct Pivot {
    int col;
    int order;
    SparseVec row;
  };
  long long order_key(const Series& s, int* order, long long* lead) const;
  Series quotient(const Series& b, const Series& a) const;
  SparseVec back_substitute(std::vector<std::pair<int, Series>> fixed, int upto, int rhs_col, bool* ok) const;

  const ModelRing* ring_;
  int ncols_, limit_;
  OrderMode mode_;
  long long modulus_;
  std::vector<Pivot> pivots_;
  std::vector<SparseVec> residual_;
  long long decided_ = kInfVal;
};

struct ComplexData {
  const ModelRing* ring = nullptr;
  std::vector<int> ranks;        // rank of C^q
  std::vector<SparseMatrix> d;   // d[q] : C^q -> C^{q+1}, rows index C^{q+1}
};

struct CohomologyDegree {
  int free = 0;
  std::vector<int> torsion;  // sorted exponents k: summands B_n/t^k
  bool operator==(const CohomologyDegree& o) const { return free == o.free && torsion == o.torsion; }
};

struct CohomologyReport {
  int n = 1;
  std::vector<CohomologyDegree> degrees;
  std::vector<int> module_ranks;
  long long decided_precision = kInfVal;  // pi-units
  int p = 2;
  Rational guaranteed() const;
  int length(int q) const;
};

struct CompareVerdict {
  bool equal = true;
  std::vector<int> mismatched_degrees;
  Rational common_precision{0};
  bool precision_infinite = true;
  std::string detail;
};

ComplexData koszul_build(const ModelRing* ring, const std::vector<SeriesMatrix>& operators);
void check_square_zero(const ComplexData& c);
CohomologyReport cohomology_compute(const ComplexData& c);
CompareVerdict complex_compare(const CohomologyReport& a, const CohomologyReport& b);

// length of the submodule of B_n^dim generated by the given vectors
int span_length(const ModelRing* ring, const std::vector<SparseVec>& gens, int dim, long long* decided = nullptr);

nlohmann::json report_to_json(const CohomologyReport& r);

}  // namespace prh
