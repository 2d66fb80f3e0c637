#pragma once

#include <vector>

namespace bess::detail {

/// Sparse LDL' for quasidefinite matrices. The pattern is fixed at
/// analysis time (AMD ordering, elimination tree); each factorization
/// takes values in the order of the entries passed to analyze().
/// Pivots whose sign disagrees with the expected one, or that are too
/// small, are replaced by sign * dynamic_reg.
class SparseLdl {
 public:
  struct Entry {
    int row;
    int col;
  };

  /// `signs[i]` is +1 for primal rows, -1 for dual rows. Entries may be
  /// given in either triangle; duplicates are summed.
  void analyze(int n, const std::vector<Entry>& entries, std::vector<int> signs);

  /// Returns the number of pivots that needed regularization.
  int factor(const std::vector<double>& values, double pivot_tol = 1e-13, double dynamic_reg = 1e-7);

  /// In-place solve with the last factorization.
  void solve(std::vector<double>& x) const;

  bool analyzed() const { return n_ > 0; }

 private:
  int n_ = 0;
  std::vector<int> perm_;   // new index of old index
  std::vector<int> iperm_;  // old index of new index
  std::vector<int> signs_;  // in permuted order
  // Upper triangle of the permuted matrix, CSC.
  std::vector<int> ap_, ai_;
  std::vector<double> ax_;
  std::vector<int> slot_;  // entry -> position in ax_
  // Factor.
  std::vector<int> etree_, lnz_, lp_, li_;
  std::vector<double> lx_, d_, dinv_;
  // Work.
  std::vector<int> iwork_;
  std::vector<char> marks_;
  std::vector<double> fwork_;
  mutable std::vector<double> tmp_;
};

}  // namespace bess::detail
