#include "sparse_ldl.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bess::detail {

void SparseLdl::analyze(int n, const std::vector<Entry>& entries, std::vector<int> signs) {
  n_ = n;
  {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(2 * entries.size() + n);
    for (const auto& e : entries) {
      t.emplace_back(e.row, e.col, 1.0);
      t.emplace_back(e.col, e.row, 1.0);
    }
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
    Eigen::SparseMatrix<double> pattern(n, n);
    pattern.setFromTriplets(t.begin(), t.end());
    Eigen::AMDOrdering<int> amd;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
    amd(pattern, pinv);
    // pinv maps new -> old positions.
    iperm_.assign(pinv.indices().data(), pinv.indices().data() + n);
  }
  perm_.assign(n, 0);
  for (int i = 0; i < n; ++i) perm_[iperm_[i]] = i;
  signs_.assign(n, 1);
  for (int i = 0; i < n; ++i) signs_[perm_[i]] = signs[i];

  // Column-wise upper-triangular pattern; the diagonal is always present.
  std::vector<std::vector<int>> cols(n);
  for (int i = 0; i < n; ++i) cols[i].push_back(i);
  std::vector<std::pair<int, int>> coords(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    int r = perm_[entries[k].row], c = perm_[entries[k].col];
    if (r > c) std::swap(r, c);
    coords[k] = {r, c};
    cols[c].push_back(r);
  }
  ap_.assign(n + 1, 0);
  ai_.clear();
  for (int c = 0; c < n; ++c) {
    auto& v = cols[c];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    ai_.insert(ai_.end(), v.begin(), v.end());
    ap_[c + 1] = static_cast<int>(ai_.size());
  }
  ax_.assign(ai_.size(), 0.0);
  slot_.resize(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto [r, c] = coords[k];
    const auto first = ai_.begin() + ap_[c], last = ai_.begin() + ap_[c + 1];
    slot_[k] = static_cast<int>(std::lower_bound(first, last, r) - ai_.begin());
  }

  // Elimination tree and column counts.
  etree_.assign(n, -1);
  lnz_.assign(n, 0);
  std::vector<int> work(n, 0);
  for (int j = 0; j < n; ++j) {
    work[j] = j;
    for (int p = ap_[j]; p < ap_[j + 1]; ++p) {
      int i = ai_[p];
      while (i != j && work[i] != j) {
        if (etree_[i] == -1) etree_[i] = j;
        ++lnz_[i];
        work[i] = j;
        i = etree_[i];
      }
    }
  }
  lp_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) lp_[i + 1] = lp_[i] + lnz_[i];
  li_.assign(lp_[n], 0);
  lx_.assign(lp_[n], 0.0);
  d_.assign(n, 0.0);
  dinv_.assign(n, 0.0);
  iwork_.assign(3 * n, 0);
  marks_.assign(n, 0);
  fwork_.assign(n, 0.0);
  tmp_.assign(n, 0.0);
}

int SparseLdl::factor(const std::vector<double>& values, double pivot_tol, double dynamic_reg) {
  if (values.size() != slot_.size()) throw std::invalid_argument("SparseLdl: value count mismatch");
  std::fill(ax_.begin(), ax_.end(), 0.0);
  for (std::size_t k = 0; k < values.size(); ++k) ax_[slot_[k]] += values[k];

  const int n = n_;
  int* y_idx = iwork_.data();
  int* elim = iwork_.data() + n;
  int* next_space = iwork_.data() + 2 * n;
  double* y = fwork_.data();
  std::fill(marks_.begin(), marks_.end(), 0);
  std::fill(fwork_.begin(), fwork_.end(), 0.0);
  for (int i = 0; i < n; ++i) next_space[i] = lp_[i];

  int bumped = 0;
  auto fix_pivot = [&](int k) {
    if (signs_[k] * d_[k] < pivot_tol) {
      d_[k] = signs_[k] * dynamic_reg;
      ++bumped;
    }
    dinv_[k] = 1.0 / d_[k];
  };

  for (int k = 0; k < n; ++k) {
    int nnz_y = 0;
    d_[k] = 0.0;
    for (int p = ap_[k]; p < ap_[k + 1]; ++p) {
      const int b = ai_[p];
      if (b == k) {
        d_[k] = ax_[p];
        continue;
      }
      y[b] = ax_[p];
      if (marks_[b]) continue;
      marks_[b] = 1;
      elim[0] = b;
      int ne = 1;
      int next = etree_[b];
      while (next != -1 && next < k) {
        if (marks_[next]) break;
        marks_[next] = 1;
        elim[ne++] = next;
        next = etree_[next];
      }
      while (ne) y_idx[nnz_y++] = elim[--ne];
    }
    for (int i = nnz_y - 1; i >= 0; --i) {
      const int c = y_idx[i];
      const int end = next_space[c];
      const double yc = y[c];
      for (int j = lp_[c]; j < end; ++j) y[li_[j]] -= lx_[j] * yc;
      li_[end] = k;
      lx_[end] = yc * dinv_[c];
      d_[k] -= yc * lx_[end];
      ++next_space[c];
      y[c] = 0.0;
      marks_[c] = 0;
    }
    fix_pivot(k);
  }
  return bumped;
}

void SparseLdl::solve(std::vector<double>& x) const {
  const int n = n_;
  for (int i = 0; i < n; ++i) tmp_[perm_[i]] = x[i];
  for (int i = 0; i < n; ++i)
    for (int j = lp_[i]; j < lp_[i + 1]; ++j) tmp_[li_[j]] -= lx_[j] * tmp_[i];
  for (int i = 0; i < n; ++i) tmp_[i] *= dinv_[i];
  for (int i = n - 1; i >= 0; --i)
    for (int j = lp_[i]; j < lp_[i + 1]; ++j) tmp_[i] -= lx_[j] * tmp_[li_[j]];
  for (int i = 0; i < n; ++i) x[i] = tmp_[perm_[i]];
}

}  // namespace bess::detail
