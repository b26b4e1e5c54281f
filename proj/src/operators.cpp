#include "dfm/operators.hpp"

#include "dfm/basis.hpp"
#include "dfm/error.hpp"

namespace dfm::ops {

namespace {
using cd = std::complex<double>;

Mat two_by_two(cd a00, cd a01, cd a10, cd a11) {
  Mat m(2, 2);
  m << a00, a01, a10, a11;
  return m;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}
}  // namespace

Mat identity() { return Mat::Identity(2, 2); }
Mat pauli_x() { return two_by_two(0, 1, 1, 0); }
Mat pauli_y() { return two_by_two(0, cd(0, 1), cd(0, -1), 0); }
Mat pauli_z() { return two_by_two(-1, 0, 0, 1); }
Mat proj_up() { return two_by_two(0, 0, 0, 1); }
Mat proj_down() { return two_by_two(1, 0, 0, 0); }
Mat raise() { return two_by_two(0, 0, 1, 0); }
Mat lower() { return two_by_two(0, 1, 0, 0); }

Mat local_product(std::initializer_list<Mat> factors) {
  Mat out = Mat::Identity(1, 1);
  // Kronecker order puts the last factor in the most significant bit.
  for (const Mat& f : factors) out = kron(f, out);
  return out;
}

Mat embed(const Mat& local, std::span<const int> sites, int num_sites) {
  require(num_sites <= 14, "embed: chain too long for a dense operator");
  const std::vector<int> support(sites.begin(), sites.end());
  const auto dim = static_cast<Eigen::Index>(basis_dim(num_sites));
  require(local.rows() == (Eigen::Index{1} << support.size()), "embed: size mismatch");
  BasisIndex mask = 0;
  for (int site : support) mask |= site_bit(site);
  auto local_of = [&](BasisIndex s) {
    Eigen::Index a = 0;
    for (std::size_t k = 0; k < support.size(); ++k)
      if (is_up(s, support[k])) a |= Eigen::Index{1} << k;
    return a;
  };
  auto global_of = [&](BasisIndex rest, Eigen::Index a) {
    for (std::size_t k = 0; k < support.size(); ++k)
      if ((a >> k) & 1) rest |= site_bit(support[k]);
    return rest;
  };
  Mat out = Mat::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    const BasisIndex rest = static_cast<BasisIndex>(col) & ~mask;
    const Eigen::Index a = local_of(col);
    for (Eigen::Index r = 0; r < local.rows(); ++r)
      out(static_cast<Eigen::Index>(global_of(rest, r)), col) += local(r, a);
  }
  return out;
}

}  // namespace dfm::ops
