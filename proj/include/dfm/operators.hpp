#pragma once

// Single-site operators in the local basis {0: down, 1: up}.

#include <Eigen/Dense>
#include <complex>
#include <initializer_list>
#include <span>

namespace dfm::ops {

using Mat = Eigen::MatrixXcd;

Mat identity();
Mat pauli_x();
Mat pauli_y();
Mat pauli_z();
/// |up><up|
Mat proj_up();
/// |down><down|
Mat proj_down();
/// |up><down|
Mat raise();
/// |down><up|
Mat lower();

/// Operator on consecutive local bits: factors[0] acts on local bit 0.
Mat local_product(std::initializer_list<Mat> factors);

/// Embeds a local operator supported on 1-indexed `sites` into the full
/// 2^num_sites space. Dense; for small chains only.
Mat embed(const Mat& local, std::span<const int> sites, int num_sites);

}  // namespace dfm::ops
