#pragma once

#include <Eigen/Dense>
#include <vector>

namespace etpa {

inline constexpr int class_count = 4;

/// Row-per-sample design matrix with one-hot targets.
struct Batch {
    Eigen::MatrixXd features; // n x d
    Eigen::MatrixXd targets;  // n x class_count
    std::vector<int> labels;  // 1-based class index per row

    Eigen::Index size() const { return features.rows(); }
    bool empty() const { return features.rows() == 0; }
};

} // namespace etpa
