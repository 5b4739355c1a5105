#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace hessae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Labels = std::vector<int>;  // class indices, 1..C

}  // namespace hessae
