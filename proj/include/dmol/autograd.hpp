// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace dmol {

// Minimal reverse-mode tape over row-major double matrices. A fresh tape is
// built per forward pass; ids index into the tape in construction order.
// Scalars are 1x1 matrices. Empty matrices (0 rows) are legal so graphs
// without node pairs flow through the same code path.
class Tape {
 public:
  // Untracked input.
  int constant(std::vector<double> data, int rows, int cols);
  // Tracked input; gradients accumulate and are readable after backward().
  int leaf(std::span<const double> data, int rows, int cols);

  int matmul(int a, int b);
  int add(int a, int b);
  int mul(int a, int b);
  int scale(int a, double s);
  // a is m x k, row_vec is 1 x k, added to every row of a.
  int add_row_broadcast(int a, int row_vec);
  int tanh_activation(int a);
  int concat_cols(std::span<const int> parts);
  // out row r = a row rows[r]; duplicate sources allowed.
  int gather_rows(int a, std::vector<int> rows);
  // out row dest_rows[r] += a row r; out has out_rows rows, zero elsewhere.
  int scatter_add_rows(int a, std::vector<int> dest_rows, int out_rows);
  int softmax_rows(int a);
  // Scalar: sum over rows of logsumexp(row) - row[target]. Stable form of
  // the categorical cross entropy against the softmax of the logits.
  int ce_from_logits(int logits, std::vector<int> targets);
  // Scalar: sum over rows of probs[row, target].
  int pick_sum(int probs, std::vector<int> targets);

  int rows(int id) const;
  int cols(int id) const;
  std::span<const double> value(int id) const;
  double scalar(int id) const;

  // Seeds d(id)/d(id) = 1 and sweeps the tape in reverse. id must be 1x1.
  void backward(int id);
  std::span<const double> grad(int id) const;

 private:
  enum class Op {
    kConst,
    kLeaf,
    kMatmul,
    kAdd,
    kMul,
    kScale,
    kAddRowBroadcast,
    kTanh,
    kConcatCols,
    kGatherRows,
    kScatterAddRows,
    kSoftmaxRows,
    kCeFromLogits,
    kPickSum,
  };
  struct Node {
    Op op;
    int rows = 0;
    int cols = 0;
    std::vector<int> inputs;
    std::vector<int> indices;  // gather/scatter/target metadata
    double factor = 1.0;
    std::vector<double> data;
    std::vector<double> grad;
  };

  int push(Node node);
  const Node& at(int id) const;
  void backprop_node(int id);

  std::vector<Node> nodes_;
};

}  // namespace dmol
