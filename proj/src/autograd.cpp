// SPDX-License-Identifier: Apache-2.0

#include "dmol/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace dmol {

namespace {

std::size_t elems(int rows, int cols) {
  return static_cast<std::size_t>(rows) * cols;
}

}  // namespace

int Tape::push(Node node) {
  node.grad.assign(elems(node.rows, node.cols), 0.0);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::at(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) {
    throw std::out_of_range("Tape: bad value id");
  }
  return nodes_[id];
}

int Tape::constant(std::vector<double> data, int rows, int cols) {
  if (data.size() != elems(rows, cols)) {
    throw std::invalid_argument("Tape::constant: size mismatch");
  }
  Node n;
  n.op = Op::kConst;
  n.rows = rows;
  n.cols = cols;
  n.data = std::move(data);
  return push(std::move(n));
}

int Tape::leaf(std::span<const double> data, int rows, int cols) {
  if (data.size() != elems(rows, cols)) {
    throw std::invalid_argument("Tape::leaf: size mismatch");
  }
  Node n;
  n.op = Op::kLeaf;
  n.rows = rows;
  n.cols = cols;
  n.data.assign(data.begin(), data.end());
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.cols != nb.rows) {
    throw std::invalid_argument("Tape::matmul: inner dimension mismatch");
  }
  Node n;
  n.op = Op::kMatmul;
  n.rows = na.rows;
  n.cols = nb.cols;
  n.inputs = {a, b};
  n.data.assign(elems(n.rows, n.cols), 0.0);
  for (int i = 0; i < na.rows; ++i) {
    for (int k = 0; k < na.cols; ++k) {
      double v = na.data[elems(i, na.cols) + k];
      if (v == 0.0) continue;
      for (int j = 0; j < nb.cols; ++j) {
        n.data[elems(i, n.cols) + j] += v * nb.data[elems(k, nb.cols) + j];
      }
    }
  }
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.rows != nb.rows || na.cols != nb.cols) {
    throw std::invalid_argument("Tape::add: shape mismatch");
  }
  Node n;
  n.op = Op::kAdd;
  n.rows = na.rows;
  n.cols = na.cols;
  n.inputs = {a, b};
  n.data.resize(na.data.size());
  for (std::size_t i = 0; i < na.data.size(); ++i) {
    n.data[i] = na.data[i] + nb.data[i];
  }
  return push(std::move(n));
}

int Tape::mul(int a, int b) {
  const Node& na = at(a);
  const Node& nb = at(b);
  if (na.rows != nb.rows || na.cols != nb.cols) {
    throw std::invalid_argument("Tape::mul: shape mismatch");
  }
  Node n;
  n.op = Op::kMul;
  n.rows = na.rows;
  n.cols = na.cols;
  n.inputs = {a, b};
  n.data.resize(na.data.size());
  for (std::size_t i = 0; i < na.data.size(); ++i) {
    n.data[i] = na.data[i] * nb.data[i];
  }
  return push(std::move(n));
}

int Tape::scale(int a, double s) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kScale;
  n.rows = na.rows;
  n.cols = na.cols;
  n.inputs = {a};
  n.factor = s;
  n.data.resize(na.data.size());
  for (std::size_t i = 0; i < na.data.size(); ++i) n.data[i] = s * na.data[i];
  return push(std::move(n));
}

int Tape::add_row_broadcast(int a, int row_vec) {
  const Node& na = at(a);
  const Node& nr = at(row_vec);
  if (nr.rows != 1 || nr.cols != na.cols) {
    throw std::invalid_argument("Tape::add_row_broadcast: shape mismatch");
  }
  Node n;
  n.op = Op::kAddRowBroadcast;
  n.rows = na.rows;
  n.cols = na.cols;
  n.inputs = {a, row_vec};
  n.data.resize(na.data.size());
  for (int i = 0; i < na.rows; ++i) {
    for (int j = 0; j < na.cols; ++j) {
      n.data[elems(i, na.cols) + j] = na.data[elems(i, na.cols) + j] + nr.data[j];
    }
  }
  return push(std::move(n));
}

int Tape::tanh_activation(int a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kTanh;
  n.rows = na.rows;
  n.cols = na.cols;
  n.inputs = {a};
  n.data.resize(na.data.size());
  for (std::size_t i = 0; i < na.data.size(); ++i) {
    n.data[i] = std::tanh(na.data[i]);
  }
  return push(std::move(n));
}

int Tape::concat_cols(std::span<const int> parts) {
  if (parts.empty()) {
    throw std::invalid_argument("Tape::concat_cols: no parts");
  }
  int rows = at(parts[0]).rows;
  int cols = 0;
  for (int p : parts) {
    if (at(p).rows != rows) {
      throw std::invalid_argument("Tape::concat_cols: row mismatch");
    }
    cols += at(p).cols;
  }
  Node n;
  n.op = Op::kConcatCols;
  n.rows = rows;
  n.cols = cols;
  n.inputs.assign(parts.begin(), parts.end());
  n.data.assign(elems(rows, cols), 0.0);
  int offset = 0;
  for (int p : parts) {
    const Node& np = at(p);
    for (int i = 0; i < rows; ++i) {
      std::copy(np.data.begin() + elems(i, np.cols),
                np.data.begin() + elems(i + 1, np.cols),
                n.data.begin() + elems(i, cols) + offset);
    }
    offset += np.cols;
  }
  return push(std::move(n));
}

int Tape::gather_rows(int a, std::vector<int> rows) {
  const Node& na = at(a);
  for (int r : rows) {
    if (r < 0 || r >= na.rows) {
      throw std::out_of_range("Tape::gather_rows: row out of range");
    }
  }
  Node n;
  n.op = Op::kGatherRows;
  n.rows = static_cast<int>(rows.size());
  n.cols = na.cols;
  n.inputs = {a};
  n.indices = std::move(rows);
  n.data.assign(elems(n.rows, n.cols), 0.0);
  for (int i = 0; i < n.rows; ++i) {
    std::copy(na.data.begin() + elems(n.indices[i], na.cols),
              na.data.begin() + elems(n.indices[i] + 1, na.cols),
              n.data.begin() + elems(i, n.cols));
  }
  return push(std::move(n));
}

int Tape::scatter_add_rows(int a, std::vector<int> dest_rows, int out_rows) {
  const Node& na = at(a);
  if (static_cast<int>(dest_rows.size()) != na.rows) {
    throw std::invalid_argument("Tape::scatter_add_rows: dest size mismatch");
  }
  for (int r : dest_rows) {
    if (r < 0 || r >= out_rows) {
      throw std::out_of_range("Tape::scatter_add_rows: dest out of range");
    }
  }
  Node n;
  n.op = Op::kScatterAddRows;
  n.rows = out_rows;
  n.cols = na.cols;
  n.inputs = {a};
  n.indices = std::move(dest_rows);
  n.data.assign(elems(out_rows, na.cols), 0.0);
  for (int i = 0; i < na.rows; ++i) {
    for (int j = 0; j < na.cols; ++j) {
      n.data[elems(n.indices[i], n.cols) + j] += na.data[elems(i, na.cols) + j];
    }
  }
  return push(std::move(n));
}

int Tape::softmax_rows(int a) {
  const Node& na = at(a);
  Node n;
  n.op = Op::kSoftmaxRows;
  n.rows = na.rows;
  n.cols = na.cols;
  n.inputs = {a};
  n.data.resize(na.data.size());
  for (int i = 0; i < na.rows; ++i) {
    const double* row = na.data.data() + elems(i, na.cols);
    double mx = row[0];
    for (int j = 1; j < na.cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < na.cols; ++j) {
      double e = std::exp(row[j] - mx);
      n.data[elems(i, na.cols) + j] = e;
      sum += e;
    }
    for (int j = 0; j < na.cols; ++j) n.data[elems(i, na.cols) + j] /= sum;
  }
  return push(std::move(n));
}

int Tape::ce_from_logits(int logits, std::vector<int> targets) {
  const Node& na = at(logits);
  if (static_cast<int>(targets.size()) != na.rows) {
    throw std::invalid_argument("Tape::ce_from_logits: target size mismatch");
  }
  for (int t : targets) {
    if (t < 0 || t >= na.cols) {
      throw std::out_of_range("Tape::ce_from_logits: target out of range");
    }
  }
  Node n;
  n.op = Op::kCeFromLogits;
  n.rows = 1;
  n.cols = 1;
  n.inputs = {logits};
  n.indices = std::move(targets);
  double total = 0.0;
  for (int i = 0; i < na.rows; ++i) {
    const double* row = na.data.data() + elems(i, na.cols);
    double mx = row[0];
    for (int j = 1; j < na.cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < na.cols; ++j) sum += std::exp(row[j] - mx);
    total += mx + std::log(sum) - row[n.indices[i]];
  }
  n.data = {total};
  return push(std::move(n));
}

int Tape::pick_sum(int probs, std::vector<int> targets) {
  const Node& na = at(probs);
  if (static_cast<int>(targets.size()) != na.rows) {
    throw std::invalid_argument("Tape::pick_sum: target size mismatch");
  }
  for (int t : targets) {
    if (t < 0 || t >= na.cols) {
      throw std::out_of_range("Tape::pick_sum: target out of range");
    }
  }
  Node n;
  n.op = Op::kPickSum;
  n.rows = 1;
  n.cols = 1;
  n.inputs = {probs};
  n.indices = std::move(targets);
  double total = 0.0;
  for (int i = 0; i < na.rows; ++i) {
    total += na.data[elems(i, na.cols) + n.indices[i]];
  }
  n.data = {total};
  return push(std::move(n));
}

int Tape::rows(int id) const { return at(id).rows; }
int Tape::cols(int id) const { return at(id).cols; }

std::span<const double> Tape::value(int id) const { return at(id).data; }

double Tape::scalar(int id) const {
  const Node& n = at(id);
  if (n.rows != 1 || n.cols != 1) {
    throw std::invalid_argument("Tape::scalar: value is not 1x1");
  }
  return n.data[0];
}

std::span<const double> Tape::grad(int id) const { return at(id).grad; }

void Tape::backward(int id) {
  const Node& seed = at(id);
  if (seed.rows != 1 || seed.cols != 1) {
    throw std::invalid_argument("Tape::backward: seed must be 1x1");
  }
  for (Node& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
  nodes_[id].grad[0] = 1.0;
  for (int i = id; i >= 0; --i) backprop_node(i);
}

void Tape::backprop_node(int id) {
  Node& n = nodes_[id];
  bool any = false;
  for (double g : n.grad) {
    if (g != 0.0) {
      any = true;
      break;
    }
  }
  if (!any) return;
  switch (n.op) {
    case Op::kConst:
    case Op::kLeaf:
      break;
    case Op::kMatmul: {
      Node& a = nodes_[n.inputs[0]];
      Node& b = nodes_[n.inputs[1]];
      // dA = dC * B^T ; dB = A^T * dC
      for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
          double acc = 0.0;
          for (int j = 0; j < b.cols; ++j) {
            acc += n.grad[elems(i, n.cols) + j] * b.data[elems(k, b.cols) + j];
          }
          a.grad[elems(i, a.cols) + k] += acc;
        }
      }
      for (int k = 0; k < b.rows; ++k) {
        for (int j = 0; j < b.cols; ++j) {
          double acc = 0.0;
          for (int i = 0; i < a.rows; ++i) {
            acc += a.data[elems(i, a.cols) + k] * n.grad[elems(i, n.cols) + j];
          }
          b.grad[elems(k, b.cols) + j] += acc;
        }
      }
      break;
    }
    case Op::kAdd: {
      Node& a = nodes_[n.inputs[0]];
      Node& b = nodes_[n.inputs[1]];
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        a.grad[i] += n.grad[i];
        b.grad[i] += n.grad[i];
      }
      break;
    }
    case Op::kMul: {
      Node& a = nodes_[n.inputs[0]];
      Node& b = nodes_[n.inputs[1]];
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        a.grad[i] += n.grad[i] * b.data[i];
        b.grad[i] += n.grad[i] * a.data[i];
      }
      break;
    }
    case Op::kScale: {
      Node& a = nodes_[n.inputs[0]];
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        a.grad[i] += n.factor * n.grad[i];
      }
      break;
    }
    case Op::kAddRowBroadcast: {
      Node& a = nodes_[n.inputs[0]];
      Node& r = nodes_[n.inputs[1]];
      for (int i = 0; i < n.rows; ++i) {
        for (int j = 0; j < n.cols; ++j) {
          double g = n.grad[elems(i, n.cols) + j];
          a.grad[elems(i, n.cols) + j] += g;
          r.grad[j] += g;
        }
      }
      break;
    }
    case Op::kTanh: {
      Node& a = nodes_[n.inputs[0]];
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        a.grad[i] += n.grad[i] * (1.0 - n.data[i] * n.data[i]);
      }
      break;
    }
    case Op::kConcatCols: {
      int offset = 0;
      for (int p : n.inputs) {
        Node& np = nodes_[p];
        for (int i = 0; i < n.rows; ++i) {
          for (int j = 0; j < np.cols; ++j) {
            np.grad[elems(i, np.cols) + j] +=
                n.grad[elems(i, n.cols) + offset + j];
          }
        }
        offset += np.cols;
      }
      break;
    }
    case Op::kGatherRows: {
      Node& a = nodes_[n.inputs[0]];
      for (int i = 0; i < n.rows; ++i) {
        for (int j = 0; j < n.cols; ++j) {
          a.grad[elems(n.indices[i], n.cols) + j] +=
              n.grad[elems(i, n.cols) + j];
        }
      }
      break;
    }
    case Op::kScatterAddRows: {
      Node& a = nodes_[n.inputs[0]];
      for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < n.cols; ++j) {
          a.grad[elems(i, n.cols) + j] +=
              n.grad[elems(n.indices[i], n.cols) + j];
        }
      }
      break;
    }
    case Op::kSoftmaxRows: {
      Node& a = nodes_[n.inputs[0]];
      for (int i = 0; i < n.rows; ++i) {
        const double* y = n.data.data() + elems(i, n.cols);
        const double* dy = n.grad.data() + elems(i, n.cols);
        double dot = 0.0;
        for (int j = 0; j < n.cols; ++j) dot += dy[j] * y[j];
        for (int j = 0; j < n.cols; ++j) {
          a.grad[elems(i, n.cols) + j] += y[j] * (dy[j] - dot);
        }
      }
      break;
    }
    case Op::kCeFromLogits: {
      Node& a = nodes_[n.inputs[0]];
      double g = n.grad[0];
      for (int i = 0; i < a.rows; ++i) {
        const double* row = a.data.data() + elems(i, a.cols);
        double mx = row[0];
        for (int j = 1; j < a.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < a.cols; ++j) sum += std::exp(row[j] - mx);
        for (int j = 0; j < a.cols; ++j) {
          double soft = std::exp(row[j] - mx) / sum;
          double onehot = j == n.indices[i] ? 1.0 : 0.0;
          a.grad[elems(i, a.cols) + j] += g * (soft - onehot);
        }
      }
      break;
    }
    case Op::kPickSum: {
      Node& a = nodes_[n.inputs[0]];
      double g = n.grad[0];
      for (int i = 0; i < a.rows; ++i) {
        a.grad[elems(i, a.cols) + n.indices[i]] += g;
      }
      break;
    }
  }
}

}  // namespace dmol
