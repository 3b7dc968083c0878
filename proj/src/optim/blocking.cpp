#include <algorithm>

#include "mupre/optim.hpp"

namespace mupre {

namespace {
void tile(std::size_t n, std::size_t b, std::vector<std::size_t>& start, std::vector<std::size_t>& size) {
  b = std::min(b, n);
  for (std::size_t s = 0; s < n; s += b) {
    start.push_back(s);
    size.push_back(std::min(b, n - s));
  }
}
}  // namespace

BlockLayout make_layout(std::size_t rows, std::size_t cols, std::size_t b_out, std::size_t b_in) {
  if (b_out == 0 || b_in == 0) throw DimensionError("block size must be positive");
  if (rows == 0 || cols == 0) throw DimensionError("cannot block an empty matrix");
  BlockLayout l;
  tile(rows, b_out, l.row_start, l.row_size);
  tile(cols, b_in, l.col_start, l.col_size);
  return l;
}

BlockedMatrix split(const Matrix& g, const BlockLayout& layout) {
  BlockedMatrix out{layout, {}};
  out.blocks.reserve(layout.count());
  for (std::size_t i = 0; i < layout.n_out(); ++i)
    for (std::size_t j = 0; j < layout.n_in(); ++j)
      out.blocks.push_back(g.block(layout.row_start[i], layout.col_start[j], layout.row_size[i], layout.col_size[j]));
  return out;
}

BlockedMatrix block_partition(const Matrix& g, std::size_t b_out, std::size_t b_in) {
  return split(g, make_layout(g.rows(), g.cols(), b_out, b_in));
}

Matrix reassemble(const BlockedMatrix& b) {
  const BlockLayout& l = b.layout;
  if (b.blocks.size() != l.count()) throw DimensionError("block count does not match layout");
  Matrix out(l.row_start.back() + l.row_size.back(), l.col_start.back() + l.col_size.back());
  for (std::size_t i = 0; i < l.n_out(); ++i)
    for (std::size_t j = 0; j < l.n_in(); ++j) out.set_block(l.row_start[i], l.col_start[j], b.blocks[i * l.n_in() + j]);
  return out;
}

}  // namespace mupre
