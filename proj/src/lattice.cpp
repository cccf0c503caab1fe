#include "peierls/lattice.hpp"

namespace peierls {

KGrid make_kgrid(const Lattice& lat, const std::vector<int>& shape) {
  if (static_cast<int>(shape.size()) != lat.dim)
    throw Error(ErrorKind::Geometry, "k-grid shape must have one entry per lattice dimension");
  std::size_t count = 1;
  for (int n : shape) {
    if (n < 1) throw Error(ErrorKind::Geometry, "k-grid shape entries must be >= 1");
    count *= static_cast<std::size_t>(n);
  }
  KGrid grid{lat, shape, MatrixX(lat.dim, static_cast<Eigen::Index>(count))};
  for (std::size_t i = 0; i < count; ++i) {
    const auto m = grid.multi_index(i);
    VectorX alpha(lat.dim);
    for (int j = 0; j < lat.dim; ++j) alpha(j) = -0.5 + (2.0 * m[j] + 1.0) / (2.0 * shape[j]);
    grid.points.col(static_cast<Eigen::Index>(i)) = lat.dual * alpha;
  }
  return grid;
}

std::vector<int> KGrid::multi_index(std::size_t flat) const {
  std::vector<int> m(shape.size());
  for (std::size_t j = 0; j < shape.size(); ++j) {
    m[j] = static_cast<int>(flat % static_cast<std::size_t>(shape[j]));
    flat /= static_cast<std::size_t>(shape[j]);
  }
  return m;
}

std::size_t KGrid::flat_index(const std::vector<int>& multi) const {
  std::size_t flat = 0;
  for (std::size_t j = shape.size(); j-- > 0;) flat = flat * static_cast<std::size_t>(shape[j]) + static_cast<std::size_t>(multi[j]);
  return flat;
}

std::size_t KGrid::neighbor(std::size_t i, int axis, int step, int* shift) const {
  auto m = multi_index(i);
  const int n = shape[static_cast<std::size_t>(axis)];
  int v = m[static_cast<std::size_t>(axis)] + step;
  int crossed = 0;
  while (v >= n) { v -= n; ++crossed; }
  while (v < 0) { v += n; --crossed; }
  m[static_cast<std::size_t>(axis)] = v;
  if (shift) *shift = crossed;
  return flat_index(m);
}

}  // namespace peierls
