#include "dkrrt/kernels.hpp"

namespace dkrrt::kernels {

MatrixXd lift_columns(const Dictionary& dict, const MatrixXd& x) {
  MatrixXd out(dict.out_dim(), x.cols());
  const Index n = x.cols();
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j) out.col(j) = dict.lift(x.col(j));
  return out;
}

MatrixXd lift_columns_serial(const Dictionary& dict, const MatrixXd& x) {
  MatrixXd out(dict.out_dim(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) out.col(j) = dict.lift(x.col(j));
  return out;
}

namespace {

inline double cell_value(const GridGeometry& g, const std::vector<Disc>& discs, Index r, Index c) {
  const double u = g.u_min + (static_cast<double>(c) + 0.5) * g.cell;
  const double v = g.v_min + (static_cast<double>(r) + 0.5) * g.cell;
  for (const auto& d : discs) {
    const double du = u - d.u;
    const double dv = v - d.v;
    if (du * du + dv * dv <= d.radius * d.radius) return 1.0;
  }
  return 0.0;
}

}  // namespace

VectorXd rasterize_discs(const GridGeometry& grid, const std::vector<Disc>& discs) {
  VectorXd out(grid.rows * grid.cols);
  const Index rows = grid.rows;
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < grid.cols; ++c) out(r * grid.cols + c) = cell_value(grid, discs, r, c);
  return out;
}

VectorXd rasterize_discs_serial(const GridGeometry& grid, const std::vector<Disc>& discs) {
  VectorXd out(grid.rows * grid.cols);
  for (Index r = 0; r < grid.rows; ++r)
    for (Index c = 0; c < grid.cols; ++c) out(r * grid.cols + c) = cell_value(grid, discs, r, c);
  return out;
}

}  // namespace dkrrt::kernels
