#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a serial twin with the
// same contract; tests pin them to bit-identical output and bench/ times them.

#include <vector>

#include "dkrrt/linalg.hpp"
#include "dkrrt/observables.hpp"

namespace dkrrt::kernels {

/// Lifts every column of X. Output is out_dim x X.cols().
MatrixXd lift_columns(const Dictionary& dict, const MatrixXd& x);
MatrixXd lift_columns_serial(const Dictionary& dict, const MatrixXd& x);

struct Disc {
  double u = 0.0;  // plane coordinates [m]
  double v = 0.0;
  double radius = 0.0;
};

struct GridGeometry {
  Index rows = 1;
  Index cols = 1;
  double u_min = 0.0;  // lower-left corner [m]
  double v_min = 0.0;
  double cell = 1.0;   // cell side [m]
};

/// Row-major occupancy: 1 where the cell center lies inside any disc, else 0.
VectorXd rasterize_discs(const GridGeometry& grid, const std::vector<Disc>& discs);
VectorXd rasterize_discs_serial(const GridGeometry& grid, const std::vector<Disc>& discs);

}  // namespace dkrrt::kernels
