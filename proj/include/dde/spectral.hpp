#pragma once

#include "dde/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dde {

struct SpectralConfig {
  double eps_trunc = 1e-4;
  /// Loading threshold; non-positive means 1 / (2.5 sqrt(J)) for the layer's J.
  double delta_thresh = 0.0;
  /// Coefficient scale C_g; unset means the per-family default.
  std::optional<double> link_scale;
  double singular_floor_mult = 1.01;
  Index varimax_max_iter = 100;
  double varimax_tol = 1e-6;
};

void validate(const SpectralConfig& cfg);

struct SpectralInit {
  DdeModel model0;
  LatentAssignment A0;
  GraphSet G0;
  std::vector<Vector> singular_values;  // spectrum of the data fed to each layer
  std::vector<std::string> warnings;
};

/// Low-rank denoising followed by the inverse mean map, column by column.
/// Columns with dispersion families pass through untouched (log scale for
/// lognormal cells).
Matrix denoise_and_linearize(const RowMatrix& Y, Index K, const std::vector<FamilyKind>& kinds,
                             const SpectralConfig& cfg, std::vector<std::string>* warnings = nullptr,
                             Vector* singular_values = nullptr);

/// Raw varimax criterion: sum over columns of the variance of squared loadings.
double varimax_criterion(const Matrix& V);

struct VarimaxResult {
  Matrix rotated;
  Matrix rotation;
  double criterion = 0.0;
  Index sweeps = 0;
};

VarimaxResult varimax(const Matrix& V, Index max_iter = 100, double tol = 1e-6);

struct LayerInit {
  BinaryMatrix A;  // N x K
  Matrix B;        // J x (K+1), intercept first
  BinaryMatrix G;  // J x K
  Vector gamma;    // residual sd per column (meaningful for dispersion kinds)
};

LayerInit init_layer(const Matrix& Z, Index K, const std::vector<FamilyKind>& kinds,
                     const SpectralConfig& cfg, std::vector<std::string>* warnings = nullptr);

SpectralInit spectral_init(const Dataset& data, const std::vector<Index>& K,
                           const ObservedFamily& family, const SpectralConfig& cfg = {});

struct DimensionSelection {
  std::vector<Index> K;
  std::vector<Vector> spectra;  // centered linearized spectrum at the chosen K, per layer
  std::vector<std::vector<Index>> grids;
  std::vector<std::string> warnings;
};

/// Spectral-ratio selection layer by layer. A non-empty grid_override
/// replaces the default candidate grid for every layer.
DimensionSelection select_latent_dims(const Dataset& data, Index D, const ObservedFamily& family,
                                      const SpectralConfig& cfg = {},
                                      const std::vector<Index>& grid_override = {});

}  // namespace dde
