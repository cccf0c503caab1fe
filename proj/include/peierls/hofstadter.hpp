#pragma once

#include "peierls/geometry.hpp"

#include <optional>

namespace peierls {

/// Flux per plaquette alpha = p / q in units of the flux quantum.
struct FluxRational {
  int p = 0;
  int q = 1;

  Real alpha() const { return static_cast<Real>(p) / q; }
};

/// Reduces p / q to lowest terms (with a warning on stderr when it had to); q >= 1.
FluxRational make_flux(int p, int q);

/// Harper Bloch matrix for E(k) = cos k1 + cos k2: diagonal cos(2 pi alpha n + theta2), nearest-neighbour
/// hopping 1/2, corner hopping (1/2) e^{+-i q theta1}. theta1 has period 2 pi / q, theta2 period 2 pi.
MatrixXc harper_bloch_matrix(const FluxRational& flux, Real theta1, Real theta2);

struct SubbandInterval {
  Real lower = 0;
  Real upper = 0;
};

struct FluxSpectrum {
  FluxRational flux;
  std::vector<SubbandInterval> bands;
  std::vector<std::optional<int>> chern;  // empty unless requested; nullopt where a gap closes
};

/// Min / max of each eigenvalue branch over the theta_points^2 grid on [0, 2 pi / q)^2. The grid
/// contains 0 and pi / q when theta_points is even.
FluxSpectrum spectrum_at_flux(const FluxRational& flux, int theta_points = 64);

/// Plaquette Chern numbers of every subband on the magnetic zone [0, 2 pi / q) x [0, 2 pi), summed on
/// the [0, 2 pi / q)^2 cell that tiles it q times. Starts from points_per_period grid points per 2 pi / q and doubling until two offset grids agree.
/// Bands whose direct gap to a neighbour on the grid, or whose spectral interval separation from a
/// neighbour, falls below gap_tol get nullopt.
std::vector<std::optional<int>> subband_cherns(const FluxRational& flux, const FluxSpectrum& spectrum,
                                               int points_per_period = 12, Real gap_tol = 1e-6);
std::vector<std::optional<int>> subband_cherns(const FluxRational& flux, int points_per_period = 12,
                                               Real gap_tol = 1e-6);
/// Throws Degeneracy when the band is not gapped from its neighbours.
int subband_chern(const FluxRational& flux, int band, int points_per_period = 12);

/// Reduced fractions p / q in [0, 1] with q <= q_max, ascending.
std::vector<FluxRational> farey_sequence(int q_max);

struct ButterflyData {
  std::vector<FluxSpectrum> entries;
};

ButterflyData butterfly(int q_max, int theta_points = 64, bool with_chern = true);

}  // namespace peierls
