#pragma once

#include "ventsim/boundary.hpp"
#include "ventsim/field.hpp"
#include "ventsim/params.hpp"

#include <vector>

namespace ventsim {

struct Rect {
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    bool operator==(const Rect&) const = default;
};

/// Occupied cells of a grid. Heat and CO2 sources are spread uniformly
/// over the region so that coefficients keep their per-person meaning
/// regardless of resolution: each cell receives headcount / cell_count.
struct OccupancyField {
    Rect region;
    std::vector<int> cells; ///< flat cell indices with centers inside the region

    static OccupancyField build(const Grid& grid, const Rect& region);
    double density(double headcount) const {
        return cells.empty() ? 0.0 : headcount / static_cast<double>(cells.size());
    }
};

/// Which scalar a boundary operation acts on. Temperature has Dirichlet
/// values at the supply vent and the outside wall; CO2 only at the supply
/// vent; every other boundary is zero-flux.
enum class ScalarRole { Temperature, Co2 };

bool is_dirichlet_boundary(ScalarRole role, SegmentKind kind);

/// Semi-Lagrangian transport of a cell-centered scalar by the given MAC
/// velocity. Perimeter cells pass through; output extrema are bounded by
/// input extrema.
ScalarField advect_scalar(const ScalarField& f, const VectorField& v, double dt);

/// Explicit flux-form diffusion on interior cells. Fluxes through
/// zero-gradient boundary cells vanish, so an all-Neumann box conserves
/// the interior sum exactly. Throws on stability violation.
ScalarField diffuse_scalar(const ScalarField& f, const BoundaryMap& bmap, ScalarRole role,
                           double k, double dt);

/// field += coeff * density * dt on occupied cells.
void add_sources(ScalarField& f, const OccupancyField& occ, double coeff, double headcount,
                 double dt);

/// Net diffusive flux sum at one interior cell (the bracket multiplying
/// k*dt in diffuse_scalar). Shared with the reverse-mode kernels.
double scalar_flux_sum(const ScalarField& f, const BoundaryMap& bmap, ScalarRole role, int i,
                       int j);

/// Supply cells read u2; outside-wall cells read the ambient temperature;
/// all other perimeter cells copy their interior neighbor.
void apply_temperature_bc(ScalarField& t, const BoundaryMap& bmap, double u2, double t_ambient);

/// Supply cells read alpha*c_fresh + (1-alpha)*mean(C) with the room mean
/// taken from the field as passed (explicit coupling); all other perimeter
/// cells copy their interior neighbor. Returns the mean it used.
double apply_co2_bc(ScalarField& c, const BoundaryMap& bmap, double alpha, double c_fresh);

/// Interior neighbor of a perimeter cell (left/right rule first, matching
/// corner ownership).
std::pair<int, int> interior_neighbor(const Grid& g, int i, int j);

/// One transport substep for both scalars: BCs, advection, diffusion,
/// sources, BCs again.
void transport_step(ScalarField& t, ScalarField& c, const VectorField& v,
                    const BoundaryMap& bmap, const OccupancyField& occ, const ModelParams& params,
                    double u2, double headcount, double t_ambient, double c_fresh, double dt);

} // namespace ventsim
