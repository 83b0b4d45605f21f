//! End-to-end pipelines: shifted pencils, the corner Cauchy transform,
//! densities by Stieltjes inversion and Brown measures by hermitization.

mod pencil;
mod pipeline;

pub use pencil::{
    build_shifted_pencil, realize_at, realize_flr, realize_hermitized, realize_mat_at,
    GeneralizedRealization, RealizationPath, ShiftedPencil,
};
pub use pipeline::{
    brown_from_pencil, brown_schedule, cauchy_of_expr, compute_brown, compute_distribution,
    corner_limit, distribution_from_pencil, hermitized_cauchy, in_lower_half_plane,
    stieltjes_invert, uniform_grid, BrownGrid, CornerValue, DensityGrid, EpsSchedule, Grid2d,
    PreparedPencil, CORNER_EPS_RATIO,
};
