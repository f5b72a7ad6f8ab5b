//! Numerical engines generic over the real scalar type.

pub mod cutting_plane;
pub mod lp;
pub mod opnorm;
pub mod vertices;

pub use cutting_plane::{solve_spectral, AffineHermitian, CuttingPlaneError, CuttingPlaneOptions, CuttingPlaneResult, SpectralProgram};
pub use lp::{solve_lp, LinearProgram, LpError, LpStatus, Sense, Solution, LP_MAX_PIVOTS};
pub use opnorm::{min_opnorm_affine, min_opnorm_constrained, min_opnorm_lp, AffineFamily, OpNormError, OpNormMin};
pub use vertices::{enum_vertices, lex_cmp, Polytope, VertexError, VERTEX_DIM_LIMIT};
