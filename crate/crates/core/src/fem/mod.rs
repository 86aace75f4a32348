//! P1 finite elements on the periodic strip with the DtN closure on top.

mod assembly;
mod mesh;
mod solve;

pub use assembly::{
    assemble_b, assemble_b_transformed, assemble_load, assemble_load_transformed, bary_point,
    default_n_max, dtn_block, element_gradients, element_matrix, element_matrix_transformed,
    transformed_coefficients, Csc, DtnBlock, SparseSystem, VectorField,
};
pub use mesh::{build_mesh, EdgeTag, Mesh, Triangle};
pub use solve::{
    factor, field_norms, integrate_h1_sq, norms, pushforward_h1_sq, solve, Factored, FieldSolution,
    Norms, RESIDUAL_TOL,
};
