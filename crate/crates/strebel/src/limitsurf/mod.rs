//! Half-plane limit surfaces: admissible metric ribbon graphs with end tags,
//! their topology, partial evaluation of the limit Teichmüller distance, and
//! grid-based flat distances with Gromov-Hausdorff ε-relations.

mod metric;
mod model;

pub use metric::{flat_distance, gh_epsilon_check, EpsilonRelationWitness, FlatDistance, FlatPoint, GhError, STENCIL_ETA};
pub use model::{
    build_limit_model, dbar_distance, limit_models, DbarReport, DbarTerm, EndTag, GraphSpec, LimitError, LimitModel,
    ModelFace, ModelHalfEdge, ModelVertex,
};
