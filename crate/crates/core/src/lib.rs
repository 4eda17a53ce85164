//! Hierarchical log-linear models on binary tables: interaction parameters,
//! faithful hypergraphs, IPF fitting, Wald-test model search, and volumes of
//! strong-unfaithful distributions.

pub mod error;
pub mod fit;
pub mod hypergraph;
pub mod inference;
pub mod io;
pub mod loglin;
pub mod table;
pub mod volumes;

pub use error::{Error, Result};
pub use fit::{deviance, ipf_fit, kl_divergence, FitConfig, FitResult, IpfPlan};
pub use hypergraph::{is_decomposable, Hypergraph};
pub use inference::{backward_select, lambda_star, strong_faithfulness_check, wald_test, SearchConfig, SearchTrace};
pub use loglin::{design_matrix, faithful_hypergraph, interaction_vector, CondOddsRatioSpec, InteractionVector};
pub use table::{CountTable, JointDistribution, VarSet};
pub use volumes::{McConfig, VolumeEstimate};
