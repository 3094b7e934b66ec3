//! Clustering with extreme-value tail models.
//!
//! Besides Lloyd's k-means (with random or k-means++ seeding) this crate provides
//! two variants that model, for every centroid, the distribution of negative
//! distances to samples outside its group with an extreme-value law and assign
//! samples by maximum *covering probability*:
//!
//! - **GEV k-means** fits a Generalized Extreme Value distribution to block maxima;
//! - **GPD k-means** fits a Generalized Pareto distribution to threshold excesses.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` / `*32`
//! aliases below name the common instantiations.

pub mod cluster;
pub mod data;
pub mod dist;
pub mod error;
pub mod fit;
pub mod matrix;
pub mod metrics;
pub mod optim;
pub mod scalar;
pub mod tail;

pub use cluster::{
    assign_labels, covering_probability, gev_kmeans, gpd_kmeans, init_kmeanspp, init_random, kmeans_objective,
    lloyd_kmeans, objective_j_prime, run, run_from, update_centroids, ClusterModel, ClusterOutcome, Init, Kind, RunConfig,
    TailFit, Timings,
};
pub use data::{Dataset, SynthConfig};
pub use dist::{GevParams, GpdParams, Support, TailDistribution};
pub use error::{Error, Result};
pub use fit::{fit_gev, fit_gpd, FitOptions, FitReport};
pub use matrix::Matrix;
pub use metrics::{MetricReport, QqDiagnostic};
pub use scalar::Scalar;
pub use tail::{BmmConfig, PotConfig, TailSample};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type GevParams64 = GevParams<f64>;
pub type GevParams32 = GevParams<f32>;
pub type GpdParams64 = GpdParams<f64>;
pub type GpdParams32 = GpdParams<f32>;
pub type ClusterModel64 = ClusterModel<f64>;
pub type ClusterModel32 = ClusterModel<f32>;
pub type ClusterOutcome64 = ClusterOutcome<f64>;
pub type ClusterOutcome32 = ClusterOutcome<f32>;
pub type TailFit64 = TailFit<f64>;
pub type TailFit32 = TailFit<f32>;
