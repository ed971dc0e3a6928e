//! The master: clustering, rate accounting and the simulated protocol run.

mod cluster;
mod protocol;
mod rate;

pub use cluster::{cluster_workers, compute_d, min_cluster_size, required_results, ClusterPlan, PlannedCluster};
pub use protocol::{
    run_protocol, ClusterLog, ClusterRecord, CoefOverride, InterpolationLog, ProtocolConfig, RoundLog, RoundRecord,
    RunMetrics, RunOutcome,
};
pub use rate::{
    improved_scheme_rate, proportional_rate, proportional_responses, proportional_responses_exact, rate_ratio,
    round_ratios, to_f64, ProportionalPrediction,
};
