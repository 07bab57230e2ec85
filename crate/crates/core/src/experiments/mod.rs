//! Seeded simulation studies and fidelity rankings.

mod config;
mod io;
mod ranking;
mod simulate;

pub use config::{load_config, Mu2Mode, NoiseTarget, SimulationConfig};
pub use io::{read_embeddings, read_samples_csv, write_samples_csv};
pub use ranking::{
    run_ranking, CandidateReport, CandidateSet, MethodRanking, RankOrder, RankingReport, RankingTask,
};
pub use simulate::{
    make_noise_matrix, run_simulation, NoiseMatrix, ReplicationRecord, SimulationOutput, SummaryRow,
};
