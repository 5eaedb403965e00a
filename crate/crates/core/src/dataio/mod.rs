//! Sample ingestion and preprocessing, file schemas, and the simulator used
//! as a ground-truth oracle.

pub mod filter;
pub mod model_file;
pub mod payload_file;
pub mod reference;
pub mod samples;
pub mod simulate;
pub mod table;

pub use filter::{lowpass, lowpass_channels};
pub use model_file::{FrictionLaw, FrictionLevel, FrictionModel, Identification, RobotModel, Stage};
pub use payload_file::PayloadFile;
pub use samples::{differentiate, read_samples, write_samples, SampleSet, Scenario, Source};
pub use simulate::{simulate, simulate_states, true_torques, AccelerationMode, NoiseSpec, SimulationConfig};
pub use table::Table;
