//! Writes the UR10 reference model and the eccentric test payload as TOML,
//! the inputs every `dynid` subcommand starts from.
//!
//! cargo run --example reference_model -- [out_dir]

use std::path::PathBuf;

use dynid::dataio::reference::{eccentric_payload, ur10_reference};
use dynid::dataio::{PayloadFile, RobotModel};
use dynid::payload::KnownParameters;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("dynid"));
    std::fs::create_dir_all(&dir)?;

    let robot = ur10_reference();
    robot.write(&dir.join("robot.toml"))?;
    let back = RobotModel::read(&dir.join("robot.toml"))?;
    assert_eq!(back.dof(), 6);
    println!("robot.toml: {} joints, stage {}, provenance {}", back.dof(), back.stage().name(), back.metadata.provenance);

    // Stage 3 treats the mass, first moment along z and two inertia
    // diagonals as unknown; the rest is taken from the file.
    let payload = PayloadFile {
        spec: eccentric_payload(),
        known: KnownParameters::all_except(&["m", "mz", "ixx", "iyy"])?,
    };
    payload.write(&dir.join("payload.toml"))?;
    println!(
        "payload.toml: {:.2} kg, COM {:?} m in the flange frame",
        payload.spec.mass,
        payload.spec.com_l.as_slice()
    );
    println!("written to {}", dir.display());
    Ok(())
}
