//! The packaged 24-hour reference instance and its 30 realised direction
//! sequences.

use crate::instance::{read_direction_sequences, DirectionSequence, Instance};

pub const INSTANCE_JSON: &str = include_str!("../data/reference_instance.json");
pub const DIRECTIONS_CSV: &str = include_str!("../data/reference_directions.csv");

pub fn instance() -> Instance {
    Instance::from_json_str(INSTANCE_JSON).expect("packaged instance is valid")
}

pub fn directions() -> Vec<DirectionSequence> {
    read_direction_sequences(DIRECTIONS_CSV.as_bytes(), 24).expect("packaged directions are valid")
}
