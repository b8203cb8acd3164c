pub mod asc;
pub mod obj;
mod persist;
pub mod pnm;
mod scene;
pub mod wkt;
pub mod worldfile;

pub use persist::{artifact_name, persist_stage, Artifact, Payload};
pub use scene::{load_scene, normalize_classmap, Scene, ScenePaths};
pub use wkt::RoadNetwork;
