use std::path::Path;
use std::sync::{Arc, OnceLock};

use super::spec::{ArchitectureName, ArchitectureSpec};
use crate::error::{Error, Result};

const VOICE: &str = include_str!("../../architectures/v1/voice.json");
const VOICE_FM: &str = include_str!("../../architectures/v1/voice_fm.json");
const PARAMETRIC: &str = include_str!("../../architectures/v1/parametric_synth.json");

/// One of the bundled architectures, parsed and validated once per process.
pub fn build_architecture(name: ArchitectureName) -> Arc<ArchitectureSpec> {
    static CACHE: [OnceLock<Arc<ArchitectureSpec>>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let (slot, text) = match name {
        ArchitectureName::Voice => (0, VOICE),
        ArchitectureName::VoiceFM => (1, VOICE_FM),
        ArchitectureName::ParametricSynth => (2, PARAMETRIC),
    };
    CACHE[slot]
        .get_or_init(|| {
            let spec = ArchitectureSpec::from_json(text).expect("bundled architecture is valid");
            assert_eq!(spec.name, name, "bundled architecture file mislabelled");
            Arc::new(spec)
        })
        .clone()
}

/// Loads an architecture from a JSON spec file.
pub fn load_architecture(path: &Path) -> Result<Arc<ArchitectureSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(Arc::new(ArchitectureSpec::from_json(&text)?))
}
