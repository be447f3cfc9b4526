use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json, DatasetError, GuidewireType, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    pub guidewire_type: GuidewireType,
    pub fluid: bool,
    pub frame_count: usize,
    /// Relative to the manifest's directory.
    pub annotation_path: String,
    /// Rig file (both camera bundles), relative to the manifest's directory.
    pub camera_bundle_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub videos: Vec<VideoEntry>,
}

impl Manifest {
    pub fn new(videos: Vec<VideoEntry>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            videos,
        }
    }
}

/// Frame counts per guidewire type and fluid condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CompositionTable {
    pub angled_fluid: usize,
    pub angled_no_fluid: usize,
    pub straight_fluid: usize,
    pub straight_no_fluid: usize,
}

/// Reference composition: angled 3664 with fluid and 2472 without,
/// straight 484 with fluid and 2126 without.
pub const REFERENCE_COMPOSITION: CompositionTable = CompositionTable {
    angled_fluid: 3664,
    angled_no_fluid: 2472,
    straight_fluid: 484,
    straight_no_fluid: 2126,
};

impl CompositionTable {
    pub fn angled(&self) -> usize {
        self.angled_fluid + self.angled_no_fluid
    }

    pub fn straight(&self) -> usize {
        self.straight_fluid + self.straight_no_fluid
    }

    pub fn with_fluid(&self) -> usize {
        self.angled_fluid + self.straight_fluid
    }

    pub fn without_fluid(&self) -> usize {
        self.angled_no_fluid + self.straight_no_fluid
    }

    pub fn total(&self) -> usize {
        self.angled() + self.straight()
    }

    pub fn to_csv(&self) -> String {
        format!(
            "guidewire_type,fluid,no_fluid,total\nangled,{},{},{}\nstraight,{},{},{}\ntotal,{},{},{}\n",
            self.angled_fluid,
            self.angled_no_fluid,
            self.angled(),
            self.straight_fluid,
            self.straight_no_fluid,
            self.straight(),
            self.with_fluid(),
            self.without_fluid(),
            self.total()
        )
    }
}

impl fmt::Display for CompositionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>8} {:>8} {:>8}", "", "fluid", "no fluid", "total")?;
        writeln!(
            f,
            "{:<10} {:>8} {:>8} {:>8}",
            "angled",
            self.angled_fluid,
            self.angled_no_fluid,
            self.angled()
        )?;
        writeln!(
            f,
            "{:<10} {:>8} {:>8} {:>8}",
            "straight",
            self.straight_fluid,
            self.straight_no_fluid,
            self.straight()
        )?;
        write!(
            f,
            "{:<10} {:>8} {:>8} {:>8}",
            "total",
            self.with_fluid(),
            self.without_fluid(),
            self.total()
        )
    }
}

/// Checks the schema and id uniqueness; with `base` set, also that every
/// referenced path exists relative to it.
pub fn validate_manifest(manifest: &Manifest, base: Option<&Path>) -> Result<(), DatasetError> {
    let origin = "manifest";
    if manifest.schema != SCHEMA_VERSION {
        return Err(DatasetError::schema(
            origin,
            format!("unsupported schema version {}", manifest.schema),
        ));
    }
    let mut ids = BTreeSet::new();
    for v in &manifest.videos {
        if !ids.insert(v.video_id.as_str()) {
            return Err(DatasetError::invariant(
                origin,
                format!("duplicate video_id '{}'", v.video_id),
            ));
        }
        if let Some(base) = base {
            for p in [&v.annotation_path, &v.camera_bundle_path] {
                if !base.join(p).exists() {
                    return Err(DatasetError::invariant(
                        origin,
                        format!("video '{}': missing file {}", v.video_id, base.join(p).display()),
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn manifest_stats(manifest: &Manifest) -> Result<CompositionTable, DatasetError> {
    validate_manifest(manifest, None)?;
    let mut t = CompositionTable::default();
    for v in &manifest.videos {
        let cell = match (v.guidewire_type, v.fluid) {
            (GuidewireType::Angled, true) => &mut t.angled_fluid,
            (GuidewireType::Angled, false) => &mut t.angled_no_fluid,
            (GuidewireType::Straight, true) => &mut t.straight_fluid,
            (GuidewireType::Straight, false) => &mut t.straight_no_fluid,
        };
        *cell += v.frame_count;
    }
    Ok(t)
}

/// A manifest with the reference composition, split into videos of at
/// most 250 frames. Referenced files do not exist.
pub fn reference_manifest() -> Manifest {
    let cells = [
        (GuidewireType::Angled, true, REFERENCE_COMPOSITION.angled_fluid),
        (GuidewireType::Angled, false, REFERENCE_COMPOSITION.angled_no_fluid),
        (GuidewireType::Straight, true, REFERENCE_COMPOSITION.straight_fluid),
        (GuidewireType::Straight, false, REFERENCE_COMPOSITION.straight_no_fluid),
    ];
    let mut videos = Vec::new();
    for (ty, fluid, mut remaining) in cells {
        let tag = if fluid { "fluid" } else { "dry" };
        let mut k = 0;
        while remaining > 0 {
            let n = remaining.min(250);
            let id = format!("{ty}_{tag}_{k:02}");
            videos.push(VideoEntry {
                annotation_path: format!("annotations/{id}.json"),
                camera_bundle_path: "rig.json".into(),
                video_id: id,
                guidewire_type: ty,
                fluid,
                frame_count: n,
            });
            remaining -= n;
            k += 1;
        }
    }
    Manifest::new(videos)
}

pub fn load_manifest(path: &Path) -> Result<Manifest, DatasetError> {
    let m: Manifest = read_json(path, "manifest")?;
    validate_manifest(&m, None).map_err(|e| match e {
        DatasetError::Invariant { message, .. } => DatasetError::invariant(&path.display().to_string(), message),
        other => other,
    })?;
    Ok(m)
}

pub fn save_manifest(path: &Path, manifest: &Manifest) -> Result<(), DatasetError> {
    validate_manifest(manifest, None)?;
    write_json(path, manifest)
}
