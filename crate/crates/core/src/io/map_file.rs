//! Map files: one JSON document with a metadata block and per-layer
//! landmark arrays.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::GroundTruth;
use crate::geometry::Circle;
use crate::map::{Landmark, MapConfig, SemanticPoleMap};

use super::{read_text, round_json, write_text};

const FORMAT: &str = "poleloc-map";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    format: String,
    version: u32,
    metadata: Metadata,
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Metadata {
    k: usize,
    d: usize,
    n_landmarks: usize,
    config: MapConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Layer {
    class_id: usize,
    landmarks: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    lx: f64,
    ly: f64,
    r: f64,
    obs_count: usize,
    prob: Vec<f64>,
    feature: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<GroundTruth>,
}

pub fn render_map(map: &SemanticPoleMap) -> String {
    let layers = map
        .layer_classes()
        .map(|class_id| Layer {
            class_id,
            landmarks: map
                .layer(class_id)
                .iter()
                .map(|l| Entry {
                    lx: l.circle.lx,
                    ly: l.circle.ly,
                    r: l.circle.r,
                    obs_count: l.obs_count,
                    prob: l.prob.clone(),
                    feature: l.feature.clone(),
                    truth: l.truth,
                })
                .collect(),
        })
        .collect();
    let doc = MapDoc {
        format: FORMAT.into(),
        version: VERSION,
        metadata: Metadata {
            k: map.k(),
            d: map.d(),
            n_landmarks: map.len(),
            config: map.config().clone(),
        },
        layers,
    };
    let mut value = serde_json::to_value(&doc).expect("map serializes");
    round_json(&mut value);
    let mut out = serde_json::to_string_pretty(&value).expect("map serializes");
    out.push('\n');
    out
}

pub fn parse_map(source: &str, text: &str) -> Result<SemanticPoleMap> {
    let schema = |m: String| Error::SchemaMismatch(format!("{source}: {m}"));
    let doc: MapDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: source.into(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if doc.format != FORMAT || doc.version != VERSION {
        return Err(schema(format!("expected {FORMAT} v{VERSION}, found {} v{}", doc.format, doc.version)));
    }
    let (k, d) = (doc.metadata.k, doc.metadata.d);
    let mut landmarks = Vec::new();
    for layer in doc.layers {
        for e in layer.landmarks {
            if e.prob.len() != k || e.feature.len() != d {
                return Err(schema(format!(
                    "landmark in layer {} has K={} d={}, metadata says K={k} d={d}",
                    layer.class_id,
                    e.prob.len(),
                    e.feature.len()
                )));
            }
            landmarks.push(Landmark {
                circle: Circle::new(e.lx, e.ly, e.r),
                feature: e.feature,
                prob: e.prob,
                class_id: layer.class_id,
                obs_count: e.obs_count,
                truth: e.truth,
            });
        }
    }
    if landmarks.len() != doc.metadata.n_landmarks {
        return Err(schema(format!(
            "metadata lists {} landmarks, layers hold {}",
            doc.metadata.n_landmarks,
            landmarks.len()
        )));
    }
    Ok(SemanticPoleMap::new(k, d, landmarks, doc.metadata.config))
}

pub fn read_map(path: &Path) -> Result<SemanticPoleMap> {
    parse_map(&path.display().to_string(), &read_text(path)?)
}

pub fn write_map(path: &Path, map: &SemanticPoleMap) -> Result<()> {
    write_text(path, &render_map(map))
}
