use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{RobotError, JOINT_COUNT};

const DEFAULT_MODEL_JSON: &str = include_str!("../../data/default_model.json");

/// Frame a link or joint hangs from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Frame {
    Base,
    Joint(usize),
}

impl From<Option<usize>> for Frame {
    fn from(v: Option<usize>) -> Self {
        v.map_or(Frame::Base, Frame::Joint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Origin {
    #[serde(default)]
    pub xyz: [f64; 3],
    /// Fixed-axis roll, pitch, yaw in radians.
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl Origin {
    pub fn isometry(&self) -> Isometry3<f64> {
        let [x, y, z] = self.xyz;
        let [r, p, yaw] = self.rpy;
        Isometry3::from_parts(Translation3::new(x, y, z), UnitQuaternion::from_euler_angles(r, p, yaw))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    /// Parent joint index, `null` for the base.
    pub parent: Option<usize>,
    #[serde(default)]
    pub origin: Origin,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub name: String,
    /// Joint frame the capsule is rigidly attached to, `null` for the base.
    pub frame: Option<usize>,
    pub p0: [f64; 3],
    pub p1: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseSpec {
    /// Radius of the disc that must stay inside the workspace box, meters.
    pub footprint_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    #[serde(default = "default_version")]
    version: u32,
    #[serde(default)]
    name: String,
    base: BaseSpec,
    joints: Vec<JointSpec>,
    links: Vec<LinkSpec>,
    #[serde(default)]
    self_collision_exclusions: Vec<[usize; 2]>,
}

fn default_version() -> u32 {
    1
}

/// Validated kinematic model. Joints are topologically ordered (a parent
/// always precedes its children), which the forward pass relies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct KinematicModel {
    pub version: u32,
    pub name: String,
    pub base: BaseSpec,
    pub joints: Vec<JointSpec>,
    pub links: Vec<LinkSpec>,
    pub self_collision_exclusions: Vec<[usize; 2]>,
    origins: Vec<Isometry3<f64>>,
    axes: Vec<Vector3<f64>>,
}

impl From<KinematicModel> for ModelFile {
    fn from(m: KinematicModel) -> Self {
        ModelFile {
            version: m.version,
            name: m.name,
            base: m.base,
            joints: m.joints,
            links: m.links,
            self_collision_exclusions: m.self_collision_exclusions,
        }
    }
}

impl TryFrom<ModelFile> for KinematicModel {
    type Error = RobotError;

    fn try_from(f: ModelFile) -> Result<Self, Self::Error> {
        let invalid = |msg: String| Err(RobotError::InvalidModel(msg));
        if f.joints.len() != JOINT_COUNT {
            return invalid(format!("expected {JOINT_COUNT} joints, found {}", f.joints.len()));
        }
        if f.links.is_empty() {
            return invalid("no links".into());
        }
        let mut axes = Vec::with_capacity(JOINT_COUNT);
        for (i, j) in f.joints.iter().enumerate() {
            if let Some(p) = j.parent {
                if p >= i {
                    return invalid(format!("joint {} ('{}') must come after its parent {p}", i, j.name));
                }
            }
            let axis = Vector3::from(j.axis);
            match axis.try_normalize(1e-12) {
                Some(a) => axes.push(a),
                None => return invalid(format!("joint '{}' has a zero axis", j.name)),
            }
        }
        for l in &f.links {
            if !(l.radius > 0.0 && l.radius.is_finite()) {
                return invalid(format!("link '{}' radius must be positive", l.name));
            }
            if let Some(k) = l.frame {
                if k >= JOINT_COUNT {
                    return invalid(format!("link '{}' references missing joint {k}", l.name));
                }
            }
        }
        for [a, b] in &f.self_collision_exclusions {
            if *a >= f.links.len() || *b >= f.links.len() {
                return invalid(format!("self-collision exclusion [{a}, {b}] references a missing link"));
            }
        }
        if !(f.base.footprint_radius >= 0.0) {
            return invalid("base footprint radius must be non-negative".into());
        }
        let origins = f.joints.iter().map(|j| j.origin.isometry()).collect();
        Ok(KinematicModel {
            version: f.version,
            name: f.name,
            base: f.base,
            joints: f.joints,
            links: f.links,
            self_collision_exclusions: f.self_collision_exclusions,
            origins,
            axes,
        })
    }
}

impl KinematicModel {
    /// The shipped 8-DoF reference model (planar base, 6 revolute joints, ~1 m reach).
    pub fn default_model() -> Self {
        Self::from_json_str(DEFAULT_MODEL_JSON).expect("bundled model is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self, RobotError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, RobotError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub(crate) fn joint_origin(&self, j: usize) -> &Isometry3<f64> {
        &self.origins[j]
    }

    pub(crate) fn joint_axis(&self, j: usize) -> &Vector3<f64> {
        &self.axes[j]
    }

    pub fn link_frame(&self, i: usize) -> Frame {
        self.links[i].frame.into()
    }

    /// Joints whose motion moves `frame`, root first.
    pub fn joint_chain(&self, frame: Frame) -> Vec<usize> {
        let mut chain = Vec::new();
        let mut cur = match frame {
            Frame::Base => None,
            Frame::Joint(j) => Some(j),
        };
        while let Some(j) = cur {
            chain.push(j);
            cur = self.joints[j].parent;
        }
        chain.reverse();
        chain
    }

    fn parent_frame(&self, f: Frame) -> Option<Frame> {
        match f {
            Frame::Base => None,
            Frame::Joint(j) => Some(self.joints[j].parent.into()),
        }
    }

    /// Nearest strict ancestor frame that carries at least one link.
    fn linked_ancestor(&self, f: Frame) -> Option<Frame> {
        let mut cur = self.parent_frame(f);
        while let Some(c) = cur {
            if self.links.iter().any(|l| Frame::from(l.frame) == c) {
                return Some(c);
            }
            cur = self.parent_frame(c);
        }
        None
    }

    /// Links on the same rigid body, or on bodies joined by a single joint
    /// (frames without links in between are skipped).
    pub fn links_adjacent(&self, i: usize, j: usize) -> bool {
        let (fi, fj) = (self.link_frame(i), self.link_frame(j));
        fi == fj || self.linked_ancestor(fi) == Some(fj) || self.linked_ancestor(fj) == Some(fi)
    }

    /// Non-adjacent link pairs `(i, j)` with `i < j`, minus the configured exclusions.
    pub fn self_collision_pairs(&self) -> Vec<(usize, usize)> {
        let excluded = |i: usize, j: usize| {
            self.self_collision_exclusions.iter().any(|&[a, b]| (a, b) == (i, j) || (a, b) == (j, i))
        };
        let n = self.links.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.links_adjacent(i, j) && !excluded(i, j))
            .collect()
    }
}
