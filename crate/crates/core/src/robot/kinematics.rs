use nalgebra::{Isometry3, Point3 as NPoint3, SMatrix, Translation3, UnitQuaternion, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::model::{Frame, KinematicModel};
use super::{RobotState, StateVector, JOINT_COUNT, STATE_DIM};
use crate::geometry::{Point3, Segment3};

/// ∂(endpoint position)/∂(state), 3 × 8.
pub type EndpointJacobian = SMatrix<f64, 3, STATE_DIM>;

/// One capsule per model link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub segments: Vec<Segment3>,
    pub radii: Vec<f64>,
}

/// Jacobians of both endpoints of every link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkJacobians {
    pub endpoints: Vec<[EndpointJacobian; 2]>,
}

struct Frames {
    base: Isometry3<f64>,
    joints: Vec<Isometry3<f64>>,
}

impl Frames {
    fn compute(model: &KinematicModel, state: &RobotState) -> Self {
        let b = state.base();
        let base = Isometry3::from_parts(Translation3::new(b.x, b.y, 0.0), UnitQuaternion::identity());
        let mut joints: Vec<Isometry3<f64>> = Vec::with_capacity(JOINT_COUNT);
        for (j, spec) in model.joints.iter().enumerate() {
            let parent = spec.parent.map_or(base, |p| joints[p]);
            let axis = Unit::new_unchecked(*model.joint_axis(j));
            let rot = UnitQuaternion::from_axis_angle(&axis, state.joints()[j]);
            joints.push(parent * model.joint_origin(j) * Isometry3::from_parts(Translation3::identity(), rot));
        }
        Self { base, joints }
    }

    fn frame(&self, f: Frame) -> &Isometry3<f64> {
        match f {
            Frame::Base => &self.base,
            Frame::Joint(j) => &self.joints[j],
        }
    }

    fn axis_world(&self, model: &KinematicModel, j: usize) -> Vector3<f64> {
        self.joints[j].rotation * model.joint_axis(j)
    }

    fn origin_world(&self, j: usize) -> Vector3<f64> {
        self.joints[j].translation.vector
    }

    fn endpoints(&self, model: &KinematicModel, i: usize) -> [Point3; 2] {
        let l = &model.links[i];
        let t = self.frame(model.link_frame(i));
        [
            (t * NPoint3::from(Vector3::from(l.p0))).coords,
            (t * NPoint3::from(Vector3::from(l.p1))).coords,
        ]
    }
}

pub fn forward_kinematics(model: &KinematicModel, state: &RobotState) -> LinkGeometry {
    let frames = Frames::compute(model, state);
    let segments = (0..model.link_count())
        .map(|i| {
            let [p0, p1] = frames.endpoints(model, i);
            Segment3::new(p0, p1)
        })
        .collect();
    LinkGeometry { segments, radii: model.links.iter().map(|l| l.radius).collect() }
}

pub fn link_jacobians(model: &KinematicModel, state: &RobotState) -> LinkJacobians {
    let frames = Frames::compute(model, state);
    let endpoints = (0..model.link_count())
        .map(|i| {
            let chain = model.joint_chain(model.link_frame(i));
            frames.endpoints(model, i).map(|p| {
                let mut jac = EndpointJacobian::zeros();
                jac[(0, 0)] = 1.0;
                jac[(1, 1)] = 1.0;
                for &j in &chain {
                    let w = frames.axis_world(model, j);
                    jac.set_column(2 + j, &w.cross(&(p - frames.origin_world(j))));
                }
                jac
            })
        })
        .collect();
    LinkJacobians { endpoints }
}

/// Directional derivative `∂(J(x)·w)/∂x` for every endpoint.
///
/// Used when the link is advanced by the first-order prediction `J·w`, so the
/// state gradient of the predicted endpoint is `J + ∂(J·w)/∂x`.
pub fn prediction_jacobians(model: &KinematicModel, state: &RobotState, w: &StateVector) -> LinkJacobians {
    let frames = Frames::compute(model, state);
    let axes: Vec<Vector3<f64>> = (0..JOINT_COUNT).map(|j| frames.axis_world(model, j)).collect();
    let origins: Vec<Vector3<f64>> = (0..JOINT_COUNT).map(|j| frames.origin_world(j)).collect();
    let endpoints = (0..model.link_count())
        .map(|i| {
            let chain = model.joint_chain(model.link_frame(i));
            frames.endpoints(model, i).map(|p| {
                let mut out = EndpointJacobian::zeros();
                // chain is root first, so chain position encodes ancestry along this endpoint's path.
                for (pk, &k) in chain.iter().enumerate() {
                    let mut col = Vector3::zeros();
                    for (pj, &j) in chain.iter().enumerate() {
                        let wj = w[2 + j];
                        if wj == 0.0 {
                            continue;
                        }
                        let r = p - origins[j];
                        col += if pk < pj {
                            axes[k].cross(&axes[j]).cross(&r) + axes[j].cross(&axes[k].cross(&r))
                        } else {
                            axes[j].cross(&axes[k].cross(&(p - origins[k])))
                        } * wj;
                    }
                    out.set_column(2 + k, &col);
                }
                out
            })
        })
        .collect();
    LinkJacobians { endpoints }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use std::f64::consts::PI;

    fn state(base: [f64; 2], q: [f64; 6]) -> RobotState {
        RobotState::new(Vector2::from(base), q).unwrap()
    }

    #[test]
    fn base_translation_shifts_every_endpoint() {
        let m = KinematicModel::default_model();
        let q = [0.3, -0.7, 1.1, 0.2, -0.4, 0.9];
        let a = forward_kinematics(&m, &state([0.0, 0.0], q));
        let b = forward_kinematics(&m, &state([1.0, 2.0], q));
        for (sa, sb) in a.segments.iter().zip(&b.segments) {
            assert!((sb.p0 - sa.p0 - Vector3::new(1.0, 2.0, 0.0)).norm() < 1e-15);
            assert!((sb.p1 - sa.p1 - Vector3::new(1.0, 2.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn full_turn_is_identity() {
        let m = KinematicModel::default_model();
        let a = forward_kinematics(&m, &RobotState::zero());
        let mut s = RobotState::zero().to_vector();
        s[2] = 2.0 * PI;
        let b = forward_kinematics(&m, &RobotState::from_vector(&s).unwrap());
        for (sa, sb) in a.segments.iter().zip(&b.segments) {
            assert!((sa.p0 - sb.p0).norm() < 1e-12 && (sa.p1 - sb.p1).norm() < 1e-12);
        }
    }

    #[test]
    fn base_columns_are_planar_identity() {
        let m = KinematicModel::default_model();
        let jac = link_jacobians(&m, &state([0.4, -1.0], [0.1, 0.5, -0.3, 0.8, 0.2, -0.6]));
        for pair in &jac.endpoints {
            for j in pair {
                assert_eq!(j.column(0).into_owned(), Vector3::x());
                assert_eq!(j.column(1).into_owned(), Vector3::y());
            }
        }
    }
}
