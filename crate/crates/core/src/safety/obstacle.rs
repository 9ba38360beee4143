use nalgebra::Vector3;
use serde::Serialize;

use super::SafetyError;
use crate::geometry::{cuboid_bounding_box, Cuboid, Point3, Primitive, Rect3, Segment3};

/// Obstacle geometry at its current pose.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Sphere { center: Point3, radius: f64 },
    Capsule { segment: Segment3, radius: f64 },
    /// Replaced by its optimized bounding volume unless `exact`, in which case
    /// each face becomes its own constraint.
    Cuboid { cuboid: Cuboid, exact: bool },
    Rect { rect: Rect3 },
}

/// One distance primitive of an obstacle with the radius it is inflated by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObstaclePart {
    pub primitive: Primitive,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Obstacle {
    pub id: String,
    pub shape: Shape,
    /// Reference position `p_j`; moves with the shape.
    pub position: Point3,
    pub velocity: Vector3<f64>,
    pub velocity_measured: Vector3<f64>,
    pub eps_v: f64,
    /// Extra clearance added to `R_ij`, meters.
    pub margin: f64,
    parts: Vec<ObstaclePart>,
}

impl Shape {
    fn reference(&self) -> Point3 {
        match self {
            Shape::Sphere { center, .. } => *center,
            Shape::Capsule { segment, .. } => segment.point_at(0.5),
            Shape::Cuboid { cuboid, .. } => cuboid.center(),
            Shape::Rect { rect } => rect.center(),
        }
    }

    fn parts(&self) -> Vec<ObstaclePart> {
        match self {
            Shape::Sphere { center, radius } => vec![ObstaclePart { primitive: Primitive::Point(*center), radius: *radius }],
            Shape::Capsule { segment, radius } => {
                vec![ObstaclePart { primitive: Primitive::Segment(*segment), radius: *radius }]
            }
            Shape::Cuboid { cuboid, exact: false } => {
                let b = cuboid_bounding_box(cuboid);
                vec![ObstaclePart { primitive: Primitive::Rect(b.rect2), radius: b.r_e }]
            }
            Shape::Cuboid { cuboid, exact: true } => {
                cuboid.faces().into_iter().map(|r| ObstaclePart { primitive: Primitive::Rect(r), radius: 0.0 }).collect()
            }
            Shape::Rect { rect } => vec![ObstaclePart { primitive: Primitive::Rect(*rect), radius: 0.0 }],
        }
    }

    fn translated(&self, d: &Vector3<f64>) -> Shape {
        match self {
            Shape::Sphere { center, radius } => Shape::Sphere { center: center + d, radius: *radius },
            Shape::Capsule { segment, radius } => Shape::Capsule { segment: segment.translated(d), radius: *radius },
            Shape::Cuboid { cuboid, exact } => Shape::Cuboid { cuboid: cuboid.translated(d), exact: *exact },
            Shape::Rect { rect } => Shape::Rect { rect: rect.translated(d) },
        }
    }
}

impl Obstacle {
    /// Builds an obstacle and checks `‖v̂ − v‖ ≤ ε_v`.
    pub fn new(
        id: impl Into<String>,
        shape: Shape,
        velocity: Vector3<f64>,
        velocity_measured: Vector3<f64>,
        eps_v: f64,
        margin: f64,
    ) -> Result<Self, SafetyError> {
        let id = id.into();
        let err = |msg: String| Err(SafetyError::Obstacle { id: id.clone(), msg });
        if let Shape::Sphere { radius, .. } | Shape::Capsule { radius, .. } = &shape {
            if !(*radius >= 0.0) {
                return err(format!("radius must be non-negative, got {radius}"));
            }
        }
        if !(eps_v >= 0.0 && margin >= 0.0) {
            return err(format!("eps_v and margin must be non-negative (eps_v = {eps_v}, margin = {margin})"));
        }
        if !velocity.iter().chain(velocity_measured.iter()).all(|v| v.is_finite()) {
            return err("non-finite velocity".into());
        }
        let gap = (velocity_measured - velocity).norm();
        if gap > eps_v * (1.0 + 1e-12) + 1e-15 {
            return err(format!("|v_hat - v| = {gap} exceeds eps_v = {eps_v}"));
        }
        let parts = shape.parts();
        Ok(Self { id, position: shape.reference(), shape, velocity, velocity_measured, eps_v, margin, parts })
    }

    pub fn parts(&self) -> &[ObstaclePart] {
        &self.parts
    }

    pub fn translate(&mut self, d: &Vector3<f64>) {
        self.shape = self.shape.translated(d);
        self.position += d;
        for p in &mut self.parts {
            p.primitive = p.primitive.translated(d);
        }
    }

    pub fn translated(&self, d: &Vector3<f64>) -> Self {
        let mut o = self.clone();
        o.translate(d);
        o
    }

    /// Updates true and measured velocity together, keeping the ε_v invariant.
    pub fn set_velocity(&mut self, velocity: Vector3<f64>, velocity_measured: Vector3<f64>) -> Result<(), SafetyError> {
        let gap = (velocity_measured - velocity).norm();
        if gap > self.eps_v * (1.0 + 1e-12) + 1e-15 {
            return Err(SafetyError::Obstacle {
                id: self.id.clone(),
                msg: format!("|v_hat - v| = {gap} exceeds eps_v = {}", self.eps_v),
            });
        }
        self.velocity = velocity;
        self.velocity_measured = velocity_measured;
        Ok(())
    }
}
