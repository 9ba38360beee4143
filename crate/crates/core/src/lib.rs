//! Safety filtering for a kinematic mobile manipulator among moving obstacles.
//!
//! A nominal velocity command is passed through a quadratic program whose
//! linear constraints come from control barrier functions built on exact
//! capsule/rectangle distances. The robust variant compensates for a matched
//! disturbance estimated by a disturbance observer and for bounded errors in
//! the measured obstacle velocities.

pub mod geometry;
pub mod io;
pub mod observer;
pub mod qp;
pub mod robot;
pub mod safety;
pub mod sim;
