//! Closed-chain manipulator dynamics and actuator sizing.

pub mod analysis;
pub mod dynamics;
pub mod kinematics;
pub mod math;
pub mod model;
pub mod pipeline;
pub mod sizing;
pub mod table;
pub mod trajectory;
