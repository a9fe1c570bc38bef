//! Logic documents shipped with the kernel.

use super::{register_logic, Logic};

pub const EVEN: &str = include_str!("../../../../logics/even.logic");
pub const FIRST_ORDER: &str = include_str!("../../../../logics/first-order.logic");

pub fn even() -> Logic {
    register_logic(EVEN).expect("even logic is well formed")
}

pub fn first_order() -> Logic {
    register_logic(FIRST_ORDER).expect("first-order logic is well formed")
}
