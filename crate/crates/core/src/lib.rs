pub mod analysis;
pub mod snm;
pub mod syntax;
pub mod value;
pub mod verify;
pub mod kernel;
