pub mod chains;
pub mod grammar;
pub mod inference;
pub mod lang;
pub mod likelihood;
pub mod task;

pub use task::TaskSignature;
