pub mod eval;
pub mod frontend;
pub mod ir;
pub mod oracle;
pub mod rational;
pub mod symbolic;
pub mod transform;
