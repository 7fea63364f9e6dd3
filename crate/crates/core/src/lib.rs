pub mod expr;
pub mod lax;
pub mod symmetry;
pub mod reduction;
pub mod oracle;
