pub mod bispecial;
pub mod corpus;
pub mod critexp;
pub mod error;
pub mod factor_oracle;
pub(crate) mod ser;
pub mod numeration;
pub mod substitution;
pub mod word;
