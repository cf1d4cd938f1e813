pub mod analyzer;
pub mod corpus;
pub mod diag;
pub mod emitter;
pub mod frontend;
pub mod lowering;
pub mod oracle;
pub mod pipeline;
pub mod runtime;
pub mod scheduler;
pub mod solution;
pub mod value;
