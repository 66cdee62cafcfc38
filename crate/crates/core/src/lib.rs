//! Compiler from set-based quantum-state specifications to level-synchronized
//! tree automata, plus a brute-force reference semantics.

pub mod amplitude;
pub mod ast;
pub mod build;
pub mod lsta;
pub mod oracle;
pub mod parser;
pub mod pipeline;
pub mod preprocess;
pub mod qubit_reorder;
pub mod var_reorder;
