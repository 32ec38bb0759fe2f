//! Python front end: tokenizer, syntax tree and an error-tolerant parser.

pub mod ast;
pub mod lexer;
pub mod parser;

pub use ast::*;
pub use parser::parse_module;
