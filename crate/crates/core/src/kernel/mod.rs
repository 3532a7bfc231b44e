//! Terms, values, and the structural operations on them.

pub mod canon;
pub mod expr;
pub mod value;

pub use canon::{canonicalize, canonicalize_expr, decode, Decl, Sequent};
pub use expr::{
    distribute_prime, expand_definitions, resolve_bang, BinOp, DefEnv, Definition, Expr, Hint,
    KernelError, Layout, Level, Quant, SourcePos,
};
pub use value::{Value, ValueError};
