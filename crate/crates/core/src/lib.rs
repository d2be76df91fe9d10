//! An executable metamodelling kernel with grammars, mappings and
//! synchronisation rules.

pub mod cli;
pub mod env;
pub mod error;
pub mod kernel;
pub mod statemachine;
pub mod value;
pub mod xaction;
pub mod xbnf;
pub mod xmap;
pub mod xocl;
pub mod xsync;

pub use env::Env;
pub use error::{Error, Result};
pub use kernel::Registry;
pub use value::{ObjId, Value};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/objects.md")]
    mod objects {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/grammars.md")]
    mod grammars {}
    #[doc = include_str!("../../../book/src/mappings.md")]
    mod mappings {}
    #[doc = include_str!("../../../book/src/sync.md")]
    mod sync {}
    #[doc = include_str!("../../../book/src/state-machines.md")]
    mod state_machines {}
    #[doc = include_str!("../../../book/src/xaction.md")]
    mod xaction {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
