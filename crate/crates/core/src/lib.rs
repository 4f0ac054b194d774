//! A small dynamic object runtime with uniform interceptor proxies,
//! object-graph swapping and method wrappers.

pub mod class_proxy;
pub mod cli;
pub mod dispatch;
pub mod error;
pub mod footprint;
pub mod ghost;
pub mod heap;
pub mod method;
mod prim_exec;
pub mod primitives;
pub mod runtime;
pub mod script;
pub mod swapper;
pub mod trace;
pub mod value;
pub mod wrappers;

pub use error::{Error, Pos, Result};
pub use ghost::{HandlerSpec, ProxyKind};
pub use runtime::Runtime;
pub use swapper::Report;
pub use trace::{TraceMode, TraceRecord};
pub use value::{Handle, Value};
