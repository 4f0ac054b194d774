//! Values held in slots, variables and argument lists.

use std::fmt;

/// Opaque reference into the object table.
///
/// A handle names a table slot, not a payload. `become` exchanges the
/// payloads behind two handles, so a handle held anywhere keeps denoting
/// "whatever now sits in that slot".
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Handle(u32);

impl Handle {
    pub(crate) fn from_index(index: usize) -> Self {
        Handle(u32::try_from(index).expect("object table exceeds u32 range"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn ordinal(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

/// A slot value.
///
/// Derived equality compares raw handles. Use `Runtime::identical` for
/// identity, which resolves forwarding first.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub enum Value {
    #[default]
    Nil,
    Int(i64),
    Ref(Handle),
}

impl Value {
    pub fn as_handle(self) -> Option<Handle> {
        match self {
            Value::Ref(h) => Some(h),
            _ => None,
        }
    }

    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn is_nil(self) -> bool {
        matches!(self, Value::Nil)
    }
}

impl From<Handle> for Value {
    fn from(h: Handle) -> Self {
        Value::Ref(h)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}
