//! Values storable in an amoebot's public memory. The domain is deliberately
//! small (integers, booleans, symbols, lattice edges, local direction labels)
//! so the constant-size memory assumption stays checkable.

use crate::lattice::Edge;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Mutex;

/// A public-memory value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    None,
    Int(i32),
    Bool(bool),
    /// A named enumeration constant, e.g. a protocol state.
    Sym(&'static str),
    /// A local direction label 0..5 in the owner's frame.
    Dir(u8),
    /// A directed lattice edge, the engine-level identity for links that must
    /// survive relabeling across shape changes.
    Edge(Edge),
}

impl Value {
    pub fn as_int(self) -> Option<i32> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_sym(self) -> Option<&'static str> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_dir(self) -> Option<u8> {
        match self {
            Value::Dir(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_edge(self) -> Option<Edge> {
        match self {
            Value::Edge(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_none(self) -> bool {
        matches!(self, Value::None)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::None => write!(f, "none"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::Dir(d) => write!(f, "dir{d}"),
            Value::Edge(e) => write!(f, "({},{})->({},{})", e.from.q, e.from.r, e.to.q, e.to.r),
        }
    }
}

static SYMBOLS: Mutex<BTreeSet<&'static str>> = Mutex::new(BTreeSet::new());

/// Interns a symbol name so deserialized values compare like compile-time
/// symbols. The namespace is bounded by the algorithms' variable schemas.
pub fn intern(name: &str) -> &'static str {
    let mut table = SYMBOLS.lock().unwrap();
    if let Some(s) = table.get(name) {
        return s;
    }
    let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
    table.insert(leaked);
    leaked
}

/// A small flat key-value store for amoebot memories. Keys are interned
/// names, so lookups are pointer comparisons in the common case and the store
/// clones without string allocation. Capacity is bounded by the caller to
/// keep memories constant-size.
#[derive(Debug, Clone, Default)]
pub struct Memory(Vec<(&'static str, Value)>);

impl Memory {
    pub fn new() -> Self {
        Memory(Vec::new())
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.0
            .iter()
            .find(|(k, _)| std::ptr::eq(*k as *const str, name as *const str) || *k == name)
            .map(|&(_, v)| v)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// Inserts or updates; returns true when the name was new.
    pub fn insert(&mut self, name: &'static str, value: Value) -> bool {
        for entry in &mut self.0 {
            if std::ptr::eq(entry.0 as *const str, name as *const str) || entry.0 == name {
                entry.1 = value;
                return false;
            }
        }
        self.0.push((name, value));
        true
    }

    pub fn insert_named(&mut self, name: &str, value: Value) -> bool {
        self.insert(intern(name), value)
    }

    pub fn remove(&mut self, name: &str) {
        self.0.retain(|(k, _)| *k != name);
    }

    pub fn clear(&mut self) {
        self.0.clear();
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, Value)> + '_ {
        self.0.iter().copied()
    }
}

impl PartialEq for Memory {
    fn eq(&self, other: &Self) -> bool {
        if self.0.len() != other.0.len() {
            return false;
        }
        self.0.iter().all(|&(k, v)| other.get(k) == Some(v))
    }
}

impl FromIterator<(&'static str, Value)> for Memory {
    fn from_iter<T: IntoIterator<Item = (&'static str, Value)>>(iter: T) -> Self {
        let mut m = Memory::new();
        for (k, v) in iter {
            m.insert(k, v);
        }
        m
    }
}

impl Serialize for Memory {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let sorted: BTreeMap<&str, Value> = self.0.iter().map(|&(k, v)| (k, v)).collect();
        sorted.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Memory {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let map: BTreeMap<String, Value> = BTreeMap::deserialize(de)?;
        Ok(map.into_iter().map(|(k, v)| (intern(&k), v)).collect())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ValueRepr {
    None,
    Int(i32),
    Bool(bool),
    Sym(String),
    Dir(u8),
    Edge(Edge),
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let repr = match *self {
            Value::None => ValueRepr::None,
            Value::Int(i) => ValueRepr::Int(i),
            Value::Bool(b) => ValueRepr::Bool(b),
            Value::Sym(s) => ValueRepr::Sym(s.to_owned()),
            Value::Dir(d) => ValueRepr::Dir(d),
            Value::Edge(e) => ValueRepr::Edge(e),
        };
        repr.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        Ok(match ValueRepr::deserialize(de)? {
            ValueRepr::None => Value::None,
            ValueRepr::Int(i) => Value::Int(i),
            ValueRepr::Bool(b) => Value::Bool(b),
            ValueRepr::Sym(s) => Value::Sym(intern(&s)),
            ValueRepr::Dir(d) => {
                if d >= 6 {
                    return Err(D::Error::custom("direction label out of range"));
                }
                Value::Dir(d)
            }
            ValueRepr::Edge(e) => Value::Edge(e),
        })
    }
}
